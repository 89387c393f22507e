#pragma once

#include "selftrig/linalg.hpp"

#include <optional>
#include <vector>

namespace selftrig {

/// Relative widening of each sector so neighbours overlap on their shared edge.
inline constexpr double kDefaultOverlap = 1e-6;

/// Covering of the plane by N sign-symmetric cones {x : xᵀQ_c x >= 0}.
/// Region c (1-based) has axis angle (c − ½)π/N.
class ConicPartition {
 public:
  ConicPartition(int state_dim, int count, double overlap = kDefaultOverlap);

  [[nodiscard]] int count() const noexcept { return static_cast<int>(regions_.size()); }
  [[nodiscard]] double half_angle() const noexcept { return half_angle_; }
  [[nodiscard]] double overlap() const noexcept { return overlap_; }
  /// Q_c for 1-based c.
  [[nodiscard]] const SymmetricMatrix& region(int c) const;
  [[nodiscard]] const Vector& axis(int c) const;
  [[nodiscard]] const std::vector<SymmetricMatrix>& regions() const noexcept { return regions_; }

 private:
  std::vector<SymmetricMatrix> regions_;
  std::vector<Vector> axes_;
  double half_angle_ = 0.0;
  double overlap_ = 0.0;
};

/// Throws DimensionError for n != 2.
ConicPartition build_partition(int state_dim, int count, double overlap = kDefaultOverlap);

/// Smallest 1-based c with xᵀQ_c x >= 0; the origin maps to region 1.
int region_of(const ConicPartition& partition, const Vector& x);

/// λ_min(−W − εQ) >= −this is accepted as feasible.
inline constexpr double kEpsilonFeasibility = 1e-8;

/// Some ε in [1e-9, 1e9] with λ_min(−W − εQ) >= −1e-8, or nullopt.
/// ε ↦ λ_min(−W − εQ) is concave, so a golden-section search on log ε finds
/// its maximum over the bracket; a coarse per-decade scan picks the starting
/// bracket and returns early when a grid point already qualifies.
std::optional<double> epsilon_search(const SymmetricMatrix& w, const SymmetricMatrix& q);

}  // namespace selftrig
