#pragma once

#include "selftrig/linalg.hpp"

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace selftrig {

/// Continuous-time plant ẋ = A x + B u + D w with sampled state feedback u = K x(t_h).
class PlantModel {
 public:
  PlantModel(Matrix a, Matrix b, Matrix k, std::optional<Matrix> d = std::nullopt,
             double w_max = 0.0);

  [[nodiscard]] const Matrix& a() const noexcept { return a_; }
  [[nodiscard]] const Matrix& b() const noexcept { return b_; }
  [[nodiscard]] const Matrix& k() const noexcept { return k_; }
  [[nodiscard]] const std::optional<Matrix>& d() const noexcept { return d_; }
  [[nodiscard]] double w_max() const noexcept { return w_max_; }
  [[nodiscard]] Eigen::Index state_dim() const noexcept { return a_.rows(); }
  [[nodiscard]] Eigen::Index input_dim() const noexcept { return b_.cols(); }

  /// Whether A + BK is Hurwitz. Advisory only; nothing downstream requires it.
  [[nodiscard]] bool closed_loop_hurwitz() const noexcept { return hurwitz_; }

  [[nodiscard]] PlantModel with_w_max(double w_max) const;

 private:
  Matrix a_;
  Matrix b_;
  Matrix k_;
  std::optional<Matrix> d_;
  double w_max_ = 0.0;
  bool hurwitz_ = false;
};

/// Zero-order-hold discretization over one interval T:
/// A_T = e^{AT}, B_T = ∫₀ᵀ e^{As} ds B, closed = A_T + B_T K.
struct Discretization {
  double interval = 0.0;
  Matrix a_t;
  Matrix b_t;
  Matrix closed;
};

/// Exact ZOH discretization from one augmented exponential exp([[A, B], [0, 0]] T).
Discretization discretize(const PlantModel& plant, double interval);

/// Discretizations for a fixed set of intervals, built once and then read-only.
class DiscretizationCache {
 public:
  DiscretizationCache() = default;
  DiscretizationCache(const PlantModel& plant, std::span<const double> intervals);

  [[nodiscard]] bool contains(double interval) const;
  /// Throws Error if the interval was never cached.
  [[nodiscard]] const Discretization& at(double interval) const;
  [[nodiscard]] const Matrix& closed(double interval) const { return at(interval).closed; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] Eigen::Index state_dim() const noexcept { return n_; }

 private:
  std::map<double, Discretization> entries_;
  Eigen::Index n_ = 0;
};

/// C = max over T in Γ of ‖Ã_T‖₂.
double growth_constant(const PlantModel& plant, std::span<const double> gamma);

/// Upper bound w_max ∫₀ᵀ ‖e^{As} D‖₂ ds on the discretized disturbance over one
/// interval, by composite Simpson quadrature with the given (even) panel count.
double perturbation_bound(const PlantModel& plant, double interval, int panels = 200);

/// ϖ = max over T in Γ of perturbation_bound(T).
double perturbation_bound_max(const PlantModel& plant, std::span<const double> gamma);

/// C′ = ‖Ã_{T_max}‖₂.
double fallback_norm(const PlantModel& plant, double t_max);

}  // namespace selftrig
