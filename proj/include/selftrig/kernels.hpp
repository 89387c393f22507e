#pragma once

#include "selftrig/horizons.hpp"
#include "selftrig/linalg.hpp"
#include "selftrig/partition.hpp"
#include "selftrig/plant.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace selftrig {

/// Worker count for parallel kernels: `requested` if positive, else the OpenMP
/// default, capped by the SELFTRIG_THREADS environment variable when set.
int worker_count(int requested = 0);

/// Closed-loop matrices in Γ order, for the odometer-driven scans.
struct ScanTable {
  const HorizonSpace* space = nullptr;
  std::vector<Matrix> closed;
};

ScanTable make_scan_table(const HorizonSpace& space, const DiscretizationCache& cache);

/// Pointwise horizon test at a fixed state x, with y = Φ_σ x and v = xᵀPx:
///   feasible iff yᵀWy − (e^{−β·duration(σ)} − shift)·v + offset[|σ|] <= 0.
/// The unperturbed test is W = P, shift = 0, offset = 0; the perturbed online
/// test is W = P + M, shift = γ, offset[l] = (ϖΣC^q)²λ_max(PM⁻¹P+P) − γ.
struct HorizonTest {
  Matrix w;
  Matrix p;
  double beta = 0.0;
  double shift = 0.0;
  std::vector<double> offset;  ///< indexed by length, size l_max + 1
};

struct ScanResult {
  std::uint64_t feasible_count = 0;
  double best_average = 0.0;
  /// Global indices of feasible horizons tying the best average, ascending.
  std::vector<std::uint64_t> ties;
  [[nodiscard]] bool any() const noexcept { return !ties.empty(); }
};

ScanResult scan_serial(const ScanTable& table, const HorizonTest& test, const Vector& x);

/// Splits the enumeration into index ranges, scans each with its own cursor
/// and merges in index order, so the result equals scan_serial exactly.
ScanResult scan_parallel(const ScanTable& table, const HorizonTest& test, const Vector& x,
                         int threads = 0);

/// Region-level form of a horizon: σ is admissible for region c iff
/// some ε > 0 gives W + εQ_c ⪯ 0. `eligible == false` marks horizons that
/// cannot pass in any region.
struct RegionForm {
  SymmetricMatrix w;
  bool eligible = true;
};

using RegionFormFn =
    std::function<RegionForm(const Matrix& phi, double duration, std::size_t length)>;

struct RegionEntry {
  double average = 0.0;
  /// Global indices; the seed horizon first when it ties, the rest ascending.
  std::vector<std::uint64_t> horizons;
  /// Multiplier found for each stored horizon (0 when the seed was kept
  /// without a multiplier).
  std::vector<double> epsilons;
};

/// Unpruned reference: every region tests every horizon in enumeration order.
std::vector<RegionEntry> build_regions_serial(const HorizonSpace& space,
                                              const DiscretizationCache& cache,
                                              const ConicPartition& partition,
                                              const RegionFormFn& form, std::uint64_t seed);

/// Forms are computed once per horizon in parallel; each region then walks
/// horizons grouped by descending average and stops at the first group with a
/// survivor (or at the seed's average). Equal to build_regions_serial.
std::vector<RegionEntry> build_regions_parallel(const HorizonSpace& space,
                                                const DiscretizationCache& cache,
                                                const ConicPartition& partition,
                                                const RegionFormFn& form, std::uint64_t seed,
                                                int threads = 0);

}  // namespace selftrig
