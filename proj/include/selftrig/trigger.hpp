#pragma once

#include "selftrig/certificates.hpp"
#include "selftrig/horizons.hpp"
#include "selftrig/kernels.hpp"
#include "selftrig/partition.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace selftrig {

enum class TriggerMode {
  online_unperturbed,
  offline_unperturbed,
  online_perturbed,
  offline_perturbed,
  fallback_tmax,
};

std::string to_string(TriggerMode mode);

/// How one horizon is taken from an optimal set. `first` takes the head of the
/// set (σ* when it ties, otherwise enumeration order); `seeded_random` draws
/// uniformly with a 64-bit Mersenne Twister.
class TieBreaker {
 public:
  enum class Kind { first, seeded_random };

  TieBreaker() = default;
  static TieBreaker seeded(std::uint64_t seed);

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  std::size_t pick(std::size_t n);

 private:
  Kind kind_ = Kind::first;
  std::uint64_t seed_ = 0;
  std::mt19937_64 rng_;
};

struct TriggerDecision {
  SamplingHorizon horizon;
  std::uint64_t feasible_count = 0;
  std::uint64_t tie_count = 1;
  TriggerMode mode = TriggerMode::online_unperturbed;
};

/// Horizons with maximal average among {σ*} ∪ feasible, σ* first when it
/// belongs, the rest in enumeration order.
struct OptimalSet {
  std::vector<std::uint64_t> indices;
  double average = 0.0;
  std::uint64_t feasible_count = 0;
};

OptimalSet optimal_set(const ScanResult& scan, std::uint64_t seed_index, double seed_average);

// --- online mechanisms --------------------------------------------------------

/// Scan state shared across decisions: certificate-dependent test data and the
/// closed-loop table. The space and cache must outlive it.
class OnlineMechanism {
 public:
  OnlineMechanism(const StabilityCertificate& cert, const HorizonSpace& space,
                  const DiscretizationCache& cache);
  OnlineMechanism(const PerturbedCertificate& cert, const HorizonSpace& space,
                  const DiscretizationCache& cache);

  [[nodiscard]] bool perturbed() const noexcept { return perturbed_; }
  [[nodiscard]] const HorizonTest& test() const noexcept { return test_; }
  [[nodiscard]] const HorizonSpace& space() const noexcept { return *space_; }

  /// Optimal set at x. Not meaningful for perturbed states inside E(P,1).
  [[nodiscard]] OptimalSet optimal(const Vector& x, bool parallel = true, int threads = 0) const;
  TriggerDecision decide(const Vector& x, TieBreaker& ties, bool parallel = true,
                         int threads = 0) const;

 private:
  const HorizonSpace* space_;
  ScanTable table_;
  HorizonTest test_;
  SymmetricMatrix p_;
  std::uint64_t seed_index_ = 0;
  double seed_average_ = 0.0;
  bool perturbed_ = false;
};

TriggerDecision decide_online_unperturbed(const Vector& x, const StabilityCertificate& cert,
                                          const HorizonSpace& space,
                                          const DiscretizationCache& cache, TieBreaker& ties);

TriggerDecision decide_online_perturbed(const Vector& x, const PerturbedCertificate& cert,
                                        const HorizonSpace& space,
                                        const DiscretizationCache& cache, TieBreaker& ties);

/// Test data of the unperturbed/perturbed online predicates.
HorizonTest unperturbed_test(const StabilityCertificate& cert, int l_max);
HorizonTest perturbed_test(const PerturbedCertificate& cert, int l_max);

// --- offline mechanisms -------------------------------------------------------

struct RegionPolicy {
  bool perturbed = false;
  int regions = 0;
  double overlap = kDefaultOverlap;
  std::vector<double> gamma;
  int l_min = 1;
  int l_max = 1;
  std::uint64_t seed_index = 0;
  /// Ψ_(c) for c = 1..regions.
  std::vector<RegionEntry> entries;
  /// Perturbed only: λ_min of the full block matrix at each stored (σ, ε).
  std::vector<std::vector<double>> audit_min_eigenvalue;
};

RegionFormFn unperturbed_region_form(const StabilityCertificate& cert);
RegionFormFn perturbed_region_form(const PerturbedCertificate& cert);

/// `reference` selects the unpruned serial builder (for testing).
RegionPolicy precompute_offline_unperturbed(const StabilityCertificate& cert,
                                            const HorizonSpace& space,
                                            const DiscretizationCache& cache,
                                            const ConicPartition& partition,
                                            bool reference = false, int threads = 0);

RegionPolicy precompute_offline_perturbed(const PerturbedCertificate& cert,
                                          const HorizonSpace& space,
                                          const DiscretizationCache& cache,
                                          const ConicPartition& partition,
                                          bool reference = false, int threads = 0);

/// Throws ValidationError when the policy was built for a different space or partition.
void check_policy(const RegionPolicy& policy, const HorizonSpace& space,
                  const ConicPartition& partition);

/// Region lookup and selection from Ψ_(c). With a perturbed certificate,
/// states inside E(P,1) get the fallback (T_max) first.
TriggerDecision decide_offline(const Vector& x, const RegionPolicy& policy,
                               const ConicPartition& partition, const HorizonSpace& space,
                               TieBreaker& ties, const PerturbedCertificate* cert = nullptr);

// --- pointwise checks ---------------------------------------------------------

inline constexpr double kPointwiseTolerance = 1e-8;

/// xᵀ(ΦᵀPΦ − e^{−β·dur}P)x / ‖x‖² (0 at the origin); sound when <= 1e-8.
double unperturbed_pointwise(const StabilityCertificate& cert, const Matrix& phi, double duration,
                             const Vector& x);

/// min over w of the offline block form at (x, w, 1), i.e. xᵀSx + γ₁ − γ₂ with S
/// the Schur complement of the w block; −∞ when that block is not positive
/// definite. Sound when >= −1e-8·max(1, ‖x‖²).
double offline_perturbed_pointwise(const PerturbedCertificate& cert, const Matrix& phi,
                                   double duration, std::size_t length, const Vector& x);

}  // namespace selftrig
