#pragma once

#include "selftrig/certificates.hpp"
#include "selftrig/horizons.hpp"
#include "selftrig/partition.hpp"
#include "selftrig/plant.hpp"
#include "selftrig/scenario.hpp"
#include "selftrig/sim.hpp"
#include "selftrig/trigger.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace selftrig {

/// Certifiable σ* candidates, best first. Unperturbed: ρ(Φ)² < e^{−β·dur},
/// ordered by average (descending) then index. Perturbed: ρ(Φ)² < e^{−β·dur} − shift,
/// ordered by length, then average (descending), then index. At most `limit` entries.
std::vector<std::uint64_t> sigma_star_candidates(const HorizonSpace& space,
                                                 const DiscretizationCache& cache, double beta,
                                                 std::optional<double> shift,
                                                 std::size_t limit);

/// Everything a scenario needs, built once: plant, horizon space, cached
/// discretizations, the certificate and (offline) partition and policy.
class Experiment {
 public:
  explicit Experiment(Scenario scenario, int threads = 0);

  [[nodiscard]] const Scenario& scenario() const noexcept { return scenario_; }
  [[nodiscard]] const PlantModel& plant() const noexcept { return *plant_; }
  [[nodiscard]] const HorizonSpace& space() const noexcept { return *space_; }
  [[nodiscard]] const DiscretizationCache& cache() const noexcept { return *cache_; }
  [[nodiscard]] int threads() const noexcept { return threads_; }

  [[nodiscard]] bool perturbed() const noexcept { return scenario_.perturbed(); }
  [[nodiscard]] const StabilityCertificate* certificate() const noexcept {
    return cert_ ? &*cert_ : nullptr;
  }
  [[nodiscard]] const PerturbedCertificate* perturbed_certificate() const noexcept {
    return pcert_ ? &*pcert_ : nullptr;
  }
  [[nodiscard]] const SymmetricMatrix& lyapunov() const;
  [[nodiscard]] const SamplingHorizon& sigma_star() const;
  [[nodiscard]] Matrix sigma_star_transition() const;

  /// Verification of the certificate in use against its σ*.
  [[nodiscard]] CertificateReport certificate_report(Tolerance tol = {}) const;
  /// Perturbed only: largest ϖ for which the certificate still verifies.
  [[nodiscard]] double max_admissible_varpi(Tolerance tol = {}) const;

  [[nodiscard]] const ConicPartition& partition() const;
  [[nodiscard]] const RegionPolicy* policy() const noexcept { return policy_ ? &*policy_ : nullptr; }
  const RegionPolicy& build_policy(bool reference = false);
  /// Installs a policy loaded from disk; throws ValidationError when it does not match.
  void set_policy(RegionPolicy policy);

  [[nodiscard]] const OnlineMechanism& online() const;
  [[nodiscard]] TieBreaker tie_breaker() const;
  [[nodiscard]] Decider decider(TieBreaker& ties) const;

  /// Throws InfeasibleError when the certificate does not verify, and
  /// ValidationError for an offline mode without a policy.
  [[nodiscard]] SimulationTrace simulate() const;
  [[nodiscard]] TraceReport verify(const SimulationTrace& trace) const;

 private:
  void build_certificate();

  Scenario scenario_;
  int threads_ = 0;
  std::unique_ptr<PlantModel> plant_;
  std::unique_ptr<HorizonSpace> space_;
  std::unique_ptr<DiscretizationCache> cache_;
  std::optional<StabilityCertificate> cert_;
  std::optional<PerturbedCertificate> pcert_;
  std::optional<ConicPartition> partition_;
  std::optional<RegionPolicy> policy_;
  std::unique_ptr<OnlineMechanism> online_;
};

}  // namespace selftrig
