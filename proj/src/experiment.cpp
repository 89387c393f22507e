#include "selftrig/experiment.hpp"

#include "selftrig/errors.hpp"
#include "selftrig/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace selftrig {

std::vector<std::uint64_t> sigma_star_candidates(const HorizonSpace& space,
                                                 const DiscretizationCache& cache, double beta,
                                                 std::optional<double> shift,
                                                 std::size_t limit) {
  const auto total = static_cast<std::int64_t>(space.count());
  std::vector<char> ok(static_cast<std::size_t>(total), 0);
  const int workers = worker_count();

#pragma omp parallel for schedule(dynamic, 4096) num_threads(workers)
  for (std::int64_t i = 0; i < total; ++i) {
    const SamplingHorizon h = space.horizon_at(static_cast<std::uint64_t>(i));
    const double r = spectral_radius(transition(h, cache));
    const double bound = std::exp(-beta * h.duration()) - shift.value_or(0.0);
    ok[static_cast<std::size_t>(i)] = r * r < bound ? 1 : 0;
  }

  struct Key {
    std::uint64_t index;
    std::size_t length;
    double average;
  };
  std::vector<Key> keys;
  for (std::int64_t i = 0; i < total; ++i) {
    if (!ok[static_cast<std::size_t>(i)]) continue;
    const SamplingHorizon h = space.horizon_at(static_cast<std::uint64_t>(i));
    keys.push_back({static_cast<std::uint64_t>(i), h.length(), h.average()});
  }
  const bool by_length = shift.has_value();
  std::stable_sort(keys.begin(), keys.end(), [&](const Key& a, const Key& b) {
    if (by_length && a.length != b.length) return a.length < b.length;
    const int cmp = compare_average(a.average, b.average);
    if (cmp != 0) return cmp > 0;
    return a.index < b.index;
  });
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < keys.size() && i < limit; ++i) out.push_back(keys[i].index);
  return out;
}

Experiment::Experiment(Scenario scenario, int threads)
    : scenario_(std::move(scenario)), threads_(threads) {
  validate(scenario_);
  plant_ = std::make_unique<PlantModel>(scenario_.a, scenario_.b, scenario_.k, scenario_.d,
                                        scenario_.w_max);
  space_ = std::make_unique<HorizonSpace>(scenario_.gamma, scenario_.l_min, scenario_.l_max);
  cache_ = std::make_unique<DiscretizationCache>(*plant_, space_->gamma());
  build_certificate();
  if (scenario_.offline()) {
    partition_.emplace(build_partition(static_cast<int>(plant_->state_dim()), scenario_.regions,
                                       scenario_.overlap));
  } else if (perturbed()) {
    online_ = std::make_unique<OnlineMechanism>(*pcert_, *space_, *cache_);
  } else {
    online_ = std::make_unique<OnlineMechanism>(*cert_, *space_, *cache_);
  }
}

void Experiment::build_certificate() {
  const auto& spec = scenario_.certificate;
  const double beta = scenario_.beta;

  if (!perturbed()) {
    if (spec.inline_matrices) {
      auto make = [&](const SamplingHorizon& h) {
        return StabilityCertificate{SymmetricMatrix(*spec.p), beta, h,
                                    std::exp(-beta * h.duration())};
      };
      if (spec.sigma_star) {
        cert_ = make(SamplingHorizon(*spec.sigma_star));
        return;
      }
      const auto cands = sigma_star_candidates(*space_, *cache_, beta, std::nullopt, 20000);
      if (cands.empty()) throw InfeasibleError("no horizon in the space has a stable transition");
      for (auto i : cands) {
        const SamplingHorizon h = space_->horizon_at(i);
        auto c = make(h);
        if (verify_unperturbed(c, transition(h, *cache_)).pass()) {
          cert_ = std::move(c);
          return;
        }
      }
      cert_ = make(space_->horizon_at(cands.front()));
      return;
    }
    if (spec.sigma_star) {
      const SamplingHorizon h(*spec.sigma_star);
      cert_ = certify_unperturbed(transition(h, *cache_), beta, h);
      return;
    }
    const auto cands = sigma_star_candidates(*space_, *cache_, beta, std::nullopt, 64);
    std::string last = "no horizon in the space has a transition with squared spectral radius "
                       "below e^{-beta*duration}";
    for (auto i : cands) {
      const SamplingHorizon h = space_->horizon_at(i);
      try {
        cert_ = certify_unperturbed(transition(h, *cache_), beta, h);
        return;
      } catch (const Error& e) {
        last = e.what();
      }
    }
    throw InfeasibleError("automatic certificate failed: " + last);
  }

  const bool online = scenario_.mechanism == Mechanism::online_perturbed;
  const PerturbedConstants constants = perturbed_constants(*plant_, *space_, scenario_.varpi);
  const double shift = online ? scenario_.gamma_online : scenario_.gamma1;

  PerturbedCertificate base;
  base.variant = online ? PerturbedVariant::online : PerturbedVariant::offline;
  base.beta = beta;
  base.gamma = online ? scenario_.gamma_online : 0.0;
  base.gamma1 = online ? 0.0 : scenario_.gamma1;
  base.gamma2 = online ? 0.0 : scenario_.gamma2;
  base.constants = constants;
  base.mu_variant = scenario_.mu_variant;

  if (spec.inline_matrices) {
    base.p = SymmetricMatrix(*spec.p);
    if (online) base.m = SymmetricMatrix(*spec.m);
    auto make = [&](const SamplingHorizon& h) {
      PerturbedCertificate c = base;
      c.sigma_star = h;
      finalize(c);
      return c;
    };
    if (spec.sigma_star) {
      pcert_ = make(SamplingHorizon(*spec.sigma_star));
      return;
    }
    const auto cands = sigma_star_candidates(*space_, *cache_, beta, shift, 20000);
    if (cands.empty()) {
      throw InfeasibleError("no horizon satisfies the spectral necessary condition for this gamma");
    }
    std::optional<PerturbedCertificate> without_disturbance;
    for (auto i : cands) {
      const SamplingHorizon h = space_->horizon_at(i);
      const Matrix phi = transition(h, *cache_);
      auto c = make(h);
      if (verify_perturbed(c, phi).pass()) {
        pcert_ = std::move(c);
        return;
      }
      if (!without_disturbance) {
        PerturbedCertificate z = c;
        z.constants.varpi = 0.0;
        finalize(z);
        if (verify_perturbed(z, phi).pass()) without_disturbance = std::move(c);
      }
    }
    pcert_ = without_disturbance ? *without_disturbance : make(space_->horizon_at(cands.front()));
    return;
  }

  PerturbedSearch search;
  search.variant = base.variant;
  search.beta = beta;
  search.gamma = base.gamma;
  search.gamma1 = base.gamma1;
  search.gamma2 = base.gamma2;
  search.mu_variant = base.mu_variant;
  if (spec.sigma_star) {
    const SamplingHorizon h(*spec.sigma_star);
    pcert_ = find_perturbed_certificate(transition(h, *cache_), h, constants, search);
    return;
  }
  const auto cands = sigma_star_candidates(*space_, *cache_, beta, shift, 200);
  std::string last = "no horizon satisfies the spectral necessary condition for this gamma";
  for (auto i : cands) {
    const SamplingHorizon h = space_->horizon_at(i);
    try {
      pcert_ = find_perturbed_certificate(transition(h, *cache_), h, constants, search);
      return;
    } catch (const InfeasibleError& e) {
      last = e.what();
    }
  }
  throw InfeasibleError("automatic perturbed certificate failed: " + last);
}

const SymmetricMatrix& Experiment::lyapunov() const { return cert_ ? cert_->p : pcert_->p; }

const SamplingHorizon& Experiment::sigma_star() const {
  return cert_ ? cert_->sigma_star : pcert_->sigma_star;
}

Matrix Experiment::sigma_star_transition() const { return transition(sigma_star(), *cache_); }

CertificateReport Experiment::certificate_report(Tolerance tol) const {
  if (cert_) return verify_unperturbed(*cert_, sigma_star_transition());
  return verify_perturbed(*pcert_, sigma_star_transition(), tol);
}

double Experiment::max_admissible_varpi(Tolerance tol) const {
  if (!pcert_) throw DomainError("admissible disturbance bound only applies to perturbed modes");
  return selftrig::max_admissible_varpi(*pcert_, sigma_star_transition(), tol);
}

const ConicPartition& Experiment::partition() const {
  if (!partition_) throw DomainError("scenario mode has no conic partition");
  return *partition_;
}

const RegionPolicy& Experiment::build_policy(bool reference) {
  if (!partition_) throw DomainError("scenario mode has no conic partition");
  if (perturbed()) {
    policy_ = precompute_offline_perturbed(*pcert_, *space_, *cache_, *partition_, reference, threads_);
  } else {
    policy_ = precompute_offline_unperturbed(*cert_, *space_, *cache_, *partition_, reference, threads_);
  }
  return *policy_;
}

void Experiment::set_policy(RegionPolicy policy) {
  if (!partition_) throw ValidationError("scenario mode does not use a policy");
  check_policy(policy, *space_, *partition_);
  if (policy.perturbed != perturbed()) {
    throw ValidationError("policy variant does not match the scenario mode");
  }
  if (policy.seed_index != space_->index_of(sigma_star())) {
    throw ValidationError("policy was built for a different sigma*");
  }
  policy_ = std::move(policy);
}

const OnlineMechanism& Experiment::online() const {
  if (!online_) throw DomainError("scenario mode is not an online mechanism");
  return *online_;
}

TieBreaker Experiment::tie_breaker() const {
  return scenario_.seeded_ties ? TieBreaker::seeded(scenario_.seed) : TieBreaker();
}

Decider Experiment::decider(TieBreaker& ties) const {
  if (online_) {
    return [this, &ties](const Vector& x) { return online_->decide(x, ties, true, threads_); };
  }
  if (!policy_) {
    throw ValidationError("offline mode needs a policy; run `selftrig partition` first "
                          "or pass --policy");
  }
  const PerturbedCertificate* pc = pcert_ ? &*pcert_ : nullptr;
  return [this, &ties, pc](const Vector& x) {
    return decide_offline(x, *policy_, *partition_, *space_, ties, pc);
  };
}

SimulationTrace Experiment::simulate() const {
  const auto report = certificate_report();
  if (!report.pass()) {
    std::ostringstream os;
    os << "certificate does not verify (worst margin " << report.worst_margin()
       << "); refusing to simulate";
    throw InfeasibleError(os.str());
  }
  if (scenario_.x0.size() == 0) throw ValidationError("scenario has no simulation.x0");
  TieBreaker ties = tie_breaker();
  const Decider decide = decider(ties);
  SimulationConfig cfg;
  cfg.x0 = scenario_.x0;
  cfg.t_end = scenario_.t_end;
  cfg.substep = scenario_.substep;
  cfg.dense_step = scenario_.dense_step;
  return run(*plant_, *cache_, decide, lyapunov(), cfg,
             perturbed() ? &scenario_.disturbance : nullptr);
}

TraceReport Experiment::verify(const SimulationTrace& trace) const {
  if (cert_) return verify_unperturbed_trace(trace, cert_->p, cert_->beta);
  return verify_perturbed_trace(trace, pcert_->p, pcert_->mu);
}

}  // namespace selftrig
