#include "selftrig/trigger.hpp"

#include "selftrig/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace selftrig {

std::string to_string(TriggerMode mode) {
  switch (mode) {
    case TriggerMode::online_unperturbed: return "online-unperturbed";
    case TriggerMode::offline_unperturbed: return "offline-unperturbed";
    case TriggerMode::online_perturbed: return "online-perturbed";
    case TriggerMode::offline_perturbed: return "offline-perturbed";
    case TriggerMode::fallback_tmax: return "fallback-Tmax";
  }
  return "unknown";
}

TieBreaker TieBreaker::seeded(std::uint64_t seed) {
  TieBreaker t;
  t.kind_ = Kind::seeded_random;
  t.seed_ = seed;
  t.rng_.seed(seed);
  return t;
}

std::size_t TieBreaker::pick(std::size_t n) {
  if (n == 0) throw DomainError("tie-break over an empty set");
  if (kind_ == Kind::first || n == 1) return 0;
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(rng_);
}

OptimalSet optimal_set(const ScanResult& scan, std::uint64_t seed_index, double seed_average) {
  OptimalSet out;
  out.feasible_count = scan.feasible_count;
  const int cmp = scan.any() ? compare_average(seed_average, scan.best_average) : 1;
  if (cmp >= 0) {
    out.average = seed_average;
    out.indices.push_back(seed_index);
  } else {
    out.average = scan.best_average;
  }
  if (cmp <= 0) {
    for (auto i : scan.ties) {
      if (i != seed_index) out.indices.push_back(i);
    }
  }
  return out;
}

// --- online ---------------------------------------------------------------------

HorizonTest unperturbed_test(const StabilityCertificate& cert, int l_max) {
  HorizonTest t;
  t.w = cert.p.matrix();
  t.p = cert.p.matrix();
  t.beta = cert.beta;
  t.shift = 0.0;
  t.offset.assign(static_cast<std::size_t>(l_max) + 1, 0.0);
  return t;
}

HorizonTest perturbed_test(const PerturbedCertificate& cert, int l_max) {
  if (cert.variant != PerturbedVariant::online || !cert.m) {
    throw DomainError("online perturbed test needs an online certificate with M");
  }
  HorizonTest t;
  t.w = cert.p.matrix() + cert.m->matrix();
  t.p = cert.p.matrix();
  t.beta = cert.beta;
  t.shift = cert.gamma;
  t.offset.assign(static_cast<std::size_t>(l_max) + 1, 0.0);
  for (int l = 1; l <= l_max; ++l) {
    const double g = disturbance_gain(cert.constants, static_cast<std::size_t>(l));
    t.offset[static_cast<std::size_t>(l)] = g * g * cert.lambda_pmp - cert.gamma;
  }
  return t;
}

OnlineMechanism::OnlineMechanism(const StabilityCertificate& cert, const HorizonSpace& space,
                                 const DiscretizationCache& cache)
    : space_(&space),
      table_(make_scan_table(space, cache)),
      test_(unperturbed_test(cert, space.l_max())),
      p_(cert.p),
      seed_index_(space.index_of(cert.sigma_star)),
      seed_average_(cert.sigma_star.average()),
      perturbed_(false) {}

OnlineMechanism::OnlineMechanism(const PerturbedCertificate& cert, const HorizonSpace& space,
                                 const DiscretizationCache& cache)
    : space_(&space),
      table_(make_scan_table(space, cache)),
      test_(perturbed_test(cert, space.l_max())),
      p_(cert.p),
      seed_index_(space.index_of(cert.sigma_star)),
      seed_average_(cert.sigma_star.average()),
      perturbed_(true) {}

OptimalSet OnlineMechanism::optimal(const Vector& x, bool parallel, int threads) const {
  const ScanResult scan =
      parallel ? scan_parallel(table_, test_, x, threads) : scan_serial(table_, test_, x);
  return optimal_set(scan, seed_index_, seed_average_);
}

TriggerDecision OnlineMechanism::decide(const Vector& x, TieBreaker& ties, bool parallel,
                                        int threads) const {
  TriggerDecision d;
  if (perturbed_ && in_ellipsoid(p_, 1.0, x)) {
    d.horizon = SamplingHorizon({space_->t_max()});
    d.feasible_count = 1;
    d.tie_count = 1;
    d.mode = TriggerMode::fallback_tmax;
    return d;
  }
  const OptimalSet set = optimal(x, parallel, threads);
  d.horizon = space_->horizon_at(set.indices[ties.pick(set.indices.size())]);
  d.feasible_count = set.feasible_count;
  d.tie_count = set.indices.size();
  d.mode = perturbed_ ? TriggerMode::online_perturbed : TriggerMode::online_unperturbed;
  return d;
}

TriggerDecision decide_online_unperturbed(const Vector& x, const StabilityCertificate& cert,
                                          const HorizonSpace& space,
                                          const DiscretizationCache& cache, TieBreaker& ties) {
  return OnlineMechanism(cert, space, cache).decide(x, ties);
}

TriggerDecision decide_online_perturbed(const Vector& x, const PerturbedCertificate& cert,
                                        const HorizonSpace& space,
                                        const DiscretizationCache& cache, TieBreaker& ties) {
  return OnlineMechanism(cert, space, cache).decide(x, ties);
}

// --- offline --------------------------------------------------------------------

namespace {

// Schur complement of the disturbance block of the offline matrix with ε = 0,
// or nullopt when that block is not positive definite.
std::optional<Matrix> offline_schur(const PerturbedCertificate& cert, const Matrix& phi,
                                    double duration, std::size_t length) {
  const Matrix& p = cert.p.matrix();
  const Eigen::Index n = p.rows();
  const Matrix u11 =
      -phi.transpose() * p * phi + (std::exp(-cert.beta * duration) - cert.gamma1) * p;
  const double chi = chi_for(PerturbedVariant::offline, cert.constants, length);
  if (chi <= 0.0) return u11;
  const SymmetricMatrix u22((cert.gamma2 / chi) * Matrix::Identity(n, n) - p);
  if (!(min_eigenvalue(u22) > 0.0)) return std::nullopt;
  const Matrix pphi = p * phi;
  return Matrix(u11 - pphi.transpose() * u22.matrix().llt().solve(pphi));
}

}  // namespace

RegionFormFn unperturbed_region_form(const StabilityCertificate& cert) {
  const Matrix p = cert.p.matrix();
  const double beta = cert.beta;
  return [p, beta](const Matrix& phi, double duration, std::size_t) {
    return RegionForm{SymmetricMatrix(phi.transpose() * p * phi - std::exp(-beta * duration) * p),
                      true};
  };
}

RegionFormFn perturbed_region_form(const PerturbedCertificate& cert) {
  if (cert.variant != PerturbedVariant::offline) {
    throw DomainError("offline perturbed policy needs an offline certificate");
  }
  return [cert](const Matrix& phi, double duration, std::size_t length) {
    const Eigen::Index n = phi.rows();
    const auto s = offline_schur(cert, phi, duration, length);
    if (!s || cert.gamma1 < cert.gamma2) return RegionForm{SymmetricMatrix::zero(n), false};
    return RegionForm{SymmetricMatrix(-*s), true};
  };
}

namespace {

RegionPolicy make_policy(bool perturbed, const HorizonSpace& space,
                         const ConicPartition& partition, std::uint64_t seed,
                         std::vector<RegionEntry> entries) {
  RegionPolicy p;
  p.perturbed = perturbed;
  p.regions = partition.count();
  p.overlap = partition.overlap();
  p.gamma = space.gamma();
  p.l_min = space.l_min();
  p.l_max = space.l_max();
  p.seed_index = seed;
  p.entries = std::move(entries);
  return p;
}

}  // namespace

RegionPolicy precompute_offline_unperturbed(const StabilityCertificate& cert,
                                            const HorizonSpace& space,
                                            const DiscretizationCache& cache,
                                            const ConicPartition& partition, bool reference,
                                            int threads) {
  const std::uint64_t seed = space.index_of(cert.sigma_star);
  const auto form = unperturbed_region_form(cert);
  auto entries = reference ? build_regions_serial(space, cache, partition, form, seed)
                           : build_regions_parallel(space, cache, partition, form, seed, threads);
  return make_policy(false, space, partition, seed, std::move(entries));
}

RegionPolicy precompute_offline_perturbed(const PerturbedCertificate& cert,
                                          const HorizonSpace& space,
                                          const DiscretizationCache& cache,
                                          const ConicPartition& partition, bool reference,
                                          int threads) {
  const std::uint64_t seed = space.index_of(cert.sigma_star);
  const auto form = perturbed_region_form(cert);
  auto entries = reference ? build_regions_serial(space, cache, partition, form, seed)
                           : build_regions_parallel(space, cache, partition, form, seed, threads);
  RegionPolicy policy = make_policy(true, space, partition, seed, std::move(entries));

  policy.audit_min_eigenvalue.resize(policy.entries.size());
  for (std::size_t c = 0; c < policy.entries.size(); ++c) {
    const auto& e = policy.entries[c];
    const SymmetricMatrix& q = partition.region(static_cast<int>(c) + 1);
    for (std::size_t k = 0; k < e.horizons.size(); ++k) {
      const SamplingHorizon h = space.horizon_at(e.horizons[k]);
      const SymmetricMatrix u = build_u_offline(transition(h, cache), h.duration(), h.length(),
                                                cert, q, e.epsilons[k]);
      policy.audit_min_eigenvalue[c].push_back(min_eigenvalue(u));
    }
  }
  return policy;
}

void check_policy(const RegionPolicy& policy, const HorizonSpace& space,
                  const ConicPartition& partition) {
  if (policy.gamma != space.gamma() || policy.l_min != space.l_min() ||
      policy.l_max != space.l_max()) {
    throw ValidationError("policy was built for a different horizon space");
  }
  if (policy.regions != partition.count() || policy.overlap != partition.overlap() ||
      policy.entries.size() != static_cast<std::size_t>(partition.count())) {
    throw ValidationError("policy was built for a different partition");
  }
  for (const auto& e : policy.entries) {
    if (e.horizons.empty() || e.horizons.size() != e.epsilons.size()) {
      throw ValidationError("policy has an empty or malformed region entry");
    }
    for (auto i : e.horizons) {
      if (i >= space.count()) throw ValidationError("policy horizon index out of range");
    }
  }
}

TriggerDecision decide_offline(const Vector& x, const RegionPolicy& policy,
                               const ConicPartition& partition, const HorizonSpace& space,
                               TieBreaker& ties, const PerturbedCertificate* cert) {
  TriggerDecision d;
  if (cert != nullptr && in_ellipsoid(cert->p, 1.0, x)) {
    d.horizon = SamplingHorizon({space.t_max()});
    d.feasible_count = 1;
    d.tie_count = 1;
    d.mode = TriggerMode::fallback_tmax;
    return d;
  }
  const int c = region_of(partition, x);
  const RegionEntry& e = policy.entries.at(static_cast<std::size_t>(c - 1));
  d.horizon = space.horizon_at(e.horizons[ties.pick(e.horizons.size())]);
  d.feasible_count = e.horizons.size();
  d.tie_count = e.horizons.size();
  d.mode = cert != nullptr ? TriggerMode::offline_perturbed : TriggerMode::offline_unperturbed;
  return d;
}

// --- pointwise ------------------------------------------------------------------

double unperturbed_pointwise(const StabilityCertificate& cert, const Matrix& phi, double duration,
                             const Vector& x) {
  const double n2 = x.squaredNorm();
  if (n2 == 0.0) return 0.0;
  const Vector y = phi * x;
  return (cert.p.quad(y) - std::exp(-cert.beta * duration) * cert.p.quad(x)) / n2;
}

double offline_perturbed_pointwise(const PerturbedCertificate& cert, const Matrix& phi,
                                   double duration, std::size_t length, const Vector& x) {
  const auto s = offline_schur(cert, phi, duration, length);
  if (!s) return -std::numeric_limits<double>::infinity();
  return x.dot(*s * x) + cert.gamma1 - cert.gamma2;
}

}  // namespace selftrig
