#include "selftrig/certificates.hpp"

#include "selftrig/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace selftrig {

namespace {

double scale_of(const Matrix& m) { return std::max(inf_norm(m), std::numeric_limits<double>::min()); }

LmiCheck positive_definite(const std::string& name, const SymmetricMatrix& s) {
  LmiCheck c;
  c.name = name;
  c.min_eigenvalue = min_eigenvalue(s);
  c.threshold = kStrictMargin * scale_of(s.matrix());
  c.pass = c.min_eigenvalue >= c.threshold;
  return c;
}

LmiCheck semidefinite(const std::string& name, const SymmetricMatrix& s, Tolerance tol) {
  LmiCheck c;
  c.name = name;
  c.min_eigenvalue = min_eigenvalue(s);
  c.threshold = -(tol.absolute + tol.relative * scale_of(s.matrix()));
  c.pass = c.min_eigenvalue >= c.threshold;
  return c;
}

double decay(double beta, double dur) { return std::exp(-beta * dur); }

void require_variant(const PerturbedCertificate& cert, PerturbedVariant v, const char* op) {
  if (cert.variant != v) {
    throw DomainError(std::string(op) + ": certificate has the wrong variant");
  }
}

// −Φᵀ(P+M)Φ + (ρ−γ)P for the online variant.
SymmetricMatrix online_state_block(const Matrix& phi, double dur, const PerturbedCertificate& cert) {
  const Matrix w = cert.p.matrix() + cert.m->matrix();
  return SymmetricMatrix(-phi.transpose() * w * phi +
                         (decay(cert.beta, dur) - cert.gamma) * cert.p.matrix());
}

// [[M, P], [P, (γ/χ)I − P]]
SymmetricMatrix online_coupling_block(const PerturbedCertificate& cert) {
  const Eigen::Index n = cert.p.size();
  Matrix l(2 * n, 2 * n);
  l.topLeftCorner(n, n) = cert.m->matrix();
  l.topRightCorner(n, n) = cert.p.matrix();
  l.bottomLeftCorner(n, n) = cert.p.matrix();
  l.bottomRightCorner(n, n) =
      (cert.gamma / cert.chi) * Matrix::Identity(n, n) - cert.p.matrix();
  return SymmetricMatrix(l);
}

}  // namespace

bool CertificateReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const LmiCheck& c) { return c.pass; });
}

double CertificateReport::worst_margin() const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& c : checks) worst = std::min(worst, c.min_eigenvalue - c.threshold);
  return worst;
}

PerturbedConstants perturbed_constants(const PlantModel& plant, const HorizonSpace& space,
                                       std::optional<double> varpi_override) {
  PerturbedConstants k;
  k.t_max = space.t_max();
  k.c = growth_constant(plant, space.gamma());
  k.c_prime = fallback_norm(plant, k.t_max);
  if (varpi_override) {
    if (!(*varpi_override >= 0.0) || !std::isfinite(*varpi_override)) {
      throw DomainError("varpi override must be a finite nonnegative number");
    }
    k.varpi = *varpi_override;
  } else {
    k.varpi = perturbation_bound_max(plant, space.gamma());
  }
  return k;
}

double disturbance_gain(const PerturbedConstants& k, std::size_t length) {
  double sum = 0.0;
  double power = 1.0;
  for (std::size_t q = 0; q < length; ++q) {
    sum += power;
    power *= k.c;
  }
  return k.varpi * sum;
}

double chi_for(PerturbedVariant variant, const PerturbedConstants& k, std::size_t length) {
  const double g = disturbance_gain(k, length);
  return variant == PerturbedVariant::online ? g * g : g;
}

// --- unperturbed ------------------------------------------------------------

StabilityCertificate certify_unperturbed(const Matrix& phi_star, double beta,
                                         const SamplingHorizon& sigma_star) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("beta must be finite and >= 0");
  if (sigma_star.empty()) throw DomainError("sigma* must be a non-empty horizon");
  const double rho = decay(beta, sigma_star.duration());
  const double r = spectral_radius(phi_star);
  if (!(r * r < rho)) {
    std::ostringstream os;
    os << "no quadratic certificate: spectral radius of the sigma* transition is " << r
       << " (squared " << r * r << ") but the decay factor e^{-beta*duration} is " << rho
       << "; pick another sigma* or a smaller beta";
    throw InfeasibleError(os.str());
  }
  StabilityCertificate cert{solve_stein(phi_star, rho, SymmetricMatrix::identity(phi_star.rows())),
                            beta, sigma_star, rho};
  const auto report = verify_unperturbed(cert, phi_star);
  if (!report.pass()) {
    std::ostringstream os;
    os << "Stein solution failed re-verification (worst margin " << report.worst_margin() << ")";
    throw NumericError(os.str());
  }
  return cert;
}

CertificateReport verify_unperturbed(const StabilityCertificate& cert, const Matrix& phi_star) {
  if (phi_star.rows() != cert.p.size() || phi_star.cols() != cert.p.size()) {
    throw DimensionError("transition and P sizes differ");
  }
  CertificateReport r;
  r.checks.push_back(positive_definite("P > 0", cert.p));
  const SymmetricMatrix decrease(cert.rho * cert.p.matrix() -
                                 phi_star.transpose() * cert.p.matrix() * phi_star);
  LmiCheck c;
  c.name = "rho P - Phi'P Phi > 0";
  c.min_eigenvalue = min_eigenvalue(decrease);
  c.threshold = kStrictMargin * scale_of(cert.p.matrix());
  c.pass = c.min_eigenvalue >= c.threshold;
  r.checks.push_back(c);
  return r;
}

// --- perturbed --------------------------------------------------------------

void finalize(PerturbedCertificate& cert) {
  cert.chi = chi_for(cert.variant, cert.constants, cert.sigma_star.length());
  cert.mu = ultimate_bound(cert);
  cert.lambda_pmp = 0.0;
  if (cert.variant == PerturbedVariant::online) {
    if (!cert.m) throw DomainError("online perturbed certificate needs M");
    const Eigen::LDLT<Matrix> ldlt(cert.m->matrix());
    if (ldlt.info() != Eigen::Success || min_eigenvalue(*cert.m) <= 0.0) {
      throw NumericError("M is singular or indefinite; P M^-1 P is undefined");
    }
    const Matrix p = cert.p.matrix();
    cert.lambda_pmp = max_eigenvalue(SymmetricMatrix(p * ldlt.solve(p) + p));
  }
}

SymmetricMatrix build_u_sigma(const Matrix& phi, double duration, std::size_t length,
                              const PerturbedCertificate& cert) {
  require_variant(cert, PerturbedVariant::online, "build_u_sigma");
  if (!cert.m) throw DomainError("online perturbed certificate needs M");
  const Eigen::Index n = cert.p.size();
  const double g = disturbance_gain(cert.constants, length);
  Matrix u = Matrix::Zero(n + 1, n + 1);
  u.topLeftCorner(n, n) = online_state_block(phi, duration, cert).matrix();
  u(n, n) = cert.gamma - g * g * cert.lambda_pmp;
  return SymmetricMatrix(u);
}

SymmetricMatrix build_u_sigma(const SamplingHorizon& h, const DiscretizationCache& cache,
                              const PerturbedCertificate& cert) {
  return build_u_sigma(transition(h, cache), h.duration(), h.length(), cert);
}

SymmetricMatrix build_u_offline(const Matrix& phi, double duration, std::size_t length,
                                const PerturbedCertificate& cert,
                                const std::optional<SymmetricMatrix>& q_c, double epsilon) {
  require_variant(cert, PerturbedVariant::offline, "build_u_offline");
  if (epsilon < 0.0) throw DomainError("epsilon must be >= 0");
  const Eigen::Index n = cert.p.size();
  const Matrix& p = cert.p.matrix();
  const double chi = chi_for(PerturbedVariant::offline, cert.constants, length);

  Matrix u = Matrix::Zero(2 * n + 1, 2 * n + 1);
  Matrix u11 = -phi.transpose() * p * phi + (decay(cert.beta, duration) - cert.gamma1) * p;
  if (q_c) u11 -= epsilon * q_c->matrix();
  u.topLeftCorner(n, n) = u11;
  if (chi > 0.0) {
    u.block(n, 0, n, n) = -p * phi;
    u.block(0, n, n, n) = (-p * phi).transpose();
    u.block(n, n, n, n) = (cert.gamma2 / chi) * Matrix::Identity(n, n) - p;
  } else {
    // No disturbance: the w block decouples; identity stands in for the infinite weight.
    u.block(n, n, n, n) = Matrix::Identity(n, n);
  }
  u(2 * n, 2 * n) = cert.gamma1 - cert.gamma2;
  return SymmetricMatrix(u);
}

CertificateReport verify_perturbed(const PerturbedCertificate& cert, const Matrix& phi_star,
                                   Tolerance tol) {
  if (phi_star.rows() != cert.p.size() || phi_star.cols() != cert.p.size()) {
    throw DimensionError("transition and P sizes differ");
  }
  CertificateReport r;
  r.checks.push_back(positive_definite("P > 0", cert.p));
  const double dur = cert.sigma_star.duration();
  if (cert.variant == PerturbedVariant::online) {
    if (!cert.m) throw DomainError("online perturbed certificate needs M");
    r.checks.push_back(positive_definite("M > 0", *cert.m));
    r.checks.push_back(semidefinite("-Phi'(P+M)Phi + (rho-gamma)P >= 0",
                                    online_state_block(phi_star, dur, cert), tol));
    if (cert.chi > 0.0) {
      r.checks.push_back(
          semidefinite("[[M, P], [P, gamma/chi I - P]] >= 0", online_coupling_block(cert), tol));
    } else {
      // χ = 0: the lower-right block is unbounded and the LMI reduces to M ⪰ 0.
      r.checks.push_back(semidefinite("[[M, P], [P, gamma/chi I - P]] >= 0", *cert.m, tol));
    }
  } else {
    if (!(cert.gamma1 > 0.0) || !(cert.gamma2 > 0.0)) {
      throw DomainError("offline perturbed certificate needs gamma1, gamma2 > 0");
    }
    r.checks.push_back(semidefinite(
        "U >= 0", build_u_offline(phi_star, dur, cert.sigma_star.length(), cert), tol));
  }
  return r;
}

namespace {

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  const int steps = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade));
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    g.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
  }
  return g;
}

// Stein solution used to seed the scale search. The perturbed LMIs ask for a
// decrease rate tightened by γ (or γ₁); when that rate is still achievable the
// seed is built for it, otherwise the plain Prop-1 certificate is used.
SymmetricMatrix seed_p(const Matrix& phi, double rho, double shift) {
  const double r = spectral_radius(phi);
  const Eigen::Index n = phi.rows();
  if (rho - shift > 0.0 && r * r < rho - shift) {
    return solve_stein(phi, rho - shift, SymmetricMatrix::identity(n));
  }
  if (r * r < rho) return solve_stein(phi, rho, SymmetricMatrix::identity(n));
  std::ostringstream os;
  os << "sigma* transition has spectral radius " << r << "; need its square below " << rho;
  throw InfeasibleError(os.str());
}

}  // namespace

PerturbedCertificate find_perturbed_certificate(const Matrix& phi_star,
                                                const SamplingHorizon& sigma_star,
                                                const PerturbedConstants& constants,
                                                const PerturbedSearch& search) {
  if (sigma_star.empty()) throw DomainError("sigma* must be a non-empty horizon");
  PerturbedCertificate cert;
  cert.variant = search.variant;
  cert.beta = search.beta;
  cert.gamma = search.gamma;
  cert.gamma1 = search.gamma1;
  cert.gamma2 = search.gamma2;
  cert.sigma_star = sigma_star;
  cert.constants = constants;
  cert.mu_variant = search.mu_variant;

  const double rho = decay(search.beta, sigma_star.duration());
  const double shift = search.variant == PerturbedVariant::online ? search.gamma : search.gamma1;
  const SymmetricMatrix p0 = seed_p(phi_star, rho, shift);
  const Eigen::Index n = phi_star.rows();

  std::vector<double> scales = log_grid(1e-3, 1e3, 10);
  std::reverse(scales.begin(), scales.end());
  const std::vector<double> alphas = log_grid(1e-2, 1e3, 10);

  double best = -std::numeric_limits<double>::infinity();
  auto attempt = [&](double s, std::optional<double> alpha) -> bool {
    cert.p = s * p0;
    cert.m.reset();
    if (alpha) cert.m = *alpha * SymmetricMatrix::identity(n);
    finalize(cert);
    const auto report = verify_perturbed(cert, phi_star);
    best = std::max(best, report.worst_margin());
    return report.pass();
  };

  for (double s : scales) {
    if (search.variant == PerturbedVariant::online) {
      for (double a : alphas) {
        if (attempt(s, a)) return cert;
      }
    } else if (attempt(s, std::nullopt)) {
      return cert;
    }
  }
  std::ostringstream os;
  os << "certificate grid exhausted; best (least negative) margin " << best
     << "; supply an external P/M or relax gamma";
  throw InfeasibleError(os.str());
}

double max_admissible_varpi(const PerturbedCertificate& cert, const Matrix& phi_star,
                            Tolerance tol) {
  auto passes = [&](double varpi) {
    PerturbedCertificate c = cert;
    c.constants.varpi = varpi;
    finalize(c);
    return verify_perturbed(c, phi_star, tol).pass();
  };
  if (!passes(0.0)) return 0.0;
  double lo = 0.0;
  double hi = std::max(1.0, cert.constants.varpi);
  int grow = 0;
  while (passes(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 200) return lo;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (passes(mid) ? lo : hi) = mid;
  }
  return lo;
}

double ultimate_bound(const SymmetricMatrix& p, double c_prime, double varpi, MuVariant variant) {
  const double lmin = min_eigenvalue(p);
  const double lmax = max_eigenvalue(p);
  if (!(lmin > 0.0)) throw DomainError("ultimate bound needs P > 0");
  const double denom = variant == MuVariant::paper ? lmin : std::sqrt(lmin);
  const double r = c_prime / denom + varpi;
  return lmax * r * r;
}

double ultimate_bound(const PerturbedCertificate& cert) {
  return ultimate_bound(cert.p, cert.constants.c_prime, cert.constants.varpi, cert.mu_variant);
}

double tangent_ball(const PerturbedCertificate& cert) {
  return ultimate_bound(cert) / min_eigenvalue(cert.p);
}

bool in_ellipsoid(const SymmetricMatrix& p, double level, const Vector& x) {
  return p.quad(x) <= level * (1.0 + 1e-12) + 1e-300;
}

}  // namespace selftrig
