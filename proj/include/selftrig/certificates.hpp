#pragma once

#include "selftrig/horizons.hpp"
#include "selftrig/linalg.hpp"
#include "selftrig/plant.hpp"

#include <optional>
#include <string>
#include <vector>

namespace selftrig {

/// Tolerances for the "≺ 0" and "⪰ 0" tests.
inline constexpr double kStrictMargin = 1e-9;
inline constexpr double kPsdMargin = 1e-8;

/// Quadratic Lyapunov certificate for the unperturbed mechanisms:
/// Φ*ᵀ P Φ* − ρ P ≺ 0 with ρ = e^{−β·duration(σ*)}.
struct StabilityCertificate {
  SymmetricMatrix p;
  double beta = 0.0;
  SamplingHorizon sigma_star;
  double rho = 1.0;
};

enum class PerturbedVariant { online, offline };

/// Which ultimate-bound formula to use. `paper` divides C′ by λ_min(P);
/// `corrected` divides by sqrt(λ_min(P)), which is what the norm bound
/// ‖x‖ ≤ 1/sqrt(λ_min(P)) on E(P,1) actually gives.
enum class MuVariant { paper, corrected };

/// Plant-derived constants shared by both perturbed certificates.
struct PerturbedConstants {
  double varpi = 0.0;     ///< ϖ, bound on one interval's discretized disturbance
  double c = 0.0;         ///< C = max ‖Ã_T‖₂ over Γ
  double c_prime = 0.0;   ///< C′ = ‖Ã_{T_max}‖₂
  double t_max = 0.0;
};

PerturbedConstants perturbed_constants(const PlantModel& plant, const HorizonSpace& space,
                                       std::optional<double> varpi_override = std::nullopt);

/// ϖ · Σ_{q=0}^{length−1} C^q, the bound on the accumulated disturbance over a horizon.
double disturbance_gain(const PerturbedConstants& k, std::size_t length);

struct PerturbedCertificate {
  PerturbedVariant variant = PerturbedVariant::online;
  SymmetricMatrix p;
  std::optional<SymmetricMatrix> m;  ///< online only
  double gamma = 0.0;                ///< online only
  double gamma1 = 0.0;               ///< offline only
  double gamma2 = 0.0;               ///< offline only
  double beta = 0.0;
  SamplingHorizon sigma_star;
  PerturbedConstants constants;
  /// Online: (ϖΣC^q)², offline: ϖΣC^q, both over |σ*|.
  double chi = 0.0;
  double mu = 0.0;
  MuVariant mu_variant = MuVariant::paper;
  /// λ_max(P M⁻¹ P + P); online only, cached for the per-horizon test.
  double lambda_pmp = 0.0;
};

/// One LMI/definiteness test with its margin.
struct LmiCheck {
  std::string name;
  double min_eigenvalue = 0.0;
  double threshold = 0.0;  ///< pass iff min_eigenvalue >= threshold
  bool pass = false;
};

struct CertificateReport {
  std::vector<LmiCheck> checks;
  [[nodiscard]] bool pass() const;
  [[nodiscard]] double worst_margin() const;
};

/// pass iff λ_min >= −(absolute + relative·‖S‖_∞).
struct Tolerance {
  double absolute = 0.0;
  double relative = kPsdMargin;
};

// --- unperturbed ------------------------------------------------------------

/// P from the Stein equation Φ*ᵀPΦ* − ρP = −I. Throws InfeasibleError when
/// spectral_radius(Φ*)² >= e^{−β·duration(σ*)}.
StabilityCertificate certify_unperturbed(const Matrix& phi_star, double beta,
                                         const SamplingHorizon& sigma_star);

/// Checks P ≻ 0 and Φ*ᵀPΦ* − ρP ≺ 0 (largest eigenvalue <= −1e-9·‖P‖_∞).
CertificateReport verify_unperturbed(const StabilityCertificate& cert, const Matrix& phi_star);

// --- perturbed --------------------------------------------------------------

double chi_for(PerturbedVariant variant, const PerturbedConstants& k, std::size_t length);

/// Fills in chi, mu and lambda_pmp from the primary fields.
void finalize(PerturbedCertificate& cert);

/// diag(−Φᵀ(P+M)Φ + (e^{−β·dur} − γ)P,  γ − (ϖΣC^q)² λ_max(PM⁻¹P + P)).
SymmetricMatrix build_u_sigma(const Matrix& phi, double duration, std::size_t length,
                              const PerturbedCertificate& cert);
SymmetricMatrix build_u_sigma(const SamplingHorizon& h, const DiscretizationCache& cache,
                              const PerturbedCertificate& cert);

/// The 3x3-block offline matrix. The region term enters u₁₁ as −ε_c Q_c
/// (S-procedure on xᵀQ_c x >= 0); ε_c = 0 gives the plain feasibility matrix U.
SymmetricMatrix build_u_offline(const Matrix& phi, double duration, std::size_t length,
                                const PerturbedCertificate& cert,
                                const std::optional<SymmetricMatrix>& q_c = std::nullopt,
                                double epsilon = 0.0);

/// Online: P ≻ 0, M ≻ 0, both LMIs at σ*. Offline: P ≻ 0 and U ⪰ 0 at σ*.
CertificateReport verify_perturbed(const PerturbedCertificate& cert, const Matrix& phi_star,
                                   Tolerance tol = {});

struct PerturbedSearch {
  PerturbedVariant variant = PerturbedVariant::online;
  double beta = 0.0;
  double gamma = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  MuVariant mu_variant = MuVariant::paper;
};

/// Grid heuristic: P = sP₀ over a descending log-grid s ∈ [1e-3, 1e3] and,
/// online, M = αI over an ascending log-grid α ∈ [1e-2, 1e3]; the first pair
/// that verifies is returned. Throws InfeasibleError with the best margin seen.
PerturbedCertificate find_perturbed_certificate(const Matrix& phi_star,
                                                const SamplingHorizon& sigma_star,
                                                const PerturbedConstants& constants,
                                                const PerturbedSearch& search);

/// Largest ϖ for which verify_perturbed passes with the given tolerance
/// (LMI1 does not depend on ϖ; returns 0 if it fails regardless).
double max_admissible_varpi(const PerturbedCertificate& cert, const Matrix& phi_star,
                            Tolerance tol = {});

/// μ = λ_max(P)(C′/λ_min(P) + ϖ)² (paper) or with sqrt(λ_min(P)) (corrected).
double ultimate_bound(const SymmetricMatrix& p, double c_prime, double varpi, MuVariant variant);
double ultimate_bound(const PerturbedCertificate& cert);

/// Radius parameter ψ = μ/λ_min(P) of the ball B(0,ψ) tangent to E(P,μ).
double tangent_ball(const PerturbedCertificate& cert);

/// xᵀPx <= level, with 1e-12 relative slack.
bool in_ellipsoid(const SymmetricMatrix& p, double level, const Vector& x);

}  // namespace selftrig
