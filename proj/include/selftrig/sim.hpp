#pragma once

#include "selftrig/errors.hpp"
#include "selftrig/horizons.hpp"
#include "selftrig/linalg.hpp"
#include "selftrig/plant.hpp"
#include "selftrig/trigger.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace selftrig {

/// Bounded disturbance signal w(t). Every component gets the same waveform
/// except for noise, which draws each component independently.
struct Disturbance {
  enum class Kind { none, sine, constant, noise };
  Kind kind = Kind::none;
  double amplitude = 0.0;  ///< sine amplitude, constant value, or noise half-width
  double omega = 0.0;      ///< sine angular frequency (rad/s)
  double cell = 0.05;      ///< noise holds each draw for this long (s)
  std::uint64_t seed = 0;

  /// w(t) with `dim` components.
  [[nodiscard]] Vector value(double t, Eigen::Index dim) const;
  /// sup_t ‖w(t)‖₂.
  [[nodiscard]] double peak(Eigen::Index dim) const;
};

struct SimulationConfig {
  Vector x0;
  double t0 = 0.0;
  double t_end = 40.0;
  double substep = 1e-3;     ///< RK4 step for the perturbed plant
  double dense_step = 0.01;  ///< spacing of the plotting trajectory
};

/// One decision instant τ_k.
struct DecisionRecord {
  double tau = 0.0;
  Vector x;
  double v = 0.0;
  TriggerDecision decision;
  double seconds = 0.0;  ///< wall time spent deciding
};

struct SimulationTrace {
  std::vector<double> sample_times;   ///< every t_h, starting at t0
  std::vector<Vector> sample_states;  ///< x(t_h)
  std::vector<std::size_t> sample_decision;  ///< decision index that produced x(t_h); t0 maps to 0
  std::vector<DecisionRecord> decisions;
  Vector final_state;  ///< state at the end of the last horizon
  double final_time = 0.0;
  std::vector<double> dense_times;
  std::vector<Vector> dense_states;

  [[nodiscard]] std::size_t interval_count() const noexcept {
    return sample_times.empty() ? 0 : sample_times.size() - 1;
  }
  /// (last t_h − t0) / number of intervals.
  [[nodiscard]] double average_interval() const;
};

/// Carries the trace recorded up to the first non-finite state.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, SimulationTrace prefix)
      : NumericError(what), prefix_(std::make_shared<SimulationTrace>(std::move(prefix))) {}
  [[nodiscard]] const SimulationTrace& prefix() const noexcept { return *prefix_; }

 private:
  std::shared_ptr<SimulationTrace> prefix_;
};

using Decider = std::function<TriggerDecision(const Vector& x)>;

/// Closed loop: decide at τ_k, apply every interval of σ_k, repeat while
/// τ_k < t_end. Without a disturbance the sample states advance by exact
/// closed-loop steps; with one, by RK4 under the held input u = K x(t_h).
/// `p` only feeds the recorded V(x_k) = x_kᵀ P x_k.
SimulationTrace run(const PlantModel& plant, const DiscretizationCache& cache,
                    const Decider& decide, const SymmetricMatrix& p,
                    const SimulationConfig& config, const Disturbance* disturbance = nullptr);

/// x' = A x + B u + D w(t) over [t, t + span] with fixed-step RK4 (step <= substep).
Vector integrate_rk4(const PlantModel& plant, const Vector& x, const Vector& u,
                     const Disturbance& w, double t, double span, double substep);

struct TraceCheck {
  std::size_t step = 0;  ///< index of the horizon boundary (0 = first decision)
  double value = 0.0;
  double bound = 0.0;
  bool pass = true;
};

struct TraceReport {
  std::vector<TraceCheck> checks;
  std::size_t violations = 0;
  /// Perturbed: first boundary inside E(P, μ), if any.
  std::optional<std::size_t> first_entry;
  [[nodiscard]] bool pass() const noexcept { return violations == 0; }
};

/// Horizon-boundary states x_0, ..., x_K (decision states plus the final one).
std::vector<std::pair<double, Vector>> boundary_states(const SimulationTrace& trace);

/// V(x_{k+1}) <= e^{−β(τ_{k+1}−τ_k)} V(x_k) (1 + 1e-9) at every boundary.
TraceReport verify_unperturbed_trace(const SimulationTrace& trace, const SymmetricMatrix& p,
                                     double beta);

/// After the first boundary inside E(P, μ), every later boundary stays inside E(P, μ(1 + 1e-6)).
TraceReport verify_perturbed_trace(const SimulationTrace& trace, const SymmetricMatrix& p,
                                   double mu);

struct SweepPoint {
  double interval = 0.0;
  double spectral_radius = 0.0;
};

struct PairCase {
  double first = 0.0;
  double second = 0.0;
  double radius_first = 0.0;
  double radius_second = 0.0;
  /// ρ(Ã_second · Ã_first): the first interval is applied first.
  double radius_product = 0.0;
  [[nodiscard]] bool first_schur() const noexcept { return radius_first < 1.0; }
  [[nodiscard]] bool second_schur() const noexcept { return radius_second < 1.0; }
  [[nodiscard]] bool product_schur() const noexcept { return radius_product < 1.0; }
};

struct MotivationalReport {
  std::vector<SweepPoint> sweep;
  std::vector<PairCase> cases;
  /// Largest swept T with ρ(Ã_T) < 1, if any.
  std::optional<double> largest_stabilizing;
};

MotivationalReport motivational_report(const PlantModel& plant, const std::vector<double>& grid,
                                       const std::vector<std::pair<double, double>>& pairs);

}  // namespace selftrig
