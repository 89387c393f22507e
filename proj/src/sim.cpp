#include "selftrig/sim.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

namespace selftrig {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in [-1, 1] from a hash of (seed, cell, component).
double noise_unit(std::uint64_t seed, std::int64_t cell, Eigen::Index component) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(cell));
  h = splitmix64(h ^ static_cast<std::uint64_t>(component));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

}  // namespace

Vector Disturbance::value(double t, Eigen::Index dim) const {
  switch (kind) {
    case Kind::none: return Vector::Zero(dim);
    case Kind::sine: return Vector::Constant(dim, amplitude * std::sin(omega * t));
    case Kind::constant: return Vector::Constant(dim, amplitude);
    case Kind::noise: {
      const auto c = static_cast<std::int64_t>(std::floor(t / cell));
      const double half = amplitude / std::sqrt(static_cast<double>(dim));
      Vector w(dim);
      for (Eigen::Index i = 0; i < dim; ++i) w(i) = half * noise_unit(seed, c, i);
      return w;
    }
  }
  return Vector::Zero(dim);
}

double Disturbance::peak(Eigen::Index dim) const {
  switch (kind) {
    case Kind::none: return 0.0;
    case Kind::sine:
    case Kind::constant: return std::abs(amplitude) * std::sqrt(static_cast<double>(dim));
    case Kind::noise: return std::abs(amplitude);
  }
  return 0.0;
}

double SimulationTrace::average_interval() const {
  if (interval_count() == 0) return 0.0;
  return (sample_times.back() - sample_times.front()) / static_cast<double>(interval_count());
}

namespace {

Vector rhs(const PlantModel& plant, const Vector& x, const Vector& u, const Vector& w) {
  Vector dx = plant.a() * x + plant.b() * u;
  if (plant.d()) dx.noalias() += *plant.d() * w;
  return dx;
}

template <class Record>
Vector rk4(const PlantModel& plant, const Vector& x0, const Vector& u, const Disturbance& w,
           double t, double span, double substep, Record&& record) {
  const auto steps = static_cast<long>(std::max(1.0, std::ceil(span / substep - 1e-9)));
  const double h = span / static_cast<double>(steps);
  const Eigen::Index q = plant.d() ? plant.d()->cols() : 1;
  Vector x = x0;
  for (long i = 0; i < steps; ++i) {
    const double s = t + static_cast<double>(i) * h;
    const Vector w0 = w.value(s, q);
    const Vector wm = w.value(s + 0.5 * h, q);
    const Vector w1 = w.value(s + h, q);
    const Vector k1 = rhs(plant, x, u, w0);
    const Vector k2 = rhs(plant, x + 0.5 * h * k1, u, wm);
    const Vector k3 = rhs(plant, x + 0.5 * h * k2, u, wm);
    const Vector k4 = rhs(plant, x + h * k3, u, w1);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    record(s + h, x, i + 1 == steps);
  }
  return x;
}

}  // namespace

Vector integrate_rk4(const PlantModel& plant, const Vector& x, const Vector& u,
                     const Disturbance& w, double t, double span, double substep) {
  if (!(span > 0.0) || !(substep > 0.0)) throw DomainError("rk4: span and substep must be positive");
  return rk4(plant, x, u, w, t, span, substep, [](double, const Vector&, bool) {});
}

SimulationTrace run(const PlantModel& plant, const DiscretizationCache& cache,
                    const Decider& decide, const SymmetricMatrix& p,
                    const SimulationConfig& config, const Disturbance* disturbance) {
  const Eigen::Index n = plant.state_dim();
  if (config.x0.size() != n) throw DimensionError("simulation: x0 has the wrong dimension");
  if (!config.x0.allFinite()) throw DomainError("simulation: x0 is not finite");
  if (!(config.t_end > config.t0)) throw DomainError("simulation: t_end must exceed t0");
  if (!(config.substep > 0.0) || !(config.dense_step > 0.0)) {
    throw DomainError("simulation: substep and dense_step must be positive");
  }
  if (p.size() != n) throw DimensionError("simulation: P has the wrong dimension");
  const bool perturbed = disturbance != nullptr && disturbance->kind != Disturbance::Kind::none;
  if (perturbed && !plant.d()) throw DomainError("simulation: disturbance given but plant has no D");

  const Discretization dense_step = discretize(plant, config.dense_step);
  std::map<double, Discretization> extra;
  auto closed = [&](double t) -> const Matrix& {
    if (cache.contains(t)) return cache.closed(t);
    auto it = extra.find(t);
    if (it == extra.end()) it = extra.emplace(t, discretize(plant, t)).first;
    return it->second.closed;
  };

  SimulationTrace trace;
  Vector x = config.x0;
  double tau = config.t0;
  trace.sample_times.push_back(tau);
  trace.sample_states.push_back(x);
  trace.sample_decision.push_back(0);
  trace.dense_times.push_back(tau);
  trace.dense_states.push_back(x);

  auto diverged = [&](double t) {
    trace.final_state = x;
    trace.final_time = t;
    std::ostringstream os;
    os << "state became non-finite at t = " << t;
    throw DivergenceError(os.str(), trace);
  };

  while (tau < config.t_end) {
    DecisionRecord rec;
    rec.tau = tau;
    rec.x = x;
    rec.v = p.quad(x);
    const auto start = std::chrono::steady_clock::now();
    rec.decision = decide(x);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::size_t k = trace.decisions.size();
    trace.decisions.push_back(rec);
    if (rec.decision.horizon.empty()) throw Error("internal: decision returned an empty horizon");

    double t = tau;
    for (double interval : rec.decision.horizon.intervals()) {
      const Vector u = plant.k() * x;
      if (perturbed) {
        const double every = config.dense_step;
        double next_dense = t + every;
        x = rk4(plant, x, u, *disturbance, t, interval, config.substep,
                [&](double s, const Vector& xs, bool last) {
                  if (!last && s + 1e-12 >= next_dense) {
                    trace.dense_times.push_back(s);
                    trace.dense_states.push_back(xs);
                    next_dense += every;
                  }
                });
      } else {
        Vector xd = x;
        for (double s = config.dense_step; s < interval - 1e-12; s += config.dense_step) {
          xd = dense_step.a_t * xd + dense_step.b_t * u;
          trace.dense_times.push_back(t + s);
          trace.dense_states.push_back(xd);
        }
        x = closed(interval) * x;
      }
      t += interval;
      if (!x.allFinite()) diverged(t);
      trace.sample_times.push_back(t);
      trace.sample_states.push_back(x);
      trace.sample_decision.push_back(k);
      trace.dense_times.push_back(t);
      trace.dense_states.push_back(x);
    }
    tau = t;
  }
  trace.final_state = x;
  trace.final_time = tau;
  return trace;
}

std::vector<std::pair<double, Vector>> boundary_states(const SimulationTrace& trace) {
  std::vector<std::pair<double, Vector>> out;
  out.reserve(trace.decisions.size() + 1);
  for (const auto& d : trace.decisions) out.emplace_back(d.tau, d.x);
  if (!trace.decisions.empty()) out.emplace_back(trace.final_time, trace.final_state);
  return out;
}

TraceReport verify_unperturbed_trace(const SimulationTrace& trace, const SymmetricMatrix& p,
                                     double beta) {
  TraceReport r;
  const auto b = boundary_states(trace);
  for (std::size_t k = 0; k + 1 < b.size(); ++k) {
    TraceCheck c;
    c.step = k + 1;
    c.value = p.quad(b[k + 1].second);
    c.bound = std::exp(-beta * (b[k + 1].first - b[k].first)) * p.quad(b[k].second) * (1.0 + 1e-9);
    c.pass = c.value <= c.bound;
    if (!c.pass) ++r.violations;
    r.checks.push_back(c);
  }
  return r;
}

TraceReport verify_perturbed_trace(const SimulationTrace& trace, const SymmetricMatrix& p,
                                   double mu) {
  TraceReport r;
  const auto b = boundary_states(trace);
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (!r.first_entry) {
      if (in_ellipsoid(p, mu, b[k].second)) r.first_entry = k;
      continue;
    }
    TraceCheck c;
    c.step = k;
    c.value = p.quad(b[k].second);
    c.bound = mu * (1.0 + 1e-6);
    c.pass = c.value <= c.bound;
    if (!c.pass) ++r.violations;
    r.checks.push_back(c);
  }
  return r;
}

MotivationalReport motivational_report(const PlantModel& plant, const std::vector<double>& grid,
                                       const std::vector<std::pair<double, double>>& pairs) {
  MotivationalReport r;
  for (double t : grid) {
    const double rho = spectral_radius(discretize(plant, t).closed);
    r.sweep.push_back({t, rho});
    if (rho < 1.0 && (!r.largest_stabilizing || t > *r.largest_stabilizing)) {
      r.largest_stabilizing = t;
    }
  }
  for (const auto& [first, second] : pairs) {
    const Matrix a1 = discretize(plant, first).closed;
    const Matrix a2 = discretize(plant, second).closed;
    PairCase c;
    c.first = first;
    c.second = second;
    c.radius_first = spectral_radius(a1);
    c.radius_second = spectral_radius(a2);
    c.radius_product = spectral_radius(a2 * a1);
    r.cases.push_back(c);
  }
  return r;
}

}  // namespace selftrig
