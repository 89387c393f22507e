// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status is the number of failed criteria.

#include "selftrig/certificates.hpp"
#include "selftrig/errors.hpp"
#include "selftrig/experiment.hpp"
#include "selftrig/horizons.hpp"
#include "selftrig/linalg.hpp"
#include "selftrig/scenario.hpp"
#include "selftrig/sim.hpp"

#include "../support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace selftrig;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Scenario load(const std::string& name) {
  return load_scenario(fs::path(SELFTRIG_SCENARIO_DIR) / (name + ".yaml"));
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;
  void note(const char* fmt, auto... args) {
    if constexpr (sizeof...(args) == 0) {
      details.emplace_back(fmt);
    } else {
      char buf[512];
      std::snprintf(buf, sizeof buf, fmt, args...);
      details.emplace_back(buf);
    }
  }
  void require(bool ok, const char* fmt, auto... args) {
    if (!ok) pass = false;
    std::string line = fmt;
    if constexpr (sizeof...(args) > 0) {
      char buf[512];
      std::snprintf(buf, sizeof buf, fmt, args...);
      line = buf;
    }
    details.emplace_back(std::string(ok ? "ok    " : "FAIL  ") + line);
  }
};

int failures = 0;

void report(int id, const char* title, const Outcome& o) {
  std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", title);
  for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

// --- 1 ----------------------------------------------------------------------------

Outcome motivational() {
  Outcome o;
  const auto t0 = Clock::now();
  const Scenario s = load("motivational");
  const PlantModel plant(s.a, s.b, s.k);
  const auto r = motivational_report(plant, {}, {{1.5, 3.0}, {2.126, 3.95}, {2.126, 2.9}});
  const double elapsed = seconds_since(t0);
  struct Expect {
    bool first, second, product;
  };
  const Expect expect[] = {{true, true, false}, {false, false, true}, {false, true, true}};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& c = r.cases[i];
    const bool ok = c.first_schur() == expect[i].first && c.second_schur() == expect[i].second &&
                    c.product_schur() == expect[i].product;
    o.require(ok, "(%g, %g): radii %.4f, %.4f, product %.4f", c.first, c.second, c.radius_first,
              c.radius_second, c.radius_product);
  }
  o.require(elapsed < 1.0, "runtime %.3f s (limit 1 s)", elapsed);
  return o;
}

// --- 2 ----------------------------------------------------------------------------

Outcome published_certificate() {
  Outcome o;
  const auto t0 = Clock::now();
  for (const char* name : {"published_certificate_online_b0", "published_certificate_online_b01"}) {
    Experiment ex(load(name));
    const auto& cert = *ex.perturbed_certificate();
    const Matrix phi = ex.sigma_star_transition();
    o.require(cert.gamma == 0.35, "%s: gamma %.2f", name, cert.gamma);
    o.require(min_eigenvalue(cert.p) > 0.0 && min_eigenvalue(*cert.m) > 0.0,
              "%s: P > 0 (min eig %.4f), M > 0 (min eig %.4f)", name, min_eigenvalue(cert.p),
              min_eigenvalue(*cert.m));
    const Tolerance relaxed{1e-4, 0.0};
    const auto r = verify_perturbed(cert, phi, relaxed);
    for (const auto& c : r.checks) {
      o.note("%s: %s min eig %.6g (%s)", name, c.name.c_str(), c.min_eigenvalue,
             c.pass ? "pass" : "fail");
    }
    o.note("%s: sigma* length %zu, derived varpi %.6g", name, cert.sigma_star.length(),
           cert.constants.varpi);
    if (r.pass()) {
      o.require(true, "%s: LMIs hold at margin -1e-4 under the derived varpi", name);
    } else {
      const double varpi = max_admissible_varpi(cert, phi, relaxed);
      o.require(varpi > 0.0, "%s: LMIs fail under the derived varpi; largest admissible varpi %.6g",
                name, varpi);
    }
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 1.0, "runtime %.3f s (limit 1 s)", elapsed);
  return o;
}

// --- 3, 4, 6 ------------------------------------------------------------------------

struct Run {
  std::string name;
  Scenario scenario;
  std::unique_ptr<Experiment> ex;
  SimulationTrace trace;
  TraceReport report;
  double seconds = 0.0;
};

std::vector<Run> reproduce() {
  const char* names[] = {"online_unperturbed_b0", "online_unperturbed_b01",
                         "offline_unperturbed_b0", "offline_unperturbed_b01",
                         "online_perturbed_b0",   "online_perturbed_b01",
                         "offline_perturbed_b0",  "offline_perturbed_b01"};
  std::vector<Run> runs;
  for (const char* name : names) {
    Run r;
    r.name = name;
    r.scenario = load(name);
    const auto t0 = Clock::now();
    r.ex = std::make_unique<Experiment>(r.scenario);
    if (r.scenario.offline()) r.ex->build_policy();
    r.trace = r.ex->simulate();
    r.report = r.ex->verify(r.trace);
    r.seconds = seconds_since(t0);
    runs.push_back(std::move(r));
  }
  return runs;
}

Outcome averages(const std::vector<Run>& runs, double total_seconds) {
  Outcome o;
  for (const auto& r : runs) {
    const double avg = r.trace.average_interval();
    if (!r.scenario.reported_average) {
      o.note("%-24s average %.4f (no reported value)", r.name.c_str(), avg);
      continue;
    }
    const double ref = *r.scenario.reported_average;
    const double dev = (avg - ref) / ref;
    const bool within = std::abs(dev) <= 0.2;
    const bool documented = !r.scenario.reported_note.empty() && r.report.pass();
    o.require(within || documented, "%-24s average %.4f vs reported %.4f (%+.1f%%) %s",
              r.name.c_str(), avg, ref, 100.0 * dev,
              within ? "within 20%" : (documented ? "documented deviation, invariants hold"
                                                  : "undocumented deviation"));
  }
  o.require(total_seconds < 600.0, "runtime %.1f s (limit 600 s)", total_seconds);
  return o;
}

Outcome invariants(const std::vector<Run>& runs) {
  Outcome o;
  for (const auto& r : runs) {
    std::string entry = "";
    if (r.ex->perturbed()) {
      entry = r.report.first_entry ? "enters E(P,mu) at boundary " +
                                         std::to_string(*r.report.first_entry)
                                   : "never enters E(P,mu)";
    }
    o.require(r.report.violations == 0, "%-24s %zu boundary checks, %zu violations %s",
              r.name.c_str(), r.report.checks.size(), r.report.violations, entry.c_str());
  }
  return o;
}

Matrix chronological(const SamplingHorizon& h, const DiscretizationCache& cache) {
  Matrix phi = Matrix::Identity(cache.state_dim(), cache.state_dim());
  for (double t : h.intervals()) phi = cache.closed(t) * phi;
  return phi;
}

Outcome offline_soundness(const std::vector<Run>& runs) {
  Outcome o;
  for (const auto& r : runs) {
    if (!r.scenario.offline()) continue;
    std::size_t checked = 0, violations = 0, fallbacks = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& d : r.trace.decisions) {
      if (d.decision.mode == TriggerMode::fallback_tmax) {
        ++fallbacks;
        continue;
      }
      const auto& h = d.decision.horizon;
      const Matrix phi = chronological(h, r.ex->cache());
      const Vector& x = d.x;
      ++checked;
      double excess = 0.0;
      if (!r.ex->perturbed()) {
        const auto& cert = *r.ex->certificate();
        const Matrix& p = cert.p.matrix();
        const Vector y = phi * x;
        const double lhs = y.dot(p * y) - std::exp(-cert.beta * h.duration()) * x.dot(p * x);
        excess = lhs / std::max(1e-300, x.squaredNorm());
      } else {
        const auto& cert = *r.ex->perturbed_certificate();
        double gain = 0.0;
        for (std::size_t q = 0; q < h.length(); ++q) gain += std::pow(cert.constants.c, q);
        const double chi = cert.constants.varpi * gain;
        const double v = oracle::offline_block_min(cert.p.matrix(), phi, cert.beta, h.duration(),
                                                   cert.gamma1, cert.gamma2, chi, x);
        excess = -v / std::max(1.0, x.squaredNorm());
      }
      worst = std::max(worst, excess);
      if (!(excess <= 1e-8)) ++violations;
    }
    o.require(violations == 0,
              "%-24s %zu decisions checked (%zu fallbacks), %zu violations, worst normalized "
              "excess %.3g",
              r.name.c_str(), checked, fallbacks, violations, worst);
  }
  return o;
}

// --- 5 ----------------------------------------------------------------------------

Outcome oracle_equivalence(const std::vector<Run>& runs) {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> log_radius(-2.0, 2.0);
  for (const auto& r : runs) {
    if (r.scenario.offline()) continue;
    const Experiment& ex = *r.ex;
    const auto& space = ex.space();
    const auto table = oracle::tabulate(space.gamma(), space.l_min(), space.l_max(),
                                        [&](double t) { return ex.cache().closed(t); });
    const std::size_t seed = oracle::find(table, ex.sigma_star().intervals());
    Matrix w;
    Matrix p = ex.lyapunov().matrix();
    double beta = 0.0, shift = 0.0;
    std::vector<double> offsets(static_cast<std::size_t>(space.l_max()) + 1, 0.0);
    if (ex.perturbed()) {
      const auto& c = *ex.perturbed_certificate();
      w = c.p.matrix() + c.m->matrix();
      beta = c.beta;
      shift = c.gamma;
      offsets = oracle::perturbed_offsets(c.p.matrix(), c.m->matrix(), c.constants.varpi,
                                          c.constants.c, c.gamma, space.l_max());
    } else {
      w = p;
      beta = ex.certificate()->beta;
    }
    std::size_t agree = 0, scans = 0;
    for (int i = 0; i < 50; ++i) {
      Vector x(2);
      x << gauss(rng), gauss(rng);
      x = x.normalized() * std::pow(10.0, log_radius(rng));
      TieBreaker ties;
      const TriggerDecision got = ex.online().decide(x, ties);
      std::vector<double> expected_horizon;
      double expected_average = 0.0;
      if (ex.perturbed() && x.dot(p * x) <= 1.0) {
        expected_horizon = {space.gamma().back()};
        expected_average = space.gamma().back();
      } else {
        ++scans;
        const auto ref = oracle::brute_force(
            table, w, p, beta, shift, [&](std::size_t l) { return offsets[l]; }, x, seed);
        expected_horizon = table[ref.optimal.front()].horizon;
        expected_average = ref.average;
      }
      if (got.horizon.intervals() == expected_horizon &&
          got.horizon.average() == expected_average) {
        ++agree;
      }
    }
    o.require(agree == 50, "%-24s %zu/50 decisions equal the brute-force argmax (%zu full scans)",
              r.name.c_str(), agree, scans);
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 300.0, "runtime %.1f s (limit 300 s)", elapsed);
  return o;
}

// --- 7 ----------------------------------------------------------------------------

Outcome numerics() {
  Outcome o;
  std::mt19937_64 rng(7);
  double worst_expm = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + i % 4;
    Matrix a = oracle::random_matrix(rng, n, n, 3.0);
    const double norm = a.operatorNorm();
    if (norm > 5.0) a *= 5.0 / norm;
    const Matrix ref = oracle::expm_taylor(a);
    worst_expm = std::max(worst_expm, (expm(a) - ref).norm() / ref.norm());
  }
  o.require(worst_expm <= 1e-10, "expm vs 60-term series, 1000 matrices with norm <= 5: worst "
            "relative error %.3g", worst_expm);

  std::uniform_real_distribution<double> unit(0.05, 1.0);
  double worst_stein = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + i % 4;
    Matrix phi = oracle::random_matrix(rng, n, n, 1.0);
    const double rho = unit(rng);
    const double r = spectral_radius(phi);
    if (r > 0.0) phi *= std::sqrt(rho) * 0.95 * unit(rng) / r;
    const Matrix g = oracle::random_matrix(rng, n, n, 1.0);
    const SymmetricMatrix q(g * g.transpose() + 0.1 * Matrix::Identity(n, n));
    const SymmetricMatrix p = solve_stein(phi, rho, q);
    const Matrix resid = phi.transpose() * p.matrix() * phi - rho * p.matrix() + q.matrix();
    worst_stein = std::max(worst_stein, inf_norm(resid) / inf_norm(p.matrix()));
  }
  o.require(worst_stein <= 1e-9, "Stein residual, 1000 feasible instances: worst relative %.3g",
            worst_stein);

  struct Space {
    std::size_t base;
    int lo, hi;
  };
  const Space spaces[] = {{1, 1, 1}, {2, 1, 2}, {3, 2, 5}, {7, 1, 6}, {9, 1, 6}, {4, 3, 8}};
  bool counts_ok = true;
  for (const auto& s : spaces) {
    std::vector<double> gamma;
    for (std::size_t i = 1; i <= s.base; ++i) gamma.push_back(0.25 * static_cast<double>(i));
    const HorizonSpace space(gamma, s.lo, s.hi);
    std::uint64_t closed = 0, power = 1;
    for (int l = 1; l <= s.hi; ++l) {
      power *= s.base;
      if (l >= s.lo) closed += power;
    }
    std::uint64_t seen = 0;
    for (HorizonCursor c(space); !c.done(); c.advance()) ++seen;
    counts_ok &= seen == closed && space.count() == closed;
    o.note("|Gamma| = %zu, lengths %d..%d: formula %llu, enumerated %llu", s.base, s.lo, s.hi,
           static_cast<unsigned long long>(closed), static_cast<unsigned long long>(seen));
  }
  o.require(counts_ok, "horizon counts match the closed form");
  return o;
}

// --- 8 ----------------------------------------------------------------------------

Outcome scale() {
  Outcome o;
  Experiment ex(load("online_unperturbed_b0"));
  o.require(ex.space().count() == 597870, "space size %llu",
            static_cast<unsigned long long>(ex.space().count()));
  const Vector x0 = ex.scenario().x0;
  TieBreaker ties;
  auto t0 = Clock::now();
  const auto d = ex.online().decide(x0, ties, true);
  const double parallel = seconds_since(t0);
  t0 = Clock::now();
  const auto s = ex.online().decide(x0, ties, false);
  const double serial = seconds_since(t0);
  o.require(d.horizon == s.horizon, "parallel and serial scans agree (%llu feasible)",
            static_cast<unsigned long long>(d.feasible_count));
  o.require(parallel < 10.0, "full decision scan %.3f s parallel (%d workers), %.3f s serial",
            parallel, worker_count(), serial);
  return o;
}

}  // namespace

int main() {
  std::printf("selftrig acceptance suite\n");
  try {
    report(1, "motivational single-interval vs. sequence verdicts", motivational());
    report(2, "published perturbed certificate", published_certificate());

    const auto t0 = Clock::now();
    const auto runs = reproduce();
    const double total = seconds_since(t0);
    report(3, "average sampling interval reproduction", averages(runs, total));
    report(4, "Lyapunov decrease and ultimate-bound containment on every trace", invariants(runs));
    report(5, "online decisions equal the brute-force argmax", oracle_equivalence(runs));
    report(6, "offline decisions satisfy the pointwise test at visited states",
           offline_soundness(runs));
    report(7, "numerics: expm, Stein residual, horizon counts", numerics());
    report(8, "full online scan of the 597,870-horizon space", scale());
  } catch (const std::exception& e) {
    std::printf("acceptance suite aborted: %s\n", e.what());
    return 100;
  }
  std::printf("%d criteria failed\n", failures);
  return failures;
}
