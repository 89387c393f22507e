#include "selftrig/errors.hpp"
#include "selftrig/experiment.hpp"
#include "selftrig/io.hpp"
#include "selftrig/scenario.hpp"
#include "selftrig/sim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace selftrig;

namespace {

constexpr int kExitInfeasible = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

struct Common {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> substep;
  std::string mu_variant;
};

void add_common(CLI::App* cmd, Common& c, bool needs_scenario = true) {
  auto* opt = cmd->add_option("--scenario", c.scenario, "scenario file (YAML)");
  if (needs_scenario) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory (default: the scenario's output.dir)");
  cmd->add_option("--seed", c.seed, "use seeded-random tie-breaking with this seed");
  cmd->add_option("--substep", c.substep, "RK4 substep for perturbed simulation (s)");
  cmd->add_option("--mu-variant", c.mu_variant, "ultimate-bound formula")
      ->check(CLI::IsMember({"paper", "corrected"}));
}

Scenario load(const Common& c) {
  Scenario s = load_scenario(c.scenario);
  if (!c.out.empty()) s.output_dir = c.out;
  if (c.seed) {
    s.seeded_ties = true;
    s.seed = *c.seed;
  }
  if (c.substep) s.substep = *c.substep;
  if (!c.mu_variant.empty()) s.mu_variant = parse_mu_variant(c.mu_variant);
  validate(s);
  return s;
}

void print_report(const CertificateReport& r) {
  for (const auto& c : r.checks) {
    std::printf("  %-40s min-eig % .6e  threshold % .3e  %s\n", c.name.c_str(), c.min_eigenvalue,
                c.threshold, c.pass ? "PASS" : "FAIL");
  }
}

std::string horizon_text(const SamplingHorizon& h) {
  std::string s = "(";
  for (std::size_t i = 0; i < h.length(); ++i) {
    if (i) s += ", ";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", h.intervals()[i]);
    s += buf;
  }
  return s + ")";
}

// --- analyze ------------------------------------------------------------------

int cmd_analyze(const Common& c) {
  const Scenario s = load(c);
  const PlantModel plant(s.a, s.b, s.k, s.d, s.w_max);
  const AnalysisSpec spec = s.analysis.value_or(AnalysisSpec{});
  if (spec.points < 1 || !(spec.to >= spec.from) || !(spec.from > 0.0)) {
    throw ValidationError("analysis.grid needs 0 < from <= to and points >= 1");
  }
  std::vector<double> grid;
  for (int i = 0; i < spec.points; ++i) {
    grid.push_back(spec.points == 1 ? spec.from
                                    : spec.from + (spec.to - spec.from) * i / (spec.points - 1));
  }
  const MotivationalReport r = motivational_report(plant, grid, spec.pairs);
  const fs::path dir = s.output_dir;
  write_text(dir / "sweep.csv", sweep_csv(r));
  if (!r.cases.empty()) write_text(dir / "cases.csv", cases_csv(r));
  if (s.write_gnuplot) write_text(dir / "sweep.gp", sweep_gnuplot());

  std::printf("sweep: %zu points in [%g, %g]", r.sweep.size(), spec.from, spec.to);
  if (r.largest_stabilizing) std::printf(", largest stabilizing T = %g", *r.largest_stabilizing);
  std::printf("\n");
  for (const auto& k : r.cases) {
    std::printf("pair (%g, %g): rho1 = %.4f [%s]  rho2 = %.4f [%s]  rho(product) = %.4f [%s]\n",
                k.first, k.second, k.radius_first, k.first_schur() ? "Schur" : "not Schur",
                k.radius_second, k.second_schur() ? "Schur" : "not Schur", k.radius_product,
                k.product_schur() ? "Schur" : "not Schur");
  }
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

// --- certify ------------------------------------------------------------------

int cmd_certify(const Common& c) {
  const Experiment ex(load(c));
  const auto report = ex.certificate_report();
  std::printf("mode %s, sigma* = %s\n", to_string(ex.scenario().mechanism).c_str(),
              horizon_text(ex.sigma_star()).c_str());
  print_report(report);
  Json j = certificate_to_json(ex);
  if (const auto* pc = ex.perturbed_certificate()) {
    std::printf("  varpi = %.6g  C = %.6g  C' = %.6g  chi = %.6g  mu = %.6g (%s)  psi = %.6g\n",
                pc->constants.varpi, pc->constants.c, pc->constants.c_prime, pc->chi, pc->mu,
                to_string(pc->mu_variant).c_str(), tangent_ball(*pc));
    std::printf("  largest admissible varpi = %.6g\n", ex.max_admissible_varpi());
  }
  write_json(fs::path(ex.scenario().output_dir) / "certificate.json", j);
  std::printf("%s\n", report.pass() ? "PASS" : "FAIL");
  return report.pass() ? 0 : kExitInfeasible;
}

// --- partition ----------------------------------------------------------------

int cmd_partition(const Common& c) {
  Experiment ex(load(c));
  if (!ex.scenario().offline()) throw ValidationError("partition needs an offline mode");
  const auto report = ex.certificate_report();
  if (!report.pass()) {
    print_report(report);
    throw InfeasibleError("certificate does not verify; no policy written");
  }
  const RegionPolicy& policy = ex.build_policy();
  const fs::path dir = ex.scenario().output_dir;
  write_json(dir / "policy.json", policy_to_json(policy, ex.space()));
  write_json(dir / "certificate.json", certificate_to_json(ex));
  std::size_t seed_only = 0;
  for (const auto& e : policy.entries) {
    if (e.horizons.size() == 1 && e.horizons.front() == policy.seed_index) ++seed_only;
  }
  std::printf("policy: %d regions (%zu keep only sigma* = %s), written to %s\n", policy.regions,
              seed_only, horizon_text(ex.sigma_star()).c_str(), (dir / "policy.json").string().c_str());
  return 0;
}

// --- simulate -----------------------------------------------------------------

Json summarize(const Experiment& ex, const SimulationTrace& trace, const TraceReport& check) {
  const Scenario& s = ex.scenario();
  double total = 0.0;
  double worst = 0.0;
  for (const auto& d : trace.decisions) {
    total += d.seconds;
    worst = std::max(worst, d.seconds);
  }
  Json j{{"scenario", s.name},
         {"mechanism", to_string(s.mechanism)},
         {"average_interval", trace.average_interval()},
         {"intervals", trace.interval_count()},
         {"decisions", trace.decisions.size()},
         {"final_time", trace.final_time},
         {"sigma_star", ex.sigma_star().intervals()},
         {"sigma_star_average", ex.sigma_star().average()},
         {"t_max", ex.space().t_max()},
         {"violations", check.violations},
         {"verification", trace_report_to_json(check)},
         {"decision_seconds_total", total},
         {"decision_seconds_max", worst}};
  if (s.reported_average) {
    j["reported_average"] = *s.reported_average;
    j["relative_deviation"] = (trace.average_interval() - *s.reported_average) / *s.reported_average;
    if (!s.reported_note.empty()) j["reported_note"] = s.reported_note;
  }
  if (const auto* pc = ex.perturbed_certificate()) {
    j["mu"] = pc->mu;
    j["varpi"] = pc->constants.varpi;
  }
  return j;
}

int cmd_simulate(const Common& c, const std::string& policy_path) {
  Experiment ex(load(c));
  const Scenario& s = ex.scenario();
  const fs::path dir = s.output_dir;
  if (s.offline()) {
    const fs::path p = policy_path.empty() ? dir / "policy.json" : fs::path(policy_path);
    if (!fs::exists(p)) {
      throw ValidationError("offline mode needs a policy file; none at " + p.string() +
                            ". Run `selftrig partition --scenario " + c.scenario +
                            "` first or pass --policy PATH");
    }
    ex.set_policy(policy_from_json(read_json(p)));
  }
  const SimulationTrace trace = ex.simulate();
  const TraceReport check = ex.verify(trace);
  const Json summary = summarize(ex, trace, check);
  if (s.write_csv) {
    write_text(dir / "samples.csv", samples_csv(trace, ex.lyapunov()));
    write_text(dir / "dense.csv", dense_csv(trace, ex.lyapunov()));
  }
  if (s.write_json) {
    write_json(dir / "summary.json", summary);
    write_json(dir / "trace.json", trace_to_json(trace));
    write_json(dir / "certificate.json", certificate_to_json(ex));
  }
  if (s.write_gnuplot) write_text(dir / "plot.gp", trace_gnuplot(s.name, ex.plant().state_dim()));
  std::printf("%s: average interval %.6g over %zu intervals (%zu decisions), violations %zu\n",
              s.name.c_str(), trace.average_interval(), trace.interval_count(),
              trace.decisions.size(), check.violations);
  if (s.reported_average) {
    std::printf("  reported %.6g, relative deviation %+.3f\n", *s.reported_average,
                summary["relative_deviation"].get<double>());
  }
  return check.pass() ? 0 : kExitInfeasible;
}

// --- verify -------------------------------------------------------------------

int cmd_verify(const std::string& trace_path, const std::string& cert_path) {
  const SimulationTrace trace = trace_from_json(read_json(trace_path));
  const LoadedCertificate cert = certificate_from_json(read_json(cert_path));
  TraceReport r;
  if (cert.unperturbed) {
    r = verify_unperturbed_trace(trace, cert.unperturbed->p, cert.unperturbed->beta);
  } else {
    r = verify_perturbed_trace(trace, cert.perturbed->p, cert.perturbed->mu);
  }
  std::printf("%zu checks, %zu violations\n", r.checks.size(), r.violations);
  for (const auto& c : r.checks) {
    if (!c.pass) std::printf("  step %zu: %.9e > %.9e\n", c.step, c.value, c.bound);
  }
  std::printf("%s\n", r.pass() ? "PASS" : "FAIL");
  return r.pass() ? 0 : kExitInfeasible;
}

// --- sweep --------------------------------------------------------------------

void apply(Scenario& s, const std::string& param, double v) {
  if (param == "regions") {
    s.regions = static_cast<int>(std::lround(v));
  } else if (param == "beta") {
    s.beta = v;
  } else if (param == "l_max") {
    s.l_max = static_cast<int>(std::lround(v));
  } else if (param == "t_end") {
    s.t_end = v;
  } else if (param == "gamma") {
    s.gamma_online = v;
  } else if (param == "varpi") {
    s.varpi = v;
  } else {
    throw ValidationError("unknown sweep parameter '" + param + "'");
  }
  validate(s);
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<double>& values) {
  const Scenario base = load(c);
  std::string csv = param + ",average_interval,intervals,decisions,violations,status\n";
  bool all_ok = true;
  for (double v : values) {
    Scenario s = base;
    apply(s, param, v);
    char row[256];
    try {
      Experiment ex(s);
      if (s.offline()) ex.build_policy();
      const SimulationTrace trace = ex.simulate();
      const TraceReport check = ex.verify(trace);
      all_ok = all_ok && check.pass();
      std::snprintf(row, sizeof row, "%.17g,%.17g,%zu,%zu,%zu,ok\n", v, trace.average_interval(),
                    trace.interval_count(), trace.decisions.size(), check.violations);
      std::printf("%s = %g: average %.6g, violations %zu\n", param.c_str(), v,
                  trace.average_interval(), check.violations);
    } catch (const InfeasibleError& e) {
      all_ok = false;
      std::snprintf(row, sizeof row, "%.17g,,,,,infeasible\n", v);
      std::printf("%s = %g: infeasible (%s)\n", param.c_str(), v, e.what());
    }
    csv += row;
  }
  const fs::path out = fs::path(base.output_dir) / ("sweep_" + param + ".csv");
  write_text(out, csv);
  std::printf("wrote %s\n", out.string().c_str());
  return all_ok ? 0 : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal self-triggered sampling for linear sampled-data systems"};
  app.require_subcommand(1);

  Common analyze_opts, certify_opts, partition_opts, simulate_opts, sweep_opts;
  std::string policy_path, trace_path, cert_path, sweep_param;
  std::vector<double> sweep_values;

  auto* analyze = app.add_subcommand("analyze", "spectral radius sweep and interval-pair cases");
  add_common(analyze, analyze_opts);
  auto* certify = app.add_subcommand("certify", "build or verify the scenario's certificate");
  add_common(certify, certify_opts);
  auto* partition = app.add_subcommand("partition", "precompute the offline region policy");
  add_common(partition, partition_opts);
  auto* simulate = app.add_subcommand("simulate", "run the closed loop and write traces");
  add_common(simulate, simulate_opts);
  simulate->add_option("--policy", policy_path, "policy file for offline modes")
      ->check(CLI::ExistingFile);
  auto* verify = app.add_subcommand("verify", "re-check a trace against a certificate");
  verify->add_option("--trace", trace_path, "trace.json from simulate")->required()->check(CLI::ExistingFile);
  verify->add_option("--certificate", cert_path, "certificate.json")->required()->check(CLI::ExistingFile);
  auto* sweep = app.add_subcommand("sweep", "simulate over a list of values for one parameter");
  add_common(sweep, sweep_opts);
  sweep->add_option("--param", sweep_param, "regions | beta | l_max | t_end | gamma | varpi")->required();
  sweep->add_option("--values", sweep_values, "parameter values")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*analyze) return cmd_analyze(analyze_opts);
    if (*certify) return cmd_certify(certify_opts);
    if (*partition) return cmd_partition(partition_opts);
    if (*simulate) return cmd_simulate(simulate_opts, policy_path);
    if (*verify) return cmd_verify(trace_path, cert_path);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_param, sweep_values);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DimensionError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
