#include "selftrig/io.hpp"

#include "selftrig/errors.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace selftrig {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array() || j.front().empty()) {
    throw ValidationError(what + ": expected a non-empty row-major matrix");
  }
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j.front().size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != j.front().size()) {
      throw ValidationError(what + ": ragged matrix rows");
    }
    for (std::size_t k = 0; k < j[i].size(); ++k) {
      if (!j[i][k].is_number()) throw ValidationError(what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

namespace {

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

template <class T>
T field(const Json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw ValidationError(what + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(what + ": bad field '" + key + "': " + e.what());
  }
}

TriggerMode parse_mode(const std::string& s) {
  for (auto m : {TriggerMode::online_unperturbed, TriggerMode::offline_unperturbed,
                 TriggerMode::online_perturbed, TriggerMode::offline_perturbed,
                 TriggerMode::fallback_tmax}) {
    if (s == to_string(m)) return m;
  }
  throw ValidationError("unknown decision mode '" + s + "'");
}

}  // namespace

Json certificate_to_json(const StabilityCertificate& cert) {
  return Json{{"kind", "unperturbed"},
              {"P", matrix_to_json(cert.p.matrix())},
              {"beta", cert.beta},
              {"sigma_star", cert.sigma_star.intervals()},
              {"rho", cert.rho}};
}

Json certificate_to_json(const PerturbedCertificate& cert) {
  const bool online = cert.variant == PerturbedVariant::online;
  Json j{{"kind", online ? "perturbed-online" : "perturbed-offline"},
         {"P", matrix_to_json(cert.p.matrix())},
         {"beta", cert.beta},
         {"sigma_star", cert.sigma_star.intervals()},
         {"varpi", cert.constants.varpi},
         {"C", cert.constants.c},
         {"C_prime", cert.constants.c_prime},
         {"T_max", cert.constants.t_max},
         {"chi", cert.chi},
         {"mu", cert.mu},
         {"mu_variant", cert.mu_variant == MuVariant::paper ? "paper" : "corrected"}};
  if (online) {
    j["M"] = matrix_to_json(cert.m->matrix());
    j["gamma"] = cert.gamma;
    j["lambda_max_PMinvP_plus_P"] = cert.lambda_pmp;
  } else {
    j["gamma1"] = cert.gamma1;
    j["gamma2"] = cert.gamma2;
  }
  return j;
}

Json report_to_json(const CertificateReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"min_eigenvalue", c.min_eigenvalue},
                      {"threshold", c.threshold},
                      {"pass", c.pass}});
  }
  return Json{{"pass", r.pass()}, {"checks", checks}};
}

Json certificate_to_json(const Experiment& ex) {
  Json j = ex.certificate() ? certificate_to_json(*ex.certificate())
                            : certificate_to_json(*ex.perturbed_certificate());
  j["verification"] = report_to_json(ex.certificate_report());
  if (const auto* pc = ex.perturbed_certificate()) {
    j["tangent_ball"] = tangent_ball(*pc);
    j["max_admissible_varpi"] = ex.max_admissible_varpi();
  }
  return j;
}

LoadedCertificate certificate_from_json(const Json& j) {
  const std::string what = "certificate";
  const auto kind = field<std::string>(j, "kind", what);
  const SymmetricMatrix p(matrix_from_json(field<Json>(j, "P", what), what + ".P"));
  const SamplingHorizon sigma(field<std::vector<double>>(j, "sigma_star", what));
  const auto beta = field<double>(j, "beta", what);
  LoadedCertificate out;
  if (kind == "unperturbed") {
    out.unperturbed = StabilityCertificate{p, beta, sigma, field<double>(j, "rho", what)};
    return out;
  }
  if (kind != "perturbed-online" && kind != "perturbed-offline") {
    throw ValidationError("certificate: unknown kind '" + kind + "'");
  }
  PerturbedCertificate c;
  c.variant = kind == "perturbed-online" ? PerturbedVariant::online : PerturbedVariant::offline;
  c.p = p;
  c.beta = beta;
  c.sigma_star = sigma;
  c.constants.varpi = field<double>(j, "varpi", what);
  c.constants.c = field<double>(j, "C", what);
  c.constants.c_prime = field<double>(j, "C_prime", what);
  c.constants.t_max = field<double>(j, "T_max", what);
  const auto mv = field<std::string>(j, "mu_variant", what);
  if (mv != "paper" && mv != "corrected") throw ValidationError("certificate: bad mu_variant");
  c.mu_variant = mv == "paper" ? MuVariant::paper : MuVariant::corrected;
  if (c.variant == PerturbedVariant::online) {
    c.m = SymmetricMatrix(matrix_from_json(field<Json>(j, "M", what), what + ".M"));
    c.gamma = field<double>(j, "gamma", what);
  } else {
    c.gamma1 = field<double>(j, "gamma1", what);
    c.gamma2 = field<double>(j, "gamma2", what);
  }
  finalize(c);
  out.perturbed = std::move(c);
  return out;
}

Json policy_to_json(const RegionPolicy& policy, const HorizonSpace& space) {
  Json entries = Json::array();
  for (std::size_t c = 0; c < policy.entries.size(); ++c) {
    const auto& e = policy.entries[c];
    Json horizons = Json::array();
    for (auto i : e.horizons) horizons.push_back(space.horizon_at(i).intervals());
    Json entry{{"region", c + 1},
               {"average", e.average},
               {"indices", e.horizons},
               {"horizons", horizons},
               {"epsilons", e.epsilons}};
    if (c < policy.audit_min_eigenvalue.size()) {
      entry["audit_min_eigenvalue"] = policy.audit_min_eigenvalue[c];
    }
    entries.push_back(std::move(entry));
  }
  return Json{{"variant", policy.perturbed ? "perturbed" : "unperturbed"},
              {"regions", policy.regions},
              {"overlap", policy.overlap},
              {"gamma", policy.gamma},
              {"l_min", policy.l_min},
              {"l_max", policy.l_max},
              {"seed_index", policy.seed_index},
              {"seed_horizon", space.horizon_at(policy.seed_index).intervals()},
              {"entries", entries}};
}

RegionPolicy policy_from_json(const Json& j) {
  const std::string what = "policy";
  RegionPolicy p;
  const auto variant = field<std::string>(j, "variant", what);
  if (variant != "perturbed" && variant != "unperturbed") {
    throw ValidationError("policy: unknown variant '" + variant + "'");
  }
  p.perturbed = variant == "perturbed";
  p.regions = field<int>(j, "regions", what);
  p.overlap = field<double>(j, "overlap", what);
  p.gamma = field<std::vector<double>>(j, "gamma", what);
  p.l_min = field<int>(j, "l_min", what);
  p.l_max = field<int>(j, "l_max", what);
  p.seed_index = field<std::uint64_t>(j, "seed_index", what);
  for (const auto& e : field<Json>(j, "entries", what)) {
    RegionEntry r;
    r.average = field<double>(e, "average", what);
    r.horizons = field<std::vector<std::uint64_t>>(e, "indices", what);
    r.epsilons = field<std::vector<double>>(e, "epsilons", what);
    p.entries.push_back(std::move(r));
    if (e.contains("audit_min_eigenvalue")) {
      p.audit_min_eigenvalue.push_back(field<std::vector<double>>(e, "audit_min_eigenvalue", what));
    }
  }
  return p;
}

Json trace_to_json(const SimulationTrace& trace) {
  Json states = Json::array();
  for (const auto& x : trace.sample_states) states.push_back(vector_to_json(x));
  Json decisions = Json::array();
  for (const auto& d : trace.decisions) {
    decisions.push_back({{"tau", d.tau},
                         {"x", vector_to_json(d.x)},
                         {"V", d.v},
                         {"horizon", d.decision.horizon.intervals()},
                         {"mode", to_string(d.decision.mode)},
                         {"feasible_count", d.decision.feasible_count},
                         {"tie_count", d.decision.tie_count},
                         {"seconds", d.seconds}});
  }
  return Json{{"sample_times", trace.sample_times},
              {"sample_states", states},
              {"sample_decision", trace.sample_decision},
              {"decisions", decisions},
              {"final_time", trace.final_time},
              {"final_state", vector_to_json(trace.final_state)}};
}

SimulationTrace trace_from_json(const Json& j) {
  const std::string what = "trace";
  SimulationTrace t;
  t.sample_times = field<std::vector<double>>(j, "sample_times", what);
  for (const auto& x : field<Json>(j, "sample_states", what)) {
    t.sample_states.push_back(vector_from_json(x, what));
  }
  t.sample_decision = field<std::vector<std::size_t>>(j, "sample_decision", what);
  for (const auto& d : field<Json>(j, "decisions", what)) {
    DecisionRecord r;
    r.tau = field<double>(d, "tau", what);
    r.x = vector_from_json(field<Json>(d, "x", what), what);
    r.v = field<double>(d, "V", what);
    r.decision.horizon = SamplingHorizon(field<std::vector<double>>(d, "horizon", what));
    r.decision.mode = parse_mode(field<std::string>(d, "mode", what));
    r.decision.feasible_count = field<std::uint64_t>(d, "feasible_count", what);
    r.decision.tie_count = field<std::uint64_t>(d, "tie_count", what);
    r.seconds = field<double>(d, "seconds", what);
    t.decisions.push_back(std::move(r));
  }
  t.final_time = field<double>(j, "final_time", what);
  t.final_state = vector_from_json(field<Json>(j, "final_state", what), what);
  if (t.sample_times.size() != t.sample_states.size()) {
    throw ValidationError("trace: sample_times and sample_states differ in length");
  }
  return t;
}

Json trace_report_to_json(const TraceReport& r) {
  Json failed = Json::array();
  for (const auto& c : r.checks) {
    if (!c.pass) failed.push_back({{"step", c.step}, {"value", c.value}, {"bound", c.bound}});
  }
  Json j{{"checks", r.checks.size()}, {"violations", r.violations}, {"failed", failed},
         {"pass", r.pass()}};
  if (r.first_entry) j["first_entry"] = *r.first_entry;
  return j;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string samples_csv(const SimulationTrace& trace, const SymmetricMatrix& p) {
  std::ostringstream os;
  os << std::setprecision(17);
  const Eigen::Index n = trace.sample_states.empty() ? 0 : trace.sample_states.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  os << ",V,horizon_id,interval\n";
  for (std::size_t k = 0; k < trace.sample_times.size(); ++k) {
    const Vector& x = trace.sample_states[k];
    os << trace.sample_times[k];
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << x(i);
    os << ',' << p.quad(x) << ',';
    if (k + 1 < trace.sample_times.size()) {
      os << trace.sample_decision[k + 1] << ','
         << trace.sample_times[k + 1] - trace.sample_times[k];
    } else {
      os << ',';
    }
    os << '\n';
  }
  return os.str();
}

std::string dense_csv(const SimulationTrace& trace, const SymmetricMatrix& p) {
  std::ostringstream os;
  os << std::setprecision(12);
  const Eigen::Index n = trace.dense_states.empty() ? 0 : trace.dense_states.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  os << ",V\n";
  for (std::size_t k = 0; k < trace.dense_times.size(); ++k) {
    const Vector& x = trace.dense_states[k];
    os << trace.dense_times[k];
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << x(i);
    os << ',' << p.quad(x) << '\n';
  }
  return os.str();
}

std::string trace_gnuplot(const std::string& title, Eigen::Index state_dim) {
  std::ostringstream os;
  os << "# gnuplot -p plot.gp\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set multiplot layout 3,1 title '" << title << "'\n"
     << "set ylabel 'state'\nplot ";
  for (Eigen::Index i = 0; i < state_dim; ++i) {
    if (i > 0) os << ", ";
    os << "'dense.csv' using 1:" << i + 2 << " with lines";
  }
  os << "\nset ylabel 'V'\nset logscale y\n"
     << "plot 'samples.csv' using 1:" << state_dim + 2 << " with linespoints\n"
     << "unset logscale y\nset ylabel 'interval'\nset xlabel 't'\n"
     << "plot 'samples.csv' using 1:" << state_dim + 4 << " with steps\n"
     << "unset multiplot\n";
  return os.str();
}

std::string sweep_csv(const MotivationalReport& r) {
  std::ostringstream os;
  os << std::setprecision(17) << "T,spectral_radius\n";
  for (const auto& p : r.sweep) os << p.interval << ',' << p.spectral_radius << '\n';
  return os.str();
}

std::string cases_csv(const MotivationalReport& r) {
  std::ostringstream os;
  os << std::setprecision(17)
     << "first,second,radius_first,radius_second,radius_product,first_schur,second_schur,"
        "product_schur\n";
  for (const auto& c : r.cases) {
    os << c.first << ',' << c.second << ',' << c.radius_first << ',' << c.radius_second << ','
       << c.radius_product << ',' << c.first_schur() << ',' << c.second_schur() << ','
       << c.product_schur() << '\n';
  }
  return os.str();
}

std::string sweep_gnuplot() {
  return "# gnuplot -p sweep.gp\n"
         "set datafile separator ','\n"
         "set key autotitle columnhead\n"
         "set xlabel 'T'\nset ylabel 'spectral radius'\n"
         "plot 'sweep.csv' using 1:2 with lines, 1 with lines dashtype 2 title 'unit circle'\n";
}

}  // namespace selftrig
