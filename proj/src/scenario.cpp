#include "selftrig/scenario.hpp"

#include "selftrig/errors.hpp"
#include "selftrig/horizons.hpp"
#include "selftrig/plant.hpp"

#include <yaml-cpp/yaml.h>

#include <cctype>
#include <charconv>
#include <fstream>
#include <numbers>
#include <sstream>

namespace selftrig {

std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::online_unperturbed: return "online-unperturbed";
    case Mechanism::offline_unperturbed: return "offline-unperturbed";
    case Mechanism::online_perturbed: return "online-perturbed";
    case Mechanism::offline_perturbed: return "offline-perturbed";
  }
  return "unknown";
}

Mechanism parse_mechanism(const std::string& s) {
  for (auto m : {Mechanism::online_unperturbed, Mechanism::offline_unperturbed,
                 Mechanism::online_perturbed, Mechanism::offline_perturbed}) {
    if (s == to_string(m)) return m;
  }
  throw ValidationError("unknown mechanism mode '" + s +
                        "' (expected online-unperturbed, offline-unperturbed, "
                        "online-perturbed or offline-perturbed)");
}

std::string to_string(MuVariant v) { return v == MuVariant::paper ? "paper" : "corrected"; }

MuVariant parse_mu_variant(const std::string& s) {
  if (s == "paper") return MuVariant::paper;
  if (s == "corrected") return MuVariant::corrected;
  throw ValidationError("mu_variant must be 'paper' or 'corrected', got '" + s + "'");
}

double parse_number_expression(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  if (s.empty()) throw ValidationError("empty numeric expression");
  double value = 1.0;
  char op = '*';
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t end = s.find_first_of("*/", pos);
    const std::string tok = s.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    double v = 0.0;
    if (tok == "pi") {
      v = std::numbers::pi;
    } else {
      const auto* first = tok.data();
      const auto* last = tok.data() + tok.size();
      const auto res = std::from_chars(first, last, v);
      if (tok.empty() || res.ec != std::errc() || res.ptr != last) {
        throw ValidationError("cannot parse numeric expression '" + text + "'");
      }
    }
    value = op == '*' ? value * v : value / v;
    if (end == std::string::npos) break;
    op = s[end];
    pos = end + 1;
  }
  return value;
}

namespace {

std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.line < 0) return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

double number(const YAML::Node& n, const std::string& what) {
  if (!n || !n.IsScalar()) throw ValidationError(what + ": expected a number" + where(n));
  return parse_number_expression(n.Scalar());
}

int integer(const YAML::Node& n, const std::string& what) {
  const double v = number(n, what);
  if (v != static_cast<double>(static_cast<int>(v))) {
    throw ValidationError(what + ": expected an integer" + where(n));
  }
  return static_cast<int>(v);
}

std::vector<double> list(const YAML::Node& n, const std::string& what) {
  if (!n || !n.IsSequence()) throw ValidationError(what + ": expected a list" + where(n));
  std::vector<double> out;
  for (const auto& e : n) out.push_back(number(e, what));
  return out;
}

Matrix matrix(const YAML::Node& n, const std::string& what) {
  if (!n || !n.IsSequence() || n.size() == 0) {
    throw ValidationError(what + ": expected a matrix as a list of rows" + where(n));
  }
  std::vector<std::vector<double>> rows;
  for (const auto& r : n) rows.push_back(list(r, what));
  const std::size_t cols = rows.front().size();
  if (cols == 0) throw ValidationError(what + ": empty row" + where(n));
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw ValidationError(what + ": ragged rows" + where(n));
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

Vector vector_of(const YAML::Node& n, const std::string& what) {
  const auto v = list(n, what);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string text(const YAML::Node& n, const std::string& what) {
  if (!n || !n.IsScalar()) throw ValidationError(what + ": expected a string" + where(n));
  return n.Scalar();
}

Disturbance disturbance(const YAML::Node& n) {
  Disturbance d;
  const std::string kind = text(n["kind"], "plant.disturbance.kind");
  if (kind == "none") {
    d.kind = Disturbance::Kind::none;
  } else if (kind == "sine") {
    d.kind = Disturbance::Kind::sine;
    d.amplitude = n["amplitude"] ? number(n["amplitude"], "disturbance.amplitude") : 1.0;
    d.omega = number(n["omega"], "disturbance.omega");
  } else if (kind == "constant") {
    d.kind = Disturbance::Kind::constant;
    d.amplitude = number(n["value"], "disturbance.value");
  } else if (kind == "noise") {
    d.kind = Disturbance::Kind::noise;
    d.amplitude = number(n["amplitude"], "disturbance.amplitude");
    if (n["cell"]) d.cell = number(n["cell"], "disturbance.cell");
    if (n["seed"]) d.seed = static_cast<std::uint64_t>(integer(n["seed"], "disturbance.seed"));
    if (!(d.cell > 0.0)) throw ValidationError("disturbance.cell must be positive");
  } else {
    throw ValidationError("unknown disturbance kind '" + kind +
                          "' (expected none, sine, constant or noise)");
  }
  return d;
}

}  // namespace

Scenario parse_scenario(const std::string& text_in, const std::filesystem::path& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text_in);
  } catch (const YAML::Exception& e) {
    throw ValidationError("scenario " + source.string() + ": " + e.what());
  }
  if (!root.IsMap()) throw ValidationError("scenario " + source.string() + ": expected a mapping");

  Scenario s;
  s.source = source;
  s.name = root["name"] ? text(root["name"], "name") : source.stem().string();

  const auto plant = root["plant"];
  if (!plant) throw ValidationError("scenario: missing 'plant' block");
  s.a = matrix(plant["A"], "plant.A");
  s.b = matrix(plant["B"], "plant.B");
  s.k = matrix(plant["K"], "plant.K");
  if (plant["D"]) s.d = matrix(plant["D"], "plant.D");
  if (plant["w_max"]) s.w_max = number(plant["w_max"], "plant.w_max");
  if (plant["disturbance"]) s.disturbance = disturbance(plant["disturbance"]);

  const auto hz = root["horizons"];
  if (!hz) throw ValidationError("scenario: missing 'horizons' block");
  s.gamma = list(hz["gamma"], "horizons.gamma");
  s.l_min = hz["l_min"] ? integer(hz["l_min"], "horizons.l_min") : 1;
  s.l_max = integer(hz["l_max"], "horizons.l_max");

  if (const auto mech = root["mechanism"]) {
    s.mechanism = parse_mechanism(text(mech["mode"], "mechanism.mode"));
    if (mech["beta"]) s.beta = number(mech["beta"], "mechanism.beta");
    if (mech["gamma"]) s.gamma_online = number(mech["gamma"], "mechanism.gamma");
    if (mech["gamma1"]) s.gamma1 = number(mech["gamma1"], "mechanism.gamma1");
    if (mech["gamma2"]) s.gamma2 = number(mech["gamma2"], "mechanism.gamma2");
    if (mech["regions"]) s.regions = integer(mech["regions"], "mechanism.regions");
    if (mech["overlap"]) s.overlap = number(mech["overlap"], "mechanism.overlap");
    if (mech["tie_break"]) {
      const std::string tb = text(mech["tie_break"], "mechanism.tie_break");
      if (tb == "first") {
        s.seeded_ties = false;
      } else if (tb == "seeded-random") {
        s.seeded_ties = true;
      } else {
        throw ValidationError("mechanism.tie_break must be 'first' or 'seeded-random'");
      }
    }
    if (mech["seed"]) s.seed = static_cast<std::uint64_t>(integer(mech["seed"], "mechanism.seed"));
    if (mech["mu_variant"]) s.mu_variant = parse_mu_variant(text(mech["mu_variant"], "mechanism.mu_variant"));
    if (mech["varpi"]) s.varpi = number(mech["varpi"], "mechanism.varpi");
  }

  if (const auto cert = root["certificate"]) {
    const std::string src = cert["source"] ? text(cert["source"], "certificate.source") : "auto";
    if (src == "inline") {
      s.certificate.inline_matrices = true;
      s.certificate.p = matrix(cert["P"], "certificate.P");
      if (cert["M"]) s.certificate.m = matrix(cert["M"], "certificate.M");
    } else if (src != "auto") {
      throw ValidationError("certificate.source must be 'auto' or 'inline'");
    }
    if (cert["sigma_star"]) s.certificate.sigma_star = list(cert["sigma_star"], "certificate.sigma_star");
  }

  if (const auto sim = root["simulation"]) {
    if (sim["x0"]) s.x0 = vector_of(sim["x0"], "simulation.x0");
    if (sim["t_end"]) s.t_end = number(sim["t_end"], "simulation.t_end");
    if (sim["substep"]) s.substep = number(sim["substep"], "simulation.substep");
    if (sim["dense_step"]) s.dense_step = number(sim["dense_step"], "simulation.dense_step");
  }

  if (const auto out = root["output"]) {
    if (out["dir"]) s.output_dir = text(out["dir"], "output.dir");
    if (out["formats"]) {
      s.write_csv = s.write_json = s.write_gnuplot = false;
      for (const auto& f : out["formats"]) {
        const std::string fmt = text(f, "output.formats");
        if (fmt == "csv") {
          s.write_csv = true;
        } else if (fmt == "json") {
          s.write_json = true;
        } else if (fmt == "gnuplot") {
          s.write_gnuplot = true;
        } else {
          throw ValidationError("output.formats: unknown format '" + fmt + "'");
        }
      }
    }
  }

  if (const auto an = root["analysis"]) {
    AnalysisSpec a;
    if (const auto g = an["grid"]) {
      if (g["from"]) a.from = number(g["from"], "analysis.grid.from");
      if (g["to"]) a.to = number(g["to"], "analysis.grid.to");
      if (g["points"]) a.points = integer(g["points"], "analysis.grid.points");
    }
    if (const auto pairs = an["pairs"]) {
      for (const auto& p : pairs) {
        const auto v = list(p, "analysis.pairs");
        if (v.size() != 2) throw ValidationError("analysis.pairs: each pair needs two intervals" + where(p));
        a.pairs.emplace_back(v[0], v[1]);
      }
    }
    s.analysis = a;
  }

  if (const auto rep = root["reported"]) {
    if (rep["average_interval"]) s.reported_average = number(rep["average_interval"], "reported.average_interval");
    if (rep["note"]) s.reported_note = text(rep["note"], "reported.note");
  }

  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

void validate(const Scenario& s) {
  auto fail = [&](const std::string& msg) {
    throw ValidationError("scenario " + (s.name.empty() ? s.source.string() : s.name) + ": " + msg);
  };
  try {
    PlantModel plant(s.a, s.b, s.k, s.d, s.w_max);
    HorizonSpace space(s.gamma, s.l_min, s.l_max);
    (void)space.count();
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    fail(e.what());
  }
  const Eigen::Index n = s.a.rows();
  if (s.x0.size() != 0 && s.x0.size() != n) fail("simulation.x0 must have " + std::to_string(n) + " entries");
  if (!(s.beta >= 0.0)) fail("mechanism.beta must be >= 0");
  if (!(s.t_end > 0.0)) fail("simulation.t_end must be positive");
  if (!(s.substep > 0.0) || !(s.dense_step > 0.0)) fail("simulation step sizes must be positive");
  if (s.varpi && !(*s.varpi >= 0.0)) fail("mechanism.varpi must be >= 0");

  if (s.offline()) {
    if (s.regions < 1) fail("mechanism.regions must be >= 1 for offline modes");
    if (n != 2) fail("offline modes need a planar plant (n = 2)");
  }
  if (s.perturbed() && !s.d) fail("perturbed modes need plant.D");
  if (s.d) {
    const double peak = s.disturbance.peak(s.d->cols());
    if (peak > s.w_max * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "disturbance peak " << peak << " exceeds plant.w_max " << s.w_max;
      fail(os.str());
    }
  }
  if (s.mechanism == Mechanism::online_perturbed && !(s.gamma_online > 0.0)) {
    fail("online-perturbed needs mechanism.gamma > 0");
  }
  if (s.mechanism == Mechanism::offline_perturbed && !(s.gamma1 > 0.0 && s.gamma2 > 0.0)) {
    fail("offline-perturbed needs mechanism.gamma1 and mechanism.gamma2 > 0");
  }
  if (s.certificate.inline_matrices) {
    const auto& p = *s.certificate.p;
    if (p.rows() != n || p.cols() != n) fail("certificate.P must be n x n");
    if (s.mechanism == Mechanism::online_perturbed) {
      if (!s.certificate.m) fail("inline online-perturbed certificate needs M");
      if (s.certificate.m->rows() != n || s.certificate.m->cols() != n) fail("certificate.M must be n x n");
    }
  }
  if (s.certificate.sigma_star) {
    try {
      const SamplingHorizon h(*s.certificate.sigma_star);
      if (!HorizonSpace(s.gamma, s.l_min, s.l_max).contains(h)) {
        fail("certificate.sigma_star is not a horizon of the configured space");
      }
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      fail(std::string("certificate.sigma_star: ") + e.what());
    }
  }
}

}  // namespace selftrig
