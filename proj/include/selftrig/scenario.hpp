#pragma once

#include "selftrig/certificates.hpp"
#include "selftrig/linalg.hpp"
#include "selftrig/partition.hpp"
#include "selftrig/sim.hpp"
#include "selftrig/trigger.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace selftrig {

enum class Mechanism { online_unperturbed, offline_unperturbed, online_perturbed, offline_perturbed };

std::string to_string(Mechanism m);
Mechanism parse_mechanism(const std::string& s);
std::string to_string(MuVariant v);
MuVariant parse_mu_variant(const std::string& s);

/// Numeric literal or a product/quotient of numbers and `pi`, e.g. "5*pi", "pi/2".
double parse_number_expression(const std::string& s);

struct CertificateSpec {
  bool inline_matrices = false;
  std::optional<Matrix> p;
  std::optional<Matrix> m;
  std::optional<std::vector<double>> sigma_star;
};

struct AnalysisSpec {
  double from = 0.01;
  double to = 4.0;
  int points = 400;
  std::vector<std::pair<double, double>> pairs;
};

struct Scenario {
  std::string name;
  std::filesystem::path source;

  Matrix a;
  Matrix b;
  Matrix k;
  std::optional<Matrix> d;
  double w_max = 0.0;
  Disturbance disturbance;

  std::vector<double> gamma;
  int l_min = 1;
  int l_max = 1;

  Mechanism mechanism = Mechanism::online_unperturbed;
  double beta = 0.0;
  double gamma_online = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  int regions = 1;
  double overlap = kDefaultOverlap;
  bool seeded_ties = false;
  std::uint64_t seed = 0;
  MuVariant mu_variant = MuVariant::paper;
  std::optional<double> varpi;

  CertificateSpec certificate;

  Vector x0;
  double t_end = 40.0;
  double substep = 1e-3;
  double dense_step = 0.01;

  std::filesystem::path output_dir = "out";
  bool write_csv = true;
  bool write_json = true;
  bool write_gnuplot = true;

  std::optional<AnalysisSpec> analysis;
  std::optional<double> reported_average;
  /// Why the reproduced average differs from the reported one, if it does.
  std::string reported_note;

  [[nodiscard]] bool perturbed() const noexcept {
    return mechanism == Mechanism::online_perturbed || mechanism == Mechanism::offline_perturbed;
  }
  [[nodiscard]] bool offline() const noexcept {
    return mechanism == Mechanism::offline_unperturbed || mechanism == Mechanism::offline_perturbed;
  }
};

/// Throws IoError when unreadable, ValidationError when malformed.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text, const std::filesystem::path& source = {});

/// Dimensional and mode-specific consistency; throws ValidationError.
void validate(const Scenario& s);

}  // namespace selftrig
