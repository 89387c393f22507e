#pragma once

#include "selftrig/plant.hpp"
#include "selftrig/scenario.hpp"

#include <filesystem>
#include <string>

namespace fixtures {

inline selftrig::Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  selftrig::Matrix m(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline selftrig::Vector vec(std::initializer_list<double> v) {
  selftrig::Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

/// Oscillator used for the single-interval vs. sequence counterexamples.
inline selftrig::PlantModel motivational() {
  return {mat({{0, 1}, {-2, 0.1}}), mat({{0}, {1}}), mat({{1, 0}})};
}

/// Open-loop unstable plant with a stabilizing gain, optionally disturbed.
inline selftrig::PlantModel unstable(bool disturbed = false) {
  if (!disturbed) return {mat({{0, 1}, {-2, 3}}), mat({{0}, {1}}), mat({{1, -4}})};
  return {mat({{0, 1}, {-2, 3}}), mat({{0}, {1}}), mat({{1, -4}}), mat({{1}, {1}}), 1.0};
}

/// ẋ = u, u = −x.
inline selftrig::PlantModel scalar() { return {mat({{0}}), mat({{1}}), mat({{-1}})}; }

inline std::filesystem::path scenario_path(const std::string& name) {
  return std::filesystem::path(SELFTRIG_SCENARIO_DIR) / (name + ".yaml");
}

inline selftrig::Scenario scenario(const std::string& name) {
  return selftrig::load_scenario(scenario_path(name));
}

}  // namespace fixtures
