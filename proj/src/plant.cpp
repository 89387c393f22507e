#include "selftrig/plant.hpp"

#include "selftrig/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace selftrig {

PlantModel::PlantModel(Matrix a, Matrix b, Matrix k, std::optional<Matrix> d, double w_max)
    : a_(std::move(a)), b_(std::move(b)), k_(std::move(k)), d_(std::move(d)), w_max_(w_max) {
  const Eigen::Index n = a_.rows();
  if (n == 0 || a_.cols() != n) throw DimensionError("plant: A must be square and non-empty");
  if (b_.rows() != n || b_.cols() == 0) throw DimensionError("plant: B must have n rows");
  if (k_.rows() != b_.cols() || k_.cols() != n) throw DimensionError("plant: K must be m x n");
  if (d_ && (d_->rows() != n || d_->cols() == 0)) throw DimensionError("plant: D must have n rows");
  if (!a_.allFinite() || !b_.allFinite() || !k_.allFinite() || (d_ && !d_->allFinite())) {
    throw DomainError("plant: non-finite matrix entries");
  }
  if (!(w_max_ >= 0.0) || !std::isfinite(w_max_)) throw DomainError("plant: w_max must be finite and >= 0");

  hurwitz_ = true;
  for (const auto& l : eigenvalues(a_ + b_ * k_)) {
    if (l.real() >= 0.0) hurwitz_ = false;
  }
}

PlantModel PlantModel::with_w_max(double w_max) const {
  return PlantModel(a_, b_, k_, d_, w_max);
}

Discretization discretize(const PlantModel& plant, double interval) {
  if (!(interval > 0.0) || !std::isfinite(interval)) {
    std::ostringstream os;
    os << "discretize: sampling interval must be positive, got " << interval;
    throw DomainError(os.str());
  }
  const Eigen::Index n = plant.state_dim();
  const Eigen::Index m = plant.input_dim();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = plant.a();
  aug.topRightCorner(n, m) = plant.b();
  const Matrix e = expm(aug * interval);

  Discretization out;
  out.interval = interval;
  out.a_t = e.topLeftCorner(n, n);
  out.b_t = e.topRightCorner(n, m);
  out.closed = out.a_t + out.b_t * plant.k();
  return out;
}

DiscretizationCache::DiscretizationCache(const PlantModel& plant, std::span<const double> intervals)
    : n_(plant.state_dim()) {
  for (double t : intervals) {
    if (!entries_.contains(t)) entries_.emplace(t, discretize(plant, t));
  }
}

bool DiscretizationCache::contains(double interval) const { return entries_.contains(interval); }

const Discretization& DiscretizationCache::at(double interval) const {
  const auto it = entries_.find(interval);
  if (it == entries_.end()) {
    std::ostringstream os;
    os << "internal: sampling interval " << interval << " missing from discretization cache";
    throw Error(os.str());
  }
  return it->second;
}

double growth_constant(const PlantModel& plant, std::span<const double> gamma) {
  if (gamma.empty()) throw DomainError("growth_constant: empty interval set");
  double c = 0.0;
  for (double t : gamma) c = std::max(c, two_norm(discretize(plant, t).closed));
  return c;
}

double perturbation_bound(const PlantModel& plant, double interval, int panels) {
  if (!plant.d()) throw DomainError("perturbation_bound: plant has no disturbance channel D");
  if (!(interval > 0.0)) throw DomainError("perturbation_bound: interval must be positive");
  if (panels < 2 || panels % 2 != 0) throw DomainError("perturbation_bound: panel count must be even");
  const Matrix& d = *plant.d();
  if (plant.w_max() == 0.0 || d.isZero(0.0)) return 0.0;

  const double h = interval / panels;
  auto f = [&](double s) { return two_norm(expm(plant.a() * s) * d); };
  double acc = f(0.0) + f(interval);
  for (int i = 1; i < panels; ++i) acc += ((i % 2 == 1) ? 4.0 : 2.0) * f(i * h);
  return plant.w_max() * acc * h / 3.0;
}

double perturbation_bound_max(const PlantModel& plant, std::span<const double> gamma) {
  if (gamma.empty()) throw DomainError("perturbation_bound_max: empty interval set");
  double out = 0.0;
  for (double t : gamma) out = std::max(out, perturbation_bound(plant, t));
  return out;
}

double fallback_norm(const PlantModel& plant, double t_max) {
  return two_norm(discretize(plant, t_max).closed);
}

}  // namespace selftrig
