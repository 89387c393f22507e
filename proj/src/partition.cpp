#include "selftrig/partition.hpp"

#include "selftrig/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace selftrig {

ConicPartition::ConicPartition(int state_dim, int count, double overlap) : overlap_(overlap) {
  if (state_dim != 2) {
    throw DimensionError("conic partitions are only implemented for n = 2 (got n = " +
                         std::to_string(state_dim) + ")");
  }
  if (count < 1) throw DomainError("partition needs at least one region");
  if (!(overlap >= 0.0) || !std::isfinite(overlap)) throw DomainError("overlap must be >= 0");

  const double pi = std::numbers::pi;
  half_angle_ = std::min(pi / 2.0, pi / (2.0 * count) * (1.0 + overlap));
  // At π/2 the cosine would be ~6e-17 rather than 0; pin it so N = 1 covers exactly.
  const double c2 = half_angle_ >= pi / 2.0 ? 0.0 : std::cos(half_angle_) * std::cos(half_angle_);

  regions_.reserve(static_cast<std::size_t>(count));
  axes_.reserve(static_cast<std::size_t>(count));
  for (int c = 1; c <= count; ++c) {
    const double angle = (c - 0.5) * pi / count;
    Vector d(2);
    d << std::cos(angle), std::sin(angle);
    regions_.emplace_back(d * d.transpose() - c2 * Matrix::Identity(2, 2));
    axes_.push_back(std::move(d));
  }
}

const SymmetricMatrix& ConicPartition::region(int c) const {
  if (c < 1 || c > count()) throw DomainError("region index out of range");
  return regions_[static_cast<std::size_t>(c - 1)];
}

const Vector& ConicPartition::axis(int c) const {
  if (c < 1 || c > count()) throw DomainError("region index out of range");
  return axes_[static_cast<std::size_t>(c - 1)];
}

ConicPartition build_partition(int state_dim, int count, double overlap) {
  return ConicPartition(state_dim, count, overlap);
}

int region_of(const ConicPartition& partition, const Vector& x) {
  if (x.size() != 2) throw DimensionError("state dimension does not match the partition");
  if (x.isZero(0.0)) return 1;
  // Normalizing keeps the test independent of the state's magnitude.
  const Vector u = x / x.norm();
  for (int c = 1; c <= partition.count(); ++c) {
    if (partition.region(c).quad(u) >= 0.0) return c;
  }
  // Overlap guarantees coverage; rounding at an edge can still leave a gap of
  // a few ulps, so fall back to the region whose form is largest.
  int best = 1;
  double best_value = partition.region(1).quad(u);
  for (int c = 2; c <= partition.count(); ++c) {
    const double v = partition.region(c).quad(u);
    if (v > best_value) {
      best_value = v;
      best = c;
    }
  }
  return best;
}

std::optional<double> epsilon_search(const SymmetricMatrix& w, const SymmetricMatrix& q) {
  if (w.size() != q.size()) throw DimensionError("W and Q must have the same size");
  const Matrix neg_w = -w.matrix();
  auto value = [&](double log_eps) {
    return min_eigenvalue(SymmetricMatrix(neg_w - std::pow(10.0, log_eps) * q.matrix()));
  };

  constexpr double lo = -9.0;
  constexpr double hi = 9.0;
  double best_x = lo;
  double best_v = value(lo);
  if (best_v >= -kEpsilonFeasibility) return std::pow(10.0, lo);
  for (double x = lo + 1.0; x <= hi; x += 1.0) {
    const double v = value(x);
    if (v >= -kEpsilonFeasibility) return std::pow(10.0, x);
    if (v > best_v) {
      best_v = v;
      best_x = x;
    }
  }

  double a = std::max(lo, best_x - 1.0);
  double b = std::min(hi, best_x + 1.0);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = value(c);
  double fd = value(d);
  for (int i = 0; i < 100 && b - a > 1e-10; ++i) {
    if (fc >= -kEpsilonFeasibility) return std::pow(10.0, c);
    if (fd >= -kEpsilonFeasibility) return std::pow(10.0, d);
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = value(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = value(d);
    }
  }
  const double x = 0.5 * (a + b);
  if (value(x) >= -kEpsilonFeasibility) return std::pow(10.0, x);
  return std::nullopt;
}

}  // namespace selftrig
