#include "selftrig/horizons.hpp"

#include "selftrig/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace selftrig {

int compare_average(double a, double b) noexcept {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  if (std::abs(a - b) <= kAverageTieTolerance * scale) return 0;
  return a < b ? -1 : 1;
}

SamplingHorizon::SamplingHorizon(std::vector<double> intervals) : intervals_(std::move(intervals)) {
  if (intervals_.empty()) throw DomainError("sampling horizon must contain at least one interval");
  for (double t : intervals_) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("sampling intervals must be positive");
  }
}

double SamplingHorizon::duration() const noexcept {
  double s = 0.0;
  for (double t : intervals_) s += t;
  return s;
}

double SamplingHorizon::average() const noexcept {
  return intervals_.empty() ? 0.0 : duration() / static_cast<double>(intervals_.size());
}

double duration(const SamplingHorizon& h) noexcept { return h.duration(); }
double average_interval(const SamplingHorizon& h) noexcept { return h.average(); }

HorizonSpace::HorizonSpace(std::vector<double> gamma, int l_min, int l_max)
    : gamma_(std::move(gamma)), l_min_(l_min), l_max_(l_max) {
  if (gamma_.empty()) throw DomainError("horizon space: interval set is empty");
  for (std::size_t i = 0; i < gamma_.size(); ++i) {
    if (!(gamma_[i] > 0.0) || !std::isfinite(gamma_[i])) {
      throw DomainError("horizon space: intervals must be positive and finite");
    }
    if (i > 0 && !(gamma_[i] > gamma_[i - 1])) {
      throw DomainError("horizon space: intervals must be strictly increasing");
    }
  }
  if (l_min_ < 1) throw DomainError("horizon space: l_min must be >= 1");
  if (l_max_ < l_min_) throw DomainError("horizon space: l_max must be >= l_min");
  (void)count();  // overflow check
}

std::uint64_t HorizonSpace::count_of_length(int length) const {
  std::uint64_t c = 1;
  const std::uint64_t b = gamma_.size();
  for (int i = 0; i < length; ++i) {
    if (c > std::numeric_limits<std::uint64_t>::max() / b) {
      throw DomainError("horizon space: horizon count overflows 64 bits");
    }
    c *= b;
  }
  return c;
}

std::uint64_t HorizonSpace::offset_of_length(int length) const {
  std::uint64_t off = 0;
  for (int l = l_min_; l < length; ++l) off += count_of_length(l);
  return off;
}

std::uint64_t HorizonSpace::count() const { return offset_of_length(l_max_ + 1); }

std::optional<std::size_t> HorizonSpace::interval_index(double t) const {
  const auto it = std::lower_bound(gamma_.begin(), gamma_.end(), t);
  if (it == gamma_.end() || *it != t) return std::nullopt;
  return static_cast<std::size_t>(it - gamma_.begin());
}

bool HorizonSpace::contains(const SamplingHorizon& h) const {
  const auto l = static_cast<int>(h.length());
  if (l < l_min_ || l > l_max_) return false;
  return std::all_of(h.intervals().begin(), h.intervals().end(),
                     [&](double t) { return interval_index(t).has_value(); });
}

std::uint64_t HorizonSpace::index_of(const SamplingHorizon& h) const {
  if (!contains(h)) throw DomainError("horizon is not a member of the horizon space");
  std::uint64_t local = 0;
  for (double t : h.intervals()) local = local * base() + *interval_index(t);
  return offset_of_length(static_cast<int>(h.length())) + local;
}

SamplingHorizon HorizonSpace::horizon_at(std::uint64_t index) const {
  if (index >= count()) throw DomainError("horizon index out of range");
  int l = l_min_;
  while (index >= count_of_length(l)) {
    index -= count_of_length(l);
    ++l;
  }
  std::vector<double> iv(static_cast<std::size_t>(l));
  for (int j = l - 1; j >= 0; --j) {
    iv[static_cast<std::size_t>(j)] = gamma_[index % base()];
    index /= base();
  }
  return SamplingHorizon(std::move(iv));
}

HorizonCursor::HorizonCursor(const HorizonSpace& space, std::uint64_t start)
    : space_(&space), index_(start), end_(space.count()) {
  if (done()) return;
  int l = space.l_min();
  std::uint64_t local = start;
  while (local >= space.count_of_length(l)) {
    local -= space.count_of_length(l);
    ++l;
  }
  length_ = l;
  digits_.assign(static_cast<std::size_t>(l), 0);
  for (int j = l - 1; j >= 0; --j) {
    digits_[static_cast<std::size_t>(j)] = local % space.base();
    local /= space.base();
  }
  first_changed_ = 0;
}

void HorizonCursor::advance() {
  if (done()) return;
  ++index_;
  if (done()) return;
  const std::size_t b = space_->base();
  int j = length_ - 1;
  while (j >= 0) {
    auto& d = digits_[static_cast<std::size_t>(j)];
    if (++d < b) break;
    d = 0;
    --j;
  }
  if (j < 0) {
    ++length_;
    digits_.assign(static_cast<std::size_t>(length_), 0);
    first_changed_ = 0;
  } else {
    first_changed_ = j;
  }
}

SamplingHorizon HorizonCursor::horizon() const {
  std::vector<double> iv;
  iv.reserve(digits_.size());
  for (std::size_t d : digits_) iv.push_back(space_->gamma()[d]);
  return SamplingHorizon(std::move(iv));
}

Matrix transition(const SamplingHorizon& h, const DiscretizationCache& cache) {
  if (h.empty()) throw DomainError("transition: empty horizon");
  Matrix phi = cache.closed(h.intervals().front());
  for (std::size_t j = 1; j < h.length(); ++j) phi = cache.closed(h.intervals()[j]) * phi;
  return phi;
}

}  // namespace selftrig
