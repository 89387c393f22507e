#pragma once

#include "selftrig/linalg.hpp"
#include "selftrig/plant.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace selftrig {

/// Relative tolerance under which two average intervals count as a tie.
inline constexpr double kAverageTieTolerance = 1e-12;

/// -1, 0, +1 comparing two averages with kAverageTieTolerance.
int compare_average(double a, double b) noexcept;

/// Ordered list of sampling intervals committed at one decision instant.
class SamplingHorizon {
 public:
  SamplingHorizon() = default;
  explicit SamplingHorizon(std::vector<double> intervals);

  [[nodiscard]] const std::vector<double>& intervals() const noexcept { return intervals_; }
  [[nodiscard]] std::size_t length() const noexcept { return intervals_.size(); }
  [[nodiscard]] bool empty() const noexcept { return intervals_.empty(); }
  /// Sum of intervals, accumulated first to last.
  [[nodiscard]] double duration() const noexcept;
  [[nodiscard]] double average() const noexcept;

  friend bool operator==(const SamplingHorizon&, const SamplingHorizon&) = default;

 private:
  std::vector<double> intervals_;
};

double duration(const SamplingHorizon& h) noexcept;
double average_interval(const SamplingHorizon& h) noexcept;

/// The set of horizons with lengths in [l_min, l_max] and entries from Γ.
///
/// Horizons carry a global enumeration index: length-major, then
/// lexicographic in Γ order with the first interval most significant.
class HorizonSpace {
 public:
  HorizonSpace(std::vector<double> gamma, int l_min, int l_max);

  [[nodiscard]] const std::vector<double>& gamma() const noexcept { return gamma_; }
  [[nodiscard]] int l_min() const noexcept { return l_min_; }
  [[nodiscard]] int l_max() const noexcept { return l_max_; }
  [[nodiscard]] double t_max() const noexcept { return gamma_.back(); }
  [[nodiscard]] std::size_t base() const noexcept { return gamma_.size(); }

  /// Σ_{l=l_min}^{l_max} |Γ|^l. Throws DomainError on 64-bit overflow.
  [[nodiscard]] std::uint64_t count() const;
  [[nodiscard]] std::uint64_t count_of_length(int length) const;
  /// Global index of the first horizon of the given length.
  [[nodiscard]] std::uint64_t offset_of_length(int length) const;

  [[nodiscard]] SamplingHorizon horizon_at(std::uint64_t index) const;
  /// Position of T in Γ, if present (exact match).
  [[nodiscard]] std::optional<std::size_t> interval_index(double t) const;
  [[nodiscard]] bool contains(const SamplingHorizon& h) const;
  /// Throws DomainError when h is not a member.
  [[nodiscard]] std::uint64_t index_of(const SamplingHorizon& h) const;

 private:
  std::vector<double> gamma_;
  int l_min_ = 1;
  int l_max_ = 1;
};

/// Odometer over the global enumeration. Memory is O(l_max); a cursor can be
/// started at any index, which is how scans are split across workers.
class HorizonCursor {
 public:
  explicit HorizonCursor(const HorizonSpace& space, std::uint64_t start = 0);

  [[nodiscard]] bool done() const noexcept { return index_ >= end_; }
  [[nodiscard]] std::uint64_t index() const noexcept { return index_; }
  [[nodiscard]] int length() const noexcept { return length_; }
  /// Γ indices of the current horizon, first interval first.
  [[nodiscard]] const std::vector<std::size_t>& digits() const noexcept { return digits_; }
  /// Leftmost position changed by the last advance() (0 after a length change).
  [[nodiscard]] int first_changed() const noexcept { return first_changed_; }
  [[nodiscard]] SamplingHorizon horizon() const;

  void advance();

 private:
  const HorizonSpace* space_;
  std::uint64_t index_ = 0;
  std::uint64_t end_ = 0;
  int length_ = 0;
  int first_changed_ = 0;
  std::vector<std::size_t> digits_;
};

/// Forward range over every horizon of a space, in enumeration order.
class HorizonStream {
 public:
  class iterator {
   public:
    using value_type = SamplingHorizon;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    explicit iterator(const HorizonSpace& space) : cursor_(HorizonCursor(space)) {}

    SamplingHorizon operator*() const { return cursor_->horizon(); }
    iterator& operator++() {
      cursor_->advance();
      return *this;
    }
    void operator++(int) { ++*this; }
    bool operator==(std::default_sentinel_t) const { return !cursor_ || cursor_->done(); }

   private:
    std::optional<HorizonCursor> cursor_;
  };

  explicit HorizonStream(const HorizonSpace& space) : space_(&space) {}
  [[nodiscard]] iterator begin() const { return iterator(*space_); }
  [[nodiscard]] std::default_sentinel_t end() const { return {}; }

 private:
  const HorizonSpace* space_;
};

/// Lazily enumerate all horizons of the space. The space must outlive the stream.
inline HorizonStream enumerate(const HorizonSpace& space) { return HorizonStream(space); }

/// Φ_σ = Ã(T^l) ··· Ã(T^1): the newest interval multiplies on the left.
Matrix transition(const SamplingHorizon& h, const DiscretizationCache& cache);

}  // namespace selftrig
