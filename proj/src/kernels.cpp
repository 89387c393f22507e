#include "selftrig/kernels.hpp"

#include "selftrig/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace selftrig {

int worker_count(int requested) {
  int n = requested;
#ifdef _OPENMP
  if (n <= 0) n = omp_get_max_threads();
#endif
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("SELFTRIG_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<long>(n, cap);
  }
  return n;
}

ScanTable make_scan_table(const HorizonSpace& space, const DiscretizationCache& cache) {
  ScanTable t;
  t.space = &space;
  t.closed.reserve(space.base());
  for (double g : space.gamma()) t.closed.push_back(cache.closed(g));
  return t;
}

namespace {

void check_test(const ScanTable& table, const HorizonTest& test, const Vector& x) {
  if (table.space == nullptr) throw DomainError("scan table has no horizon space");
  const Eigen::Index n = x.size();
  if (test.w.rows() != n || test.p.rows() != n || table.closed.front().rows() != n) {
    throw DimensionError("scan: state and matrix sizes differ");
  }
  if (test.offset.size() < static_cast<std::size_t>(table.space->l_max()) + 1) {
    throw DomainError("scan: offset table shorter than l_max + 1");
  }
}

void fold(ScanResult& acc, double average, std::uint64_t index) {
  if (acc.ties.empty()) {
    acc.best_average = average;
    acc.ties.push_back(index);
    return;
  }
  const int cmp = compare_average(average, acc.best_average);
  if (cmp > 0) {
    acc.best_average = average;
    acc.ties.clear();
    acc.ties.push_back(index);
  } else if (cmp == 0) {
    acc.ties.push_back(index);
  }
}

void merge(ScanResult& acc, const ScanResult& part) {
  acc.feasible_count += part.feasible_count;
  if (part.ties.empty()) return;
  if (acc.ties.empty()) {
    acc.best_average = part.best_average;
    acc.ties = part.ties;
    return;
  }
  const int cmp = compare_average(part.best_average, acc.best_average);
  if (cmp > 0) {
    acc.best_average = part.best_average;
    acc.ties = part.ties;
  } else if (cmp == 0) {
    acc.ties.insert(acc.ties.end(), part.ties.begin(), part.ties.end());
  }
}

ScanResult scan_range(const ScanTable& table, const HorizonTest& test, const Vector& x,
                      std::uint64_t start, std::uint64_t count) {
  ScanResult out;
  if (count == 0) return out;
  const HorizonSpace& space = *table.space;
  const auto& gamma = space.gamma();
  const auto lmax = static_cast<std::size_t>(space.l_max());

  std::vector<Vector> ys(lmax + 1, Vector(x.size()));
  std::vector<double> durs(lmax + 1, 0.0);
  Vector wy(x.size());
  ys[0] = x;
  const double v = x.dot(test.p * x);

  HorizonCursor cur(space, start);
  bool fresh = true;
  for (std::uint64_t i = 0; i < count && !cur.done(); ++i, cur.advance()) {
    const auto l = static_cast<std::size_t>(cur.length());
    const auto& digits = cur.digits();
    const std::size_t from = fresh ? 0 : static_cast<std::size_t>(cur.first_changed());
    fresh = false;
    for (std::size_t j = from; j < l; ++j) {
      ys[j + 1].noalias() = table.closed[digits[j]] * ys[j];
      durs[j + 1] = durs[j] + gamma[digits[j]];
    }
    wy.noalias() = test.w * ys[l];
    const double value =
        ys[l].dot(wy) - (std::exp(-test.beta * durs[l]) - test.shift) * v + test.offset[l];
    if (value <= 0.0) {
      ++out.feasible_count;
      fold(out, durs[l] / static_cast<double>(l), cur.index());
    }
  }
  return out;
}

}  // namespace

ScanResult scan_serial(const ScanTable& table, const HorizonTest& test, const Vector& x) {
  check_test(table, test, x);
  return scan_range(table, test, x, 0, table.space->count());
}

ScanResult scan_parallel(const ScanTable& table, const HorizonTest& test, const Vector& x,
                         int threads) {
  check_test(table, test, x);
  const std::uint64_t total = table.space->count();
  const int workers = worker_count(threads);
  const std::uint64_t chunk =
      std::max<std::uint64_t>(4096, total / (static_cast<std::uint64_t>(workers) * 16) + 1);
  const auto chunks = static_cast<std::int64_t>((total + chunk - 1) / chunk);
  std::vector<ScanResult> parts(static_cast<std::size_t>(chunks));

#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::uint64_t start = static_cast<std::uint64_t>(c) * chunk;
    parts[static_cast<std::size_t>(c)] =
        scan_range(table, test, x, start, std::min(chunk, total - start));
  }

  ScanResult out;
  for (const auto& p : parts) merge(out, p);
  return out;
}

// --- region tables ------------------------------------------------------------

namespace {

std::optional<double> region_epsilon(const RegionForm& f, const SymmetricMatrix& q) {
  if (!f.eligible) return std::nullopt;
  return epsilon_search(f.w, q);
}

RegionEntry seed_entry(std::uint64_t seed, double average, const std::optional<double>& eps) {
  RegionEntry e;
  e.average = average;
  e.horizons.push_back(seed);
  e.epsilons.push_back(eps.value_or(0.0));
  return e;
}

}  // namespace

std::vector<RegionEntry> build_regions_serial(const HorizonSpace& space,
                                              const DiscretizationCache& cache,
                                              const ConicPartition& partition,
                                              const RegionFormFn& form, std::uint64_t seed) {
  const SamplingHorizon seed_h = space.horizon_at(seed);
  const RegionForm seed_form = form(transition(seed_h, cache), seed_h.duration(), seed_h.length());

  std::vector<RegionEntry> out;
  out.reserve(static_cast<std::size_t>(partition.count()));
  for (int c = 1; c <= partition.count(); ++c) {
    const SymmetricMatrix& q = partition.region(c);
    RegionEntry e = seed_entry(seed, seed_h.average(), region_epsilon(seed_form, q));
    for (std::uint64_t i = 0; i < space.count(); ++i) {
      if (i == seed) continue;
      const SamplingHorizon h = space.horizon_at(i);
      const auto eps = region_epsilon(form(transition(h, cache), h.duration(), h.length()), q);
      if (!eps) continue;
      const int cmp = compare_average(h.average(), e.average);
      if (cmp > 0) {
        e.average = h.average();
        e.horizons.assign(1, i);
        e.epsilons.assign(1, *eps);
      } else if (cmp == 0) {
        e.horizons.push_back(i);
        e.epsilons.push_back(*eps);
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<RegionEntry> build_regions_parallel(const HorizonSpace& space,
                                                const DiscretizationCache& cache,
                                                const ConicPartition& partition,
                                                const RegionFormFn& form, std::uint64_t seed,
                                                int threads) {
  const int workers = worker_count(threads);
  const auto total = static_cast<std::int64_t>(space.count());
  std::vector<RegionForm> forms(static_cast<std::size_t>(total));
  std::vector<double> averages(static_cast<std::size_t>(total));

#pragma omp parallel for schedule(dynamic, 1024) num_threads(workers)
  for (std::int64_t i = 0; i < total; ++i) {
    const SamplingHorizon h = space.horizon_at(static_cast<std::uint64_t>(i));
    forms[static_cast<std::size_t>(i)] = form(transition(h, cache), h.duration(), h.length());
    averages[static_cast<std::size_t>(i)] = h.average();
  }

  // Horizons grouped by average, best group first, each group in index order.
  std::vector<std::uint64_t> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), std::uint64_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint64_t a, std::uint64_t b) { return averages[a] > averages[b]; });
  std::vector<std::size_t> group_start;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (group_start.empty() ||
        compare_average(averages[order[k]], averages[order[group_start.back()]]) != 0) {
      group_start.push_back(k);
    }
  }
  group_start.push_back(order.size());
  for (std::size_t g = 0; g + 1 < group_start.size(); ++g) {
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(group_start[g]),
              order.begin() + static_cast<std::ptrdiff_t>(group_start[g + 1]));
  }

  const double seed_avg = averages[seed];
  const int regions = partition.count();
  std::vector<RegionEntry> out(static_cast<std::size_t>(regions));

#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int c = 1; c <= regions; ++c) {
    const SymmetricMatrix& q = partition.region(c);
    const Vector& axis = partition.axis(c);
    const auto seed_eps = region_epsilon(forms[seed], q);
    RegionEntry e = seed_entry(seed, seed_avg, seed_eps);

    for (std::size_t g = 0; g + 1 < group_start.size(); ++g) {
      const double group_avg = averages[order[group_start[g]]];
      const int cmp = compare_average(group_avg, seed_avg);
      if (cmp < 0) break;
      RegionEntry found;
      for (std::size_t k = group_start[g]; k < group_start[g + 1]; ++k) {
        const std::uint64_t i = order[k];
        if (i == seed || !forms[i].eligible) continue;
        // Along the axis Q_c is positive, so a clearly positive W there rules
        // out every multiplier; the margin keeps this a strict subset of the
        // failures epsilon_search would report.
        if (forms[i].w.quad(axis) > 2.0 * kEpsilonFeasibility) continue;
        const auto eps = epsilon_search(forms[i].w, q);
        if (!eps) continue;
        if (found.horizons.empty()) found.average = averages[i];
        found.horizons.push_back(i);
        found.epsilons.push_back(*eps);
      }
      if (cmp == 0) {
        e.horizons.insert(e.horizons.end(), found.horizons.begin(), found.horizons.end());
        e.epsilons.insert(e.epsilons.end(), found.epsilons.begin(), found.epsilons.end());
        break;
      }
      if (!found.horizons.empty()) {
        e = std::move(found);
        break;
      }
    }
    out[static_cast<std::size_t>(c - 1)] = std::move(e);
  }
  return out;
}

}  // namespace selftrig
