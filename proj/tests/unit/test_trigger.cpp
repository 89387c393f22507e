#include "selftrig/errors.hpp"
#include "selftrig/experiment.hpp"
#include "selftrig/kernels.hpp"
#include "selftrig/trigger.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace selftrig;
using fixtures::mat;

namespace {

Scenario shortened(const std::string& name, int l_max) {
  Scenario s = fixtures::scenario(name);
  s.l_max = l_max;
  s.certificate.sigma_star.reset();
  return s;
}

std::vector<oracle::Entry> table_for(const Experiment& ex) {
  return oracle::tabulate(ex.space().gamma(), ex.space().l_min(), ex.space().l_max(),
                          [&](double t) { return ex.cache().closed(t); });
}

Vector random_state(std::mt19937_64& rng, double radius) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> r(0.0, radius);
  return Vector(fixtures::vec({g(rng), g(rng)}).normalized() * r(rng));
}

}  // namespace

TEST(TieBreaker, FirstAndSeeded) {
  TieBreaker first;
  EXPECT_EQ(first.pick(5), 0u);
  auto a = TieBreaker::seeded(7), b = TieBreaker::seeded(7);
  bool varied = false;
  std::size_t prev = a.pick(10);
  EXPECT_EQ(prev, b.pick(10));
  for (int i = 0; i < 50; ++i) {
    const std::size_t x = a.pick(10);
    EXPECT_EQ(x, b.pick(10));
    EXPECT_LT(x, 10u);
    varied |= x != prev;
  }
  EXPECT_TRUE(varied);
}

TEST(OptimalSet, SeedFirstWhenTied) {
  ScanResult scan;
  scan.feasible_count = 4;
  scan.best_average = 2.0;
  scan.ties = {3, 8};
  const auto tied = optimal_set(scan, 5, 2.0);
  EXPECT_EQ(tied.indices, (std::vector<std::uint64_t>{5, 3, 8}));
  const auto below = optimal_set(scan, 5, 1.0);
  EXPECT_EQ(below.indices, (std::vector<std::uint64_t>{3, 8}));
  ScanResult none;
  const auto seed_only = optimal_set(none, 5, 1.0);
  EXPECT_EQ(seed_only.indices, (std::vector<std::uint64_t>{5}));
}

TEST(Scan, SerialEqualsParallel) {
  Experiment ex(shortened("online_unperturbed_b0", 5));
  const auto table = make_scan_table(ex.space(), ex.cache());
  const auto test = unperturbed_test(*ex.certificate(), ex.space().l_max());
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 40; ++trial) {
    const Vector x = random_state(rng, 10.0);
    const auto s = scan_serial(table, test, x);
    for (int threads : {1, 2, 3, 8}) {
      const auto p = scan_parallel(table, test, x, threads);
      EXPECT_EQ(s.feasible_count, p.feasible_count);
      EXPECT_EQ(s.best_average, p.best_average);
      EXPECT_EQ(s.ties, p.ties);
    }
  }
}

TEST(OnlineUnperturbed, ZeroStateTakesLongestIntervals) {
  Experiment ex(shortened("online_unperturbed_b0", 3));
  TieBreaker ties;
  const auto d = decide_online_unperturbed(Vector::Zero(2), *ex.certificate(), ex.space(),
                                           ex.cache(), ties);
  EXPECT_EQ(d.feasible_count, ex.space().count());
  EXPECT_DOUBLE_EQ(d.horizon.average(), ex.space().t_max());
  EXPECT_EQ(d.horizon.intervals(), std::vector<double>{ex.space().t_max()});
  EXPECT_EQ(d.tie_count, 3u);
}

TEST(OnlineUnperturbed, DegenerateSpace) {
  const std::vector<double> gamma{0.5};
  const HorizonSpace space(gamma, 1, 1);
  const DiscretizationCache cache(fixtures::unstable(), gamma);
  const auto cert = certify_unperturbed(cache.closed(0.5), 0.0, SamplingHorizon({0.5}));
  TieBreaker ties;
  std::mt19937_64 rng(52);
  for (int i = 0; i < 20; ++i) {
    const auto d = decide_online_unperturbed(random_state(rng, 5.0), cert, space, cache, ties);
    EXPECT_EQ(d.horizon, SamplingHorizon({0.5}));
  }
}

TEST(OnlineUnperturbed, MatchesBruteForce) {
  for (const char* name : {"online_unperturbed_b0", "online_unperturbed_b01"}) {
    Experiment ex(shortened(name, 4));
    const auto table = table_for(ex);
    const auto& cert = *ex.certificate();
    const std::size_t seed = oracle::find(table, cert.sigma_star.intervals());
    ASSERT_LT(seed, table.size());
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 50; ++trial) {
      const Vector x = trial == 0 ? fixtures::vec({5, -2}) : random_state(rng, 10.0);
      const auto ref = oracle::brute_force(table, cert.p.matrix(), cert.p.matrix(), cert.beta, 0.0,
                                           [](std::size_t) { return 0.0; }, x, seed);
      const auto set = ex.online().optimal(x);
      ASSERT_FALSE(set.indices.empty());
      EXPECT_EQ(set.feasible_count, ref.feasible);
      EXPECT_EQ(set.average, ref.average);
      std::vector<std::size_t> got(set.indices.begin(), set.indices.end());
      EXPECT_EQ(got, ref.optimal);
      TieBreaker ties;
      EXPECT_EQ(ex.online().decide(x, ties).horizon.intervals(), table[ref.optimal.front()].horizon);
    }
  }
}

TEST(OnlineUnperturbed, SeedAlwaysFeasible) {
  Experiment ex(shortened("online_unperturbed_b01", 3));
  const auto& cert = *ex.certificate();
  const Matrix phi = ex.sigma_star_transition();
  std::mt19937_64 rng(54);
  for (int i = 0; i < 1000; ++i) {
    const Vector x = random_state(rng, 100.0);
    EXPECT_LE(unperturbed_pointwise(cert, phi, cert.sigma_star.duration(), x), 0.0);
  }
}

TEST(OnlineUnperturbed, ScaleInvariant) {
  Experiment ex(shortened("online_unperturbed_b0", 4));
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int i = 0; i < 30; ++i) {
    const Vector x = random_state(rng, 10.0);
    TieBreaker a, b;
    EXPECT_EQ(ex.online().decide(x, a).horizon, ex.online().decide(scale(rng) * x, b).horizon);
  }
}

TEST(OnlinePerturbed, MatchesBruteForce) {
  for (const char* name : {"online_perturbed_b0", "published_certificate_online_b0"}) {
    Experiment ex(shortened(name, 4));
    const auto& cert = *ex.perturbed_certificate();
    const auto table = table_for(ex);
    const std::size_t seed = oracle::find(table, cert.sigma_star.intervals());
    ASSERT_LT(seed, table.size());
    const auto offsets = oracle::perturbed_offsets(cert.p.matrix(), cert.m->matrix(),
                                                   cert.constants.varpi, cert.constants.c,
                                                   cert.gamma, ex.space().l_max());
    std::mt19937_64 rng(56);
    int scanned = 0;
    for (int trial = 0; trial < 80; ++trial) {
      const Vector x = random_state(rng, 20.0);
      TieBreaker ties;
      const auto d = ex.online().decide(x, ties);
      if (x.dot(cert.p.matrix() * x) <= 1.0) {
        EXPECT_EQ(d.mode, TriggerMode::fallback_tmax);
        EXPECT_EQ(d.horizon, SamplingHorizon({ex.space().t_max()}));
        continue;
      }
      ++scanned;
      const auto ref = oracle::brute_force(
          table, cert.p.matrix() + cert.m->matrix(), cert.p.matrix(), cert.beta, cert.gamma,
          [&](std::size_t l) { return offsets[l]; }, x, seed);
      const auto set = ex.online().optimal(x);
      EXPECT_EQ(set.average, ref.average);
      EXPECT_EQ(set.feasible_count, ref.feasible);
      EXPECT_EQ(d.horizon.intervals(), table[ref.optimal.front()].horizon);
    }
    EXPECT_GT(scanned, 20);
  }
}

TEST(OnlinePerturbed, ZeroStateFallsBack) {
  Experiment ex(shortened("online_perturbed_b0", 3));
  TieBreaker ties;
  const auto d = decide_online_perturbed(Vector::Zero(2), *ex.perturbed_certificate(), ex.space(),
                                         ex.cache(), ties);
  EXPECT_EQ(d.mode, TriggerMode::fallback_tmax);
  EXPECT_EQ(d.horizon, SamplingHorizon({ex.space().t_max()}));
}

TEST(OnlinePerturbed, NotScaleInvariant) {
  Experiment ex(shortened("online_perturbed_b0", 4));
  const auto& m = ex.online();
  std::mt19937_64 rng(57);
  bool differs = false;
  for (int i = 0; i < 200 && !differs; ++i) {
    const Vector x = random_state(rng, 50.0);
    if (ex.perturbed_certificate()->p.quad(x) <= 1.0) continue;
    for (double s : {1.5, 3.0, 10.0, 100.0}) {
      differs |= m.optimal(x).average != m.optimal(s * x).average;
    }
  }
  EXPECT_TRUE(differs);
}

TEST(OnlinePerturbed, NoDisturbanceMatchesUnperturbedFarAway) {
  Experiment ex(shortened("online_unperturbed_b0", 4));
  const auto& base = *ex.certificate();
  PerturbedCertificate pc;
  pc.variant = PerturbedVariant::online;
  pc.p = base.p;
  pc.m = SymmetricMatrix(1e-12 * Matrix::Identity(2, 2));
  pc.gamma = 1e-12;
  pc.beta = base.beta;
  pc.sigma_star = base.sigma_star;
  pc.constants = {0.0, 1.0, 1.0, ex.space().t_max()};
  finalize(pc);
  const OnlineMechanism perturbed(pc, ex.space(), ex.cache());
  std::mt19937_64 rng(58);
  for (int i = 0; i < 100; ++i) {
    const Vector x = random_state(rng, 1.0).normalized() * 1e4;
    const auto a = ex.online().optimal(x);
    const auto b = perturbed.optimal(x);
    EXPECT_EQ(a.feasible_count, b.feasible_count);
    EXPECT_EQ(a.indices, b.indices);
  }
}

TEST(Online, SeededTiesAreDeterministic) {
  Experiment ex(shortened("online_unperturbed_b0", 3));
  std::mt19937_64 rng(59);
  std::vector<Vector> states;
  for (int i = 0; i < 20; ++i) states.push_back(random_state(rng, 0.0));
  auto stream = [&] {
    auto ties = TieBreaker::seeded(99);
    std::vector<SamplingHorizon> out;
    for (const auto& x : states) out.push_back(ex.online().decide(x, ties).horizon);
    return out;
  };
  const auto a = stream();
  EXPECT_EQ(a, stream());
  bool varied = false;
  for (const auto& h : a) varied |= !(h == a.front());
  EXPECT_TRUE(varied);
}

// --- offline ------------------------------------------------------------------

TEST(Regions, SerialEqualsParallel) {
  for (int regions : {1, 7, 40}) {
    Scenario s = shortened("offline_unperturbed_b01", 3);
    s.regions = regions;
    Experiment ex(s);
    const auto fast = precompute_offline_unperturbed(*ex.certificate(), ex.space(), ex.cache(),
                                                     ex.partition(), false, 4);
    const auto ref = precompute_offline_unperturbed(*ex.certificate(), ex.space(), ex.cache(),
                                                    ex.partition(), true);
    ASSERT_EQ(fast.entries.size(), ref.entries.size());
    for (std::size_t c = 0; c < ref.entries.size(); ++c) {
      EXPECT_EQ(fast.entries[c].average, ref.entries[c].average);
      EXPECT_EQ(fast.entries[c].horizons, ref.entries[c].horizons);
    }
  }
}

TEST(Regions, PerturbedSerialEqualsParallel) {
  Scenario s = shortened("offline_perturbed_b0", 3);
  s.regions = 25;
  Experiment ex(s);
  const auto& cert = *ex.perturbed_certificate();
  const auto fast = precompute_offline_perturbed(cert, ex.space(), ex.cache(), ex.partition(), false, 3);
  const auto ref = precompute_offline_perturbed(cert, ex.space(), ex.cache(), ex.partition(), true);
  for (std::size_t c = 0; c < ref.entries.size(); ++c) {
    EXPECT_EQ(fast.entries[c].horizons, ref.entries[c].horizons);
  }
}

TEST(Offline, SingleRegionIsGloballyStable) {
  Scenario s = shortened("offline_unperturbed_b0", 4);
  s.regions = 1;
  Experiment ex(s);
  const auto& policy = ex.build_policy();
  const auto& cert = *ex.certificate();
  ASSERT_EQ(policy.entries.size(), 1u);
  for (auto idx : policy.entries[0].horizons) {
    const auto h = ex.space().horizon_at(idx);
    const Matrix phi = transition(h, ex.cache());
    const SymmetricMatrix w(phi.transpose() * cert.p.matrix() * phi -
                            std::exp(-cert.beta * h.duration()) * cert.p.matrix());
    EXPECT_LE(max_eigenvalue(w), 1e-8 * inf_norm(cert.p.matrix()));
  }
}

TEST(Offline, StoredHorizonsShareTheMaximalAverage) {
  Experiment ex(fixtures::scenario("offline_unperturbed_b0"));
  const auto& policy = ex.build_policy();
  EXPECT_EQ(policy.entries.size(), 100u);
  for (const auto& e : policy.entries) {
    ASSERT_FALSE(e.horizons.empty());
    EXPECT_EQ(e.horizons.size(), e.epsilons.size());
    for (auto idx : e.horizons) {
      EXPECT_EQ(compare_average(ex.space().horizon_at(idx).average(), e.average), 0);
    }
    EXPECT_GE(e.average, ex.sigma_star().average());
  }
}

TEST(Offline, StoredHorizonsPassPointwiseInTheirRegion) {
  for (const char* name : {"offline_unperturbed_b0", "offline_unperturbed_b01"}) {
    Experiment ex(fixtures::scenario(name));
    const auto& policy = ex.build_policy();
    const auto& part = ex.partition();
    const auto& cert = *ex.certificate();
    std::mt19937_64 rng(60);
    std::uniform_real_distribution<double> offset(-1.0, 1.0), radius(1e-3, 1e3);
    for (int c = 1; c <= part.count(); ++c) {
      const double axis = std::atan2(part.axis(c)(1), part.axis(c)(0));
      const auto& e = policy.entries[static_cast<std::size_t>(c - 1)];
      const auto h = ex.space().horizon_at(e.horizons.front());
      const Matrix phi = transition(h, ex.cache());
      for (int i = 0; i < 100; ++i) {
        const double a = axis + offset(rng) * part.half_angle();
        const Vector x = radius(rng) * fixtures::vec({std::cos(a), std::sin(a)});
        if (part.region(c).quad(x) < 0.0) continue;
        const Vector y = phi * x;
        const double lhs = y.dot(cert.p.matrix() * y);
        const double rhs = std::exp(-cert.beta * h.duration()) * x.dot(cert.p.matrix() * x);
        EXPECT_LE(lhs - rhs, 1e-8 * x.squaredNorm()) << name << " region " << c;
      }
    }
  }
}

TEST(Offline, AxisDecisionAndScaling) {
  Experiment ex(fixtures::scenario("offline_unperturbed_b0"));
  const auto& policy = ex.build_policy();
  const auto& part = ex.partition();
  TieBreaker ties;
  for (int c = 1; c <= part.count(); c += 7) {
    const auto d = decide_offline(part.axis(c), policy, part, ex.space(), ties);
    EXPECT_EQ(ex.space().index_of(d.horizon),
              policy.entries[static_cast<std::size_t>(c - 1)].horizons.front());
    EXPECT_EQ(d.mode, TriggerMode::offline_unperturbed);
    const auto twice = decide_offline(2.0 * part.axis(c), policy, part, ex.space(), ties);
    EXPECT_EQ(twice.horizon, d.horizon);
  }
}

TEST(Offline, PerturbedFallbackInsideUnitEllipsoid) {
  Scenario s = shortened("offline_perturbed_b0", 3);
  s.regions = 10;
  Experiment ex(s);
  const auto& policy = ex.build_policy();
  const auto* cert = ex.perturbed_certificate();
  TieBreaker ties;
  const auto d = decide_offline(Vector::Zero(2), policy, ex.partition(), ex.space(), ties, cert);
  EXPECT_EQ(d.mode, TriggerMode::fallback_tmax);
  EXPECT_EQ(d.horizon, SamplingHorizon({ex.space().t_max()}));
  const Vector far = fixtures::vec({100, -100});
  EXPECT_EQ(decide_offline(far, policy, ex.partition(), ex.space(), ties, cert).mode,
            TriggerMode::offline_perturbed);
}

TEST(Offline, PerturbedStoredHorizonsPassBlockTest) {
  Scenario s = fixtures::scenario("offline_perturbed_b0");
  s.regions = 60;
  Experiment ex(s);
  const auto& policy = ex.build_policy();
  const auto& cert = *ex.perturbed_certificate();
  const auto& part = ex.partition();
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> offset(-1.0, 1.0), radius(0.0, 50.0);
  for (int c = 1; c <= part.count(); ++c) {
    const double axis = std::atan2(part.axis(c)(1), part.axis(c)(0));
    for (auto idx : policy.entries[static_cast<std::size_t>(c - 1)].horizons) {
      const auto h = ex.space().horizon_at(idx);
      const Matrix phi = transition(h, ex.cache());
      double gain = 0.0;
      for (std::size_t q = 0; q < h.length(); ++q) gain += std::pow(cert.constants.c, q);
      const double chi = cert.constants.varpi * gain;
      for (int i = 0; i < 50; ++i) {
        const double a = axis + offset(rng) * part.half_angle();
        const Vector x = radius(rng) * fixtures::vec({std::cos(a), std::sin(a)});
        if (part.region(c).quad(x) < 0.0) continue;
        const double v = oracle::offline_block_min(cert.p.matrix(), phi, cert.beta, h.duration(),
                                                   cert.gamma1, cert.gamma2, chi, x);
        EXPECT_GE(v, -1e-8 * std::max(1.0, x.squaredNorm()));
        EXPECT_NEAR(v, offline_perturbed_pointwise(cert, phi, h.duration(), h.length(), x),
                    1e-8 * std::max(1.0, x.squaredNorm()));
      }
    }
  }
}

TEST(Offline, PolicyMismatchRejected) {
  Scenario s = shortened("offline_unperturbed_b0", 2);
  s.regions = 10;
  Experiment ex(s);
  const auto policy = ex.build_policy();
  EXPECT_NO_THROW(check_policy(policy, ex.space(), ex.partition()));
  EXPECT_THROW(check_policy(policy, ex.space(), build_partition(2, 11)), ValidationError);
  const HorizonSpace other(ex.space().gamma(), 1, 3);
  EXPECT_THROW(check_policy(policy, other, ex.partition()), ValidationError);
}
