#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace teachopt;
using namespace teachopt::moea;

namespace {

/// Three-objective sphere-like problem with one linear constraint.
struct Toy {
  static constexpr std::size_t kVars = 4;
  static constexpr std::size_t kObjectives = 3;
  using Vector = std::array<double, kVars>;
  struct Evaluation {
    std::array<double, 3> f{};
    double cv = 0.0;
    bool feasible() const { return cv == 0.0; }
  };

  double lower(std::size_t) const { return 0.0; }
  double upper(std::size_t) const { return 1.0; }

  Evaluation evaluate(const Vector& x) const {
    Evaluation e;
    const double r = 1.0 + x[3];
    e.f = {r * std::cos(x[0] * 1.5707963) * std::cos(x[1] * 1.5707963),
           r * std::cos(x[0] * 1.5707963) * std::sin(x[1] * 1.5707963),
           r * std::sin(x[0] * 1.5707963) + x[2]};
    e.cv = std::max(0.0, 0.3 - x[0] - x[1]);
    return e;
  }
};

using E = oracle::Eval;

E feasible(double a, double b, double c) { return {{a, b, c}, 0.0}; }
E infeasible(double cv) { return {{0, 0, 0}, cv}; }

}  // namespace

TEST(Cdp, DominationRules) {
  EXPECT_EQ(cdp_compare(feasible(1, 1, 1), feasible(2, 2, 2)), Ordering::a_better);
  EXPECT_EQ(cdp_compare(feasible(9, 9, 9), infeasible(0.001)), Ordering::a_better);
  EXPECT_EQ(cdp_compare(infeasible(2), infeasible(5)), Ordering::a_better);
  EXPECT_EQ(cdp_compare(infeasible(5), infeasible(2)), Ordering::b_better);
  EXPECT_EQ(cdp_compare(infeasible(3), infeasible(3)), Ordering::incomparable);
  EXPECT_EQ(cdp_compare(feasible(1, 2, 3), feasible(3, 2, 1)), Ordering::incomparable);
  EXPECT_EQ(cdp_compare(feasible(1, 2, 3), feasible(1, 2, 3)), Ordering::incomparable);
}

TEST(Cdp, AntisymmetricAndTransitive) {
  Rng rng(61);
  const auto pop = oracle::random_population(rng, 300);
  for (std::size_t i = 0; i < 100; ++i) {
    for (std::size_t j = 0; j < 100; ++j) {
      const auto ab = cdp_compare(pop[i], pop[j]);
      const auto ba = cdp_compare(pop[j], pop[i]);
      if (ab == Ordering::a_better) EXPECT_EQ(ba, Ordering::b_better);
      if (ab == Ordering::incomparable) EXPECT_EQ(ba, Ordering::incomparable);
      for (std::size_t k = 0; k < 30 && ab == Ordering::a_better; ++k)
        if (cdp_compare(pop[j], pop[k]) == Ordering::a_better)
          EXPECT_EQ(cdp_compare(pop[i], pop[k]), Ordering::a_better);
    }
  }
}

TEST(Sort, TotalOrderGivesSingletonFronts) {
  const std::vector<E> pop{feasible(1, 1, 1), feasible(2, 2, 2), feasible(3, 3, 3)};
  const auto fronts = fast_nondominated_sort(std::span<const E>(pop));
  EXPECT_EQ(fronts, (std::vector<std::vector<std::size_t>>{{0}, {1}, {2}}));
}

TEST(Sort, MutuallyNonDominatedIsOneFront) {
  const std::vector<E> pop{feasible(1, 3, 2), feasible(2, 1, 3), feasible(3, 2, 1)};
  EXPECT_EQ(fast_nondominated_sort(std::span<const E>(pop)).size(), 1u);
}

TEST(Sort, MatchesBruteForceOracle) {
  Rng rng(63);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pop = oracle::random_population(rng, 200);
    const auto fronts = fast_nondominated_sort(std::span<const E>(pop));
    ASSERT_EQ(fronts, oracle::brute_force_fronts(pop)) << "population " << trial;
  }
}

TEST(Sort, FrontStructure) {
  Rng rng(65);
  const auto pop = oracle::random_population(rng, 200);
  const auto fronts = fast_nondominated_sort(std::span<const E>(pop));
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    for (auto i : fronts[r])
      for (auto j : fronts[r]) EXPECT_NE(cdp_compare(pop[i], pop[j]), Ordering::a_better);
    if (r == 0) continue;
    for (auto j : fronts[r]) {
      bool covered = false;
      for (auto i : fronts[r - 1]) covered = covered || cdp_compare(pop[i], pop[j]) == Ordering::a_better;
      EXPECT_TRUE(covered);
    }
  }
}

TEST(Crowding, SmallFrontsAreBoundary) {
  const std::vector<E> pop{feasible(1, 2, 3), feasible(3, 2, 1)};
  const std::vector<std::size_t> front{0, 1};
  for (double d : crowding_distance(std::span<const E>(pop), std::span<const std::size_t>(front)))
    EXPECT_TRUE(std::isinf(d));
}

TEST(Crowding, EquallySpacedMiddlePointGetsThree) {
  const std::vector<E> pop{feasible(0, 4, 2), feasible(1, 3, 3), feasible(2, 2, 4)};
  const std::vector<std::size_t> front{0, 1, 2};
  const auto d = crowding_distance(std::span<const E>(pop), std::span<const std::size_t>(front));
  EXPECT_TRUE(std::isinf(d[0]));
  EXPECT_TRUE(std::isinf(d[2]));
  EXPECT_DOUBLE_EQ(d[1], 3.0);
}

TEST(Crowding, PermutationInvariant) {
  Rng rng(67);
  std::vector<E> pop(40);
  for (auto& e : pop)
    for (auto& v : e.f) v = rng.uniform();
  std::vector<std::size_t> front(pop.size());
  std::iota(front.begin(), front.end(), 0);
  const auto base = crowding_distance(std::span<const E>(pop), std::span<const std::size_t>(front));
  std::vector<std::size_t> perm = front;
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[3], perm[17]);
  const auto shuffled = crowding_distance(std::span<const E>(pop), std::span<const std::size_t>(perm));
  for (std::size_t k = 0; k < perm.size(); ++k) EXPECT_EQ(shuffled[k], base[perm[k]]);
}

TEST(Sbx, IdenticalParentsAndZeroProbability) {
  Rng rng(69);
  const std::array<double, 3> lo{0, 0, 0}, hi{1, 1, 1}, p{0.2, 0.5, 0.9}, q{0.8, 0.1, 0.3};
  for (int n = 0; n < 100; ++n) {
    const auto [a, b] = sbx_crossover(p, p, lo, hi, 20.0, 1.0, rng);
    EXPECT_EQ(a, p);
    EXPECT_EQ(b, p);
    const auto [c, d] = sbx_crossover(p, q, lo, hi, 20.0, 0.0, rng);
    EXPECT_EQ(c, p);
    EXPECT_EQ(d, q);
  }
}

TEST(Sbx, FirstChildMeanMatchesMixture) {
  // wide bounds so that clamping never biases the mean
  Rng rng(71);
  const std::array<double, 2> lo{-100, -100}, hi{100, 100}, p{0.2, -1.0}, q{0.8, 3.0};
  constexpr int n = 100000;
  std::array<double, 2> sum{}, sq{};
  for (int i = 0; i < n; ++i) {
    const auto [a, b] = sbx_crossover(p, q, lo, hi, 20.0, 1.0, rng);
    for (int j = 0; j < 2; ++j) {
      // the child pair is symmetric about the parent midpoint by construction, so
      // test the first child alone
      EXPECT_NEAR(0.5 * (a[j] + b[j]), 0.5 * (p[j] + q[j]), 1e-12);
      const double m = a[j];
      sum[j] += m;
      sq[j] += m * m;
    }
  }
  for (int j = 0; j < 2; ++j) {
    const double mean = sum[j] / n;
    const double var = sq[j] / n - mean * mean;
    // a coordinate is crossed with probability 1/2, otherwise c1 keeps p
    EXPECT_NEAR(mean, 0.75 * p[j] + 0.25 * q[j], 3.0 * std::sqrt(var / n));
  }
}

TEST(Sbx, ChildrenWithinBounds) {
  Rng rng(73);
  const std::array<double, 3> lo{0, 0, 0}, hi{1, 1, 1};
  for (int n = 0; n < 20000; ++n) {
    std::array<double, 3> p, q;
    for (int i = 0; i < 3; ++i) {
      p[i] = rng.uniform();
      q[i] = rng.uniform();
    }
    const auto [a, b] = sbx_crossover(p, q, lo, hi, 2.0, 1.0, rng);
    for (int i = 0; i < 3; ++i) {
      EXPECT_GE(a[i], 0.0);
      EXPECT_LE(a[i], 1.0);
      EXPECT_GE(b[i], 0.0);
      EXPECT_LE(b[i], 1.0);
    }
  }
}

TEST(Mutation, ZeroProbabilityLeavesInputUnchanged) {
  Rng rng(75);
  const std::array<double, 9> lo{}, hi{1, 1, 1, 1, 1, 1, 1, 1, 1};
  std::array<double, 9> x;
  x.fill(0.4);
  for (int n = 0; n < 100; ++n) EXPECT_EQ(polynomial_mutation(x, lo, hi, 20.0, 0.0, rng), x);
}

TEST(Mutation, FrequencyIsOneNinth) {
  Rng rng(77);
  const std::array<double, 9> lo{}, hi{1, 1, 1, 1, 1, 1, 1, 1, 1};
  std::array<double, 9> x;
  x.fill(0.5);
  constexpr int n = 100000;
  std::array<int, 9> changed{};
  for (int t = 0; t < n; ++t) {
    const auto y = polynomial_mutation(x, lo, hi, 20.0, 1.0 / 9.0, rng);
    for (int i = 0; i < 9; ++i) changed[i] += y[i] != x[i];
  }
  const double p = 1.0 / 9.0, sigma = std::sqrt(p * (1 - p) / n);
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(changed[i] / double(n), p, 3.0 * sigma);
}

TEST(Mutation, LowerBoundOnlyMovesUp) {
  Rng rng(79);
  const std::array<double, 2> lo{0.3, 19.0}, hi{20.0, 50.0};
  int moved = 0;
  for (int n = 0; n < 10000; ++n) {
    const auto y = polynomial_mutation(lo, lo, hi, 20.0, 1.0, rng);
    for (int i = 0; i < 2; ++i) {
      EXPECT_GE(y[i], lo[i]);
      moved += y[i] > lo[i];
    }
  }
  EXPECT_GT(moved, 8000);
}

TEST(Hypervolume, MatchesCellEnumeration) {
  Rng rng(81);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::array<double, 3>> pts(1 + trial % 12);
    for (auto& p : pts)
      for (auto& v : p) v = std::floor(rng.uniform() * 8.0) / 2.0;
    const std::array<double, 3> ref{3.5, 3.5, 3.5};
    EXPECT_NEAR(hypervolume<3>(pts, ref), oracle::brute_hypervolume<3>(pts, ref), 1e-12);
  }
  const std::array<double, 2> ref2{1.0, 1.0};
  EXPECT_DOUBLE_EQ(hypervolume<2>({{0.5, 0.5}}, ref2), 0.25);
  EXPECT_DOUBLE_EQ(hypervolume<2>({{0.0, 0.5}, {0.5, 0.0}}, ref2), 0.75);
  EXPECT_EQ(hypervolume<2>({{2.0, 0.0}}, ref2), 0.0);
}

TEST(RunConfig, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.pop_size = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.pop_size = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.p_mutation = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Engine, SeededRunsAreBitIdentical) {
  RunConfig c;
  c.pop_size = 40;
  c.generations = 30;
  c.seed = 5;
  const auto a = run(c, Toy{});
  const auto b = run(c, Toy{});
  ASSERT_EQ(a.front.size(), b.front.size());
  for (std::size_t i = 0; i < a.front.size(); ++i) {
    EXPECT_EQ(a.front[i].x, b.front[i].x);
    EXPECT_EQ(a.front[i].eval.f, b.front[i].eval.f);
    EXPECT_EQ(a.front[i].crowding, b.front[i].crowding);
  }
  c.seed = 6;
  const auto other = run(c, Toy{});
  EXPECT_FALSE(other.front.size() == a.front.size() && other.front[0].x == a.front[0].x);
}

TEST(Engine, ThreadCountDoesNotChangeResults) {
  RunConfig c;
  c.pop_size = 40;
  c.generations = 20;
  const auto a = run(c, Toy{}, {1, std::nullopt});
  const auto b = run(c, Toy{}, {4, std::nullopt});
  ASSERT_EQ(a.front.size(), b.front.size());
  for (std::size_t i = 0; i < a.front.size(); ++i) EXPECT_EQ(a.front[i].x, b.front[i].x);
}

TEST(Engine, ElitismKeepsBestValues) {
  RunConfig c;
  c.pop_size = 40;
  c.generations = 60;
  Nsga2<Toy> engine(Toy{}, c);
  engine.initialize();
  auto best = [&] {
    std::array<double, 3> b;
    b.fill(std::numeric_limits<double>::infinity());
    double cv = std::numeric_limits<double>::infinity();
    for (const auto& m : engine.population()) {
      cv = std::min(cv, m.eval.cv);
      if (!m.eval.feasible()) continue;
      for (int i = 0; i < 3; ++i) b[i] = std::min(b[i], m.eval.f[i]);
    }
    return std::pair{b, cv};
  };
  auto prev = best();
  while (!engine.done()) {
    engine.step();
    const auto now = best();
    for (int i = 0; i < 3; ++i) EXPECT_LE(now.first[i], prev.first[i]);
    EXPECT_LE(now.second, prev.second);
    for (const auto& m : engine.population())
      for (std::size_t i = 0; i < Toy::kVars; ++i) {
        EXPECT_GE(m.x[i], 0.0);
        EXPECT_LE(m.x[i], 1.0);
      }
    prev = now;
  }
}

TEST(Engine, FinalFrontFeasibleAndNonDominated) {
  RunConfig c;
  c.pop_size = 60;
  c.generations = 40;
  const auto a = run(c, Toy{});
  ASSERT_FALSE(a.front.empty());
  for (const auto& m : a.front) {
    EXPECT_TRUE(m.eval.feasible());
    EXPECT_EQ(m.rank, 0u);
    for (const auto& o : a.front) EXPECT_FALSE(dominates(o.eval.f, m.eval.f));
  }
  EXPECT_EQ(a.stats.size(), c.generations + 1);
}

TEST(Engine, RestoreContinuesIdentically) {
  RunConfig c;
  c.pop_size = 40;
  c.generations = 30;
  c.seed = 11;
  Nsga2<Toy> full(Toy{}, c);
  full.run();

  RunConfig half = c;
  half.generations = 15;
  Nsga2<Toy> first(Toy{}, half);
  first.run();
  const auto snap = first.snapshot();

  Nsga2<Toy> resumed(Toy{}, c);
  resumed.restore(snap);
  EXPECT_EQ(resumed.generation(), 15u);
  EXPECT_TRUE(resumed.rng() == first.rng());
  resumed.run();

  ASSERT_EQ(full.population().size(), resumed.population().size());
  for (std::size_t i = 0; i < full.population().size(); ++i) {
    EXPECT_EQ(full.population()[i].x, resumed.population()[i].x);
    EXPECT_EQ(full.population()[i].rank, resumed.population()[i].rank);
    EXPECT_EQ(full.population()[i].crowding, resumed.population()[i].crowding);
  }
  EXPECT_EQ(full.stats().size(), resumed.stats().size());
}

TEST(Engine, RestoreRejectsMismatchedPopulation) {
  RunConfig c;
  c.pop_size = 40;
  Nsga2<Toy> engine(Toy{}, c);
  Snapshot<Toy> s;
  s.x.resize(10);
  s.rank.resize(10);
  s.crowding.resize(10);
  EXPECT_THROW(engine.restore(s), ConfigError);
}

TEST(Engine, DeskScaleHypervolumeWindowsNonDecreasing) {
  const TeachingProblem problem;
  const auto expert = problem.evaluate(expert_design());
  RunConfig c;
  c.pop_size = 100;
  c.generations = 200;
  c.seed = 3;
  EngineOptions opt;
  opt.hv_reference = std::vector<double>(expert.f.begin(), expert.f.end());
  const auto a = run(c, problem, opt);
  ASSERT_EQ(a.stats.size(), 201u);
  for (std::size_t t = 0; t + 50 < a.stats.size(); ++t) {
    const double h0 = *a.stats[t].hypervolume, h1 = *a.stats[t + 50].hypervolume;
    EXPECT_GE(h1, h0 * (1.0 - 1e-3)) << "window starting at generation " << t;
  }
  EXPECT_GT(*a.stats.back().hypervolume, 0.0);
}
