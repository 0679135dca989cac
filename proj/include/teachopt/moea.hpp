#pragma once

// NSGA-II with the constraint-domination principle (CDP).
//
// A solution is better than another when (a) both are feasible and it Pareto
// dominates, (b) it is feasible and the other is not, or (c) both are infeasible
// and its aggregate constraint violation is smaller.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "teachopt/errors.hpp"
#include "teachopt/parallel.hpp"
#include "teachopt/random.hpp"

namespace teachopt::moea {

template <class E>
concept ConstrainedEvaluation = requires(const E& e) {
  { e.f.size() } -> std::convertible_to<std::size_t>;
  { e.f[0] } -> std::convertible_to<double>;
  { e.cv } -> std::convertible_to<double>;
  { e.feasible() } -> std::same_as<bool>;
};

/// Box-bounded real-coded problem with a constrained evaluation.
template <class P>
concept Problem = requires(const P& p, const typename P::Vector& x, std::size_t i) {
  { P::kVars } -> std::convertible_to<std::size_t>;
  { P::kObjectives } -> std::convertible_to<std::size_t>;
  { p.lower(i) } -> std::convertible_to<double>;
  { p.upper(i) } -> std::convertible_to<double>;
  { p.evaluate(x) } -> std::same_as<typename P::Evaluation>;
} && ConstrainedEvaluation<typename P::Evaluation>;

enum class Ordering { a_better, b_better, incomparable };

/// Pareto dominance for minimization.
template <class F>
bool dominates(const F& a, const F& b) {
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly = true;
  }
  return strictly;
}

template <ConstrainedEvaluation E>
Ordering cdp_compare(const E& a, const E& b) {
  const bool fa = a.feasible(), fb = b.feasible();
  if (fa && fb) {
    if (dominates(a.f, b.f)) return Ordering::a_better;
    if (dominates(b.f, a.f)) return Ordering::b_better;
    return Ordering::incomparable;
  }
  if (fa) return Ordering::a_better;
  if (fb) return Ordering::b_better;
  if (a.cv < b.cv) return Ordering::a_better;
  if (b.cv < a.cv) return Ordering::b_better;
  return Ordering::incomparable;
}

/// Fronts of CDP non-domination, best first. Each front lists indices in
/// ascending order.
template <ConstrainedEvaluation E>
std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const E> pop) {
  const std::size_t n = pop.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      switch (cdp_compare(pop[i], pop[j])) {
        case Ordering::a_better:
          dominated[i].push_back(j);
          ++count[j];
          break;
        case Ordering::b_better:
          dominated[j].push_back(i);
          ++count[i];
          break;
        case Ordering::incomparable:
          break;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (count[i] == 0) current.push_back(i);

  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t i : current) {
      for (std::size_t j : dominated[i]) {
        if (--count[j] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

/// Crowding distance for the members of one front, aligned with `front`.
/// Objectives with a zero or non-finite range contribute nothing.
template <ConstrainedEvaluation E>
std::vector<double> crowding_distance(std::span<const E> pop, std::span<const std::size_t> front) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = front.size();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), inf);
    return dist;
  }
  const std::size_t m = pop[front[0]].f.size();
  std::vector<std::size_t> order(n);
  for (std::size_t obj = 0; obj < m; ++obj) {
    std::iota(order.begin(), order.end(), 0);
    const auto value = [&](std::size_t k) { return pop[front[k]].f[obj]; };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    const double lo = value(order.front()), hi = value(order.back());
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    const double range = hi - lo;
    if (!std::isfinite(range) || range <= 0.0) continue;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      dist[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
    }
  }
  return dist;
}

/// Simulated binary crossover; children are clamped to [lower, upper].
template <std::size_t N>
std::pair<std::array<double, N>, std::array<double, N>> sbx_crossover(
    const std::array<double, N>& p1, const std::array<double, N>& p2,
    const std::array<double, N>& lower, const std::array<double, N>& upper, double eta,
    double p_crossover, Rng& rng) {
  std::array<double, N> c1 = p1, c2 = p2;
  if (!(rng.uniform() < p_crossover)) return {c1, c2};
  for (std::size_t i = 0; i < N; ++i) {
    if (!(rng.uniform() < 0.5) || std::abs(p1[i] - p2[i]) <= 1e-14) continue;
    const double u = rng.uniform();
    const double beta = u <= 0.5 ? std::pow(2.0 * u, 1.0 / (eta + 1.0))
                                 : std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (eta + 1.0));
    double a = 0.5 * ((1.0 + beta) * p1[i] + (1.0 - beta) * p2[i]);
    double b = 0.5 * ((1.0 - beta) * p1[i] + (1.0 + beta) * p2[i]);
    if (rng.uniform() < 0.5) std::swap(a, b);
    c1[i] = std::clamp(a, lower[i], upper[i]);
    c2[i] = std::clamp(b, lower[i], upper[i]);
  }
  return {c1, c2};
}

/// Bounded polynomial mutation. The perturbation shrinks toward a bound as the
/// coordinate approaches it, so a coordinate sitting on a bound only moves inward.
template <std::size_t N>
std::array<double, N> polynomial_mutation(std::array<double, N> x,
                                          const std::array<double, N>& lower,
                                          const std::array<double, N>& upper, double eta,
                                          double p_mutation, Rng& rng) {
  const double power = 1.0 / (eta + 1.0);
  for (std::size_t i = 0; i < N; ++i) {
    if (!(rng.uniform() < p_mutation)) continue;
    const double lo = lower[i], hi = upper[i], span = hi - lo;
    if (!(span > 0.0)) continue;
    const double y = x[i];
    const double d1 = (y - lo) / span, d2 = (hi - y) / span;
    const double r = rng.uniform();
    double dq;
    if (r < 0.5) {
      const double val = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
      dq = std::pow(val, power) - 1.0;
    } else {
      const double val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
      dq = 1.0 - std::pow(val, power);
    }
    x[i] = std::clamp(y + dq * span, lo, hi);
  }
  return x;
}

/// Hypervolume dominated by `points` and bounded by `ref` (minimization). Points
/// that do not strictly dominate `ref` in every objective are ignored.
template <std::size_t M>
double hypervolume(std::vector<std::array<double, M>> points, const std::array<double, M>& ref) {
  std::erase_if(points, [&](const auto& p) {
    for (std::size_t i = 0; i < M; ++i)
      if (!(p[i] < ref[i])) return true;
    return false;
  });
  if (points.empty()) return 0.0;
  if constexpr (M == 1) {
    double best = points[0][0];
    for (const auto& p : points) best = std::min(best, p[0]);
    return ref[0] - best;
  } else {
    // Sweep slabs along the last objective; each slab contributes the (M-1)-volume
    // of every point at or below it.
    std::sort(points.begin(), points.end(),
              [](const auto& a, const auto& b) { return a[M - 1] < b[M - 1]; });
    std::array<double, M - 1> sub_ref{};
    std::copy_n(ref.begin(), M - 1, sub_ref.begin());
    std::vector<std::array<double, M - 1>> active;
    double volume = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::array<double, M - 1> head{};
      std::copy_n(points[i].begin(), M - 1, head.begin());
      active.push_back(head);
      const double top = i + 1 < points.size() ? points[i + 1][M - 1] : ref[M - 1];
      const double depth = top - points[i][M - 1];
      if (depth > 0.0) volume += depth * hypervolume<M - 1>(active, sub_ref);
    }
    return volume;
  }
}

struct RunConfig {
  std::size_t pop_size = 300;
  std::size_t generations = 5000;
  double p_crossover = 0.9;
  double p_mutation = 1.0 / 9.0;
  double eta_sbx = 20.0;
  double eta_pm = 20.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (pop_size < 4 || pop_size % 2 != 0)
      throw ConfigError("population size must be even and at least 4");
    if (!(p_crossover >= 0.0 && p_crossover <= 1.0))
      throw ConfigError("crossover probability must lie in [0, 1]");
    if (!(p_mutation >= 0.0 && p_mutation <= 1.0))
      throw ConfigError("mutation probability must lie in [0, 1]");
    if (!(eta_sbx >= 0.0) || !(eta_pm >= 0.0))
      throw ConfigError("distribution indices must be non-negative");
  }
};

template <Problem P>
struct Individual {
  typename P::Vector x{};
  typename P::Evaluation eval{};
  std::size_t rank = 0;
  double crowding = 0.0;
};

struct GenerationStats {
  std::size_t generation = 0;
  double feasible_fraction = 0.0;
  /// Feasible members of the first front.
  std::size_t front_size = 0;
  std::vector<double> best;    // per objective, over feasible members; NaN if none
  std::vector<double> median;  // per objective, over feasible members; NaN if none
  std::optional<double> hypervolume;
};

template <Problem P>
struct ParetoArchive {
  RunConfig config;
  std::size_t generations = 0;
  std::vector<GenerationStats> stats;
  /// Feasible first-front members of the final population.
  std::vector<Individual<P>> front;
};

/// Everything needed to continue a run bit-exactly. Evaluations are recomputed on
/// restore, since evaluation is a pure function of the design.
template <Problem P>
struct Snapshot {
  std::size_t generation = 0;
  std::string rng_state;
  std::vector<typename P::Vector> x;
  std::vector<std::size_t> rank;
  std::vector<double> crowding;
  std::vector<GenerationStats> stats;
};

struct EngineOptions {
  std::size_t threads = 1;
  /// Reference point for the per-generation hypervolume statistic.
  std::optional<std::vector<double>> hv_reference;
};

template <Problem P>
class Nsga2 {
 public:
  using Vector = typename P::Vector;
  using Eval = typename P::Evaluation;
  using Member = Individual<P>;
  using Observer = std::function<void(const Nsga2&)>;

  Nsga2(const P& problem, RunConfig config, EngineOptions options = {})
      : problem_(problem), config_(config), options_(std::move(options)), rng_(config.seed) {
    config_.validate();
    for (std::size_t i = 0; i < P::kVars; ++i) {
      lower_[i] = problem_.lower(i);
      upper_[i] = problem_.upper(i);
    }
    if (options_.hv_reference && options_.hv_reference->size() != P::kObjectives)
      throw ConfigError("hypervolume reference has the wrong dimension");
  }

  const RunConfig& config() const { return config_; }
  std::size_t generation() const { return generation_; }
  bool initialized() const { return !population_.empty(); }
  bool done() const { return initialized() && generation_ >= config_.generations; }
  const std::vector<Member>& population() const { return population_; }
  const std::vector<GenerationStats>& stats() const { return stats_; }
  const Rng& rng() const { return rng_; }

  /// Raises the generation budget, e.g. when continuing a resumed run.
  void set_generations(std::size_t generations) { config_.generations = generations; }

  void initialize() {
    std::vector<Vector> xs(config_.pop_size);
    for (auto& x : xs)
      for (std::size_t i = 0; i < P::kVars; ++i) x[i] = rng_.uniform(lower_[i], upper_[i]);
    auto evals = evaluate_all(xs);
    std::vector<Member> pop(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) pop[i] = {xs[i], std::move(evals[i]), 0, 0.0};
    population_ = select(std::move(pop));
    generation_ = 0;
    stats_.assign(1, compute_stats());
  }

  void step() {
    if (!initialized()) throw ConfigError("step() called before initialize()");
    std::vector<Vector> kids;
    kids.reserve(config_.pop_size);
    while (kids.size() < config_.pop_size) {
      const Vector& a = population_[tournament()].x;
      const Vector& b = population_[tournament()].x;
      auto [c1, c2] =
          sbx_crossover(a, b, lower_, upper_, config_.eta_sbx, config_.p_crossover, rng_);
      kids.push_back(
          polynomial_mutation(c1, lower_, upper_, config_.eta_pm, config_.p_mutation, rng_));
      kids.push_back(
          polynomial_mutation(c2, lower_, upper_, config_.eta_pm, config_.p_mutation, rng_));
    }
    auto evals = evaluate_all(kids);

    std::vector<Member> merged = population_;
    merged.reserve(2 * config_.pop_size);
    for (std::size_t i = 0; i < kids.size(); ++i)
      merged.push_back({kids[i], std::move(evals[i]), 0, 0.0});
    population_ = select(std::move(merged));
    ++generation_;
    stats_.push_back(compute_stats());
  }

  void run(const Observer& observer = {}) {
    if (!initialized()) {
      initialize();
      if (observer) observer(*this);
    }
    while (generation_ < config_.generations) {
      step();
      if (observer) observer(*this);
    }
  }

  ParetoArchive<P> archive() const {
    ParetoArchive<P> a{config_, generation_, stats_, {}};
    for (const auto& m : population_)
      if (m.rank == 0 && m.eval.feasible()) a.front.push_back(m);
    return a;
  }

  Snapshot<P> snapshot() const {
    Snapshot<P> s{generation_, rng_.state(), {}, {}, {}, stats_};
    for (const auto& m : population_) {
      s.x.push_back(m.x);
      s.rank.push_back(m.rank);
      s.crowding.push_back(m.crowding);
    }
    return s;
  }

  void restore(const Snapshot<P>& s) {
    if (s.x.size() != config_.pop_size || s.rank.size() != s.x.size() ||
        s.crowding.size() != s.x.size())
      throw ConfigError("snapshot population does not match the run configuration");
    rng_.restore(s.rng_state);
    auto evals = evaluate_all(s.x);
    population_.clear();
    for (std::size_t i = 0; i < s.x.size(); ++i)
      population_.push_back({s.x[i], std::move(evals[i]), s.rank[i], s.crowding[i]});
    generation_ = s.generation;
    stats_ = s.stats;
  }

 private:
  std::vector<Eval> evaluate_all(const std::vector<Vector>& xs) const {
    std::vector<Eval> out(xs.size());
    parallel_for(xs.size(), options_.threads,
                 [&](std::size_t i) { out[i] = problem_.evaluate(xs[i]); });
    return out;
  }

  std::size_t tournament() {
    const std::size_t a = rng_.index(population_.size());
    const std::size_t b = rng_.index(population_.size());
    switch (cdp_compare(population_[a].eval, population_[b].eval)) {
      case Ordering::a_better:
        return a;
      case Ordering::b_better:
        return b;
      case Ordering::incomparable:
        break;
    }
    if (population_[a].crowding > population_[b].crowding) return a;
    if (population_[b].crowding > population_[a].crowding) return b;
    return rng_.uniform() < 0.5 ? a : b;
  }

  /// Keeps the best pop_size members front by front; the split front is
  /// truncated by descending crowding distance.
  std::vector<Member> select(std::vector<Member> merged) const {
    std::vector<Eval> evals;
    evals.reserve(merged.size());
    for (const auto& m : merged) evals.push_back(m.eval);
    const auto fronts = fast_nondominated_sort(std::span<const Eval>(evals));

    std::vector<Member> next;
    next.reserve(config_.pop_size);
    for (std::size_t r = 0; r < fronts.size() && next.size() < config_.pop_size; ++r) {
      const auto& front = fronts[r];
      const auto dist = crowding_distance(std::span<const Eval>(evals), std::span(front));
      std::vector<std::size_t> order(front.size());
      std::iota(order.begin(), order.end(), 0);
      if (next.size() + front.size() > config_.pop_size) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
        order.resize(config_.pop_size - next.size());
      }
      for (std::size_t k : order) {
        Member m = merged[front[k]];
        m.rank = r;
        m.crowding = dist[k];
        next.push_back(std::move(m));
      }
    }
    return next;
  }

  GenerationStats compute_stats() const {
    GenerationStats s;
    s.generation = generation_;
    std::vector<std::array<double, P::kObjectives>> feasible, front;
    for (const auto& m : population_) {
      if (!m.eval.feasible()) continue;
      std::array<double, P::kObjectives> f{};
      for (std::size_t i = 0; i < P::kObjectives; ++i) f[i] = m.eval.f[i];
      feasible.push_back(f);
      if (m.rank == 0) front.push_back(f);
    }
    s.feasible_fraction =
        static_cast<double>(feasible.size()) / static_cast<double>(population_.size());
    s.front_size = front.size();
    for (std::size_t i = 0; i < P::kObjectives; ++i) {
      std::vector<double> v;
      for (const auto& f : feasible) v.push_back(f[i]);
      if (v.empty()) {
        s.best.push_back(std::numeric_limits<double>::quiet_NaN());
        s.median.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      s.best.push_back(*std::min_element(v.begin(), v.end()));
      const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
      std::nth_element(v.begin(), mid, v.end());
      s.median.push_back(*mid);
    }
    if (options_.hv_reference) {
      std::array<double, P::kObjectives> ref{};
      std::copy_n(options_.hv_reference->begin(), P::kObjectives, ref.begin());
      s.hypervolume = hypervolume<P::kObjectives>(front, ref);
    }
    return s;
  }

  P problem_;
  RunConfig config_;
  EngineOptions options_;
  Rng rng_;
  std::array<double, P::kVars> lower_{};
  std::array<double, P::kVars> upper_{};
  std::vector<Member> population_;
  std::size_t generation_ = 0;
  std::vector<GenerationStats> stats_;
};

template <Problem P>
ParetoArchive<P> run(const RunConfig& config, const P& problem, EngineOptions options = {},
                     const typename Nsga2<P>::Observer& observer = {}) {
  Nsga2<P> engine(problem, config, std::move(options));
  engine.run(observer);
  return engine.archive();
}

}  // namespace teachopt::moea
