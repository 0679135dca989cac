#pragma once

// Design-rule mining on a Pareto set: straight-line and two-segment least-squares
// fits between objectives and design variables.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "teachopt/errors.hpp"
#include "teachopt/model.hpp"

namespace teachopt::innovization {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double sse = 0.0;
  std::size_t n = 0;

  double operator()(double x) const { return slope * x + intercept; }
};

/// Ordinary least squares. R^2 = 1 - SSE/SST; when y is constant, R^2 is 1 if the
/// fit is exact and 0 otherwise.
inline LineFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DegenerateData("x and y have different lengths");
  const std::size_t n = xs.size();
  if (n < 2) throw DegenerateData("a line fit needs at least two points");
  const double nd = static_cast<double>(n);
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / nd;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / nd;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw DegenerateData("a line fit needs at least two distinct x values");
  LineFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - fit(xs[i]);
    fit.sse += r * r;
  }
  if (syy > 0.0) {
    fit.r2 = std::clamp(1.0 - fit.sse / syy, 0.0, 1.0);
  } else {
    fit.r2 = fit.sse == 0.0 ? 1.0 : 0.0;
  }
  return fit;
}

inline constexpr std::size_t kMinSegment = 10;

/// Relative SSE reduction a two-segment fit must achieve to count as a kink.
inline constexpr double kKinkGain = 0.01;

/// Minimum F statistic of the two extra parameters. With the breakpoint chosen by
/// search, straight lines plus Gaussian noise stay below about 12 in 999 of 1000
/// draws for 20 to 1000 points.
inline constexpr double kKinkF = 20.0;

struct SegmentedFit {
  std::string x_name;
  std::string y_name;
  double breakpoint = 0.0;
  LineFit left;   // x < breakpoint
  LineFit right;  // x > breakpoint
  double single_sse = 0.0;
  double segmented_sse = 0.0;
  double rms = 0.0;  // residual RMS of the two-segment fit
  /// (single_sse - segmented_sse) / single_sse, or 0 when the single line is exact.
  double gain = 0.0;
  /// ((single_sse - segmented_sse) / 2) / (segmented_sse / (n - 4)); infinite for an exact fit.
  double f_stat = 0.0;
  bool kink = false;
};

/// Best two-segment fit. Candidate breakpoints are midpoints between consecutive
/// distinct sorted x values leaving at least `min_segment` points on each side.
inline SegmentedFit segmented_fit(std::span<const double> xs, std::span<const double> ys,
                                  std::size_t min_segment = kMinSegment) {
  if (xs.size() != ys.size()) throw DegenerateData("x and y have different lengths");
  min_segment = std::max<std::size_t>(min_segment, 2);
  const std::size_t n = xs.size();
  if (n < 2 * min_segment)
    throw DegenerateData("a segmented fit needs at least " + std::to_string(2 * min_segment) +
                         " points");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] < xs[b] || (xs[a] == xs[b] && ys[a] < ys[b]);
  });
  std::vector<double> sx(n), sy(n);
  for (std::size_t i = 0; i < n; ++i) {
    sx[i] = xs[order[i]];
    sy[i] = ys[order[i]];
  }

  SegmentedFit best;
  best.single_sse = linear_fit(sx, sy).sse;
  bool found = false;
  const std::span<const double> all_x(sx), all_y(sy);
  for (std::size_t k = min_segment; k + min_segment <= n; ++k) {
    if (!(sx[k - 1] < sx[k])) continue;
    LineFit left, right;
    try {
      left = linear_fit(all_x.first(k), all_y.first(k));
      right = linear_fit(all_x.subspan(k), all_y.subspan(k));
    } catch (const DegenerateData&) {
      continue;
    }
    const double sse = left.sse + right.sse;
    if (!found || sse < best.segmented_sse) {
      found = true;
      best.breakpoint = 0.5 * (sx[k - 1] + sx[k]);
      best.left = left;
      best.right = right;
      best.segmented_sse = sse;
    }
  }
  if (!found) throw DegenerateData("no admissible breakpoint");

  best.rms = std::sqrt(best.segmented_sse / static_cast<double>(n));
  double sst = 0.0;
  const double my = std::accumulate(sy.begin(), sy.end(), 0.0) / static_cast<double>(n);
  for (double y : sy) sst += (y - my) * (y - my);
  if (best.single_sse > 1e-12 * sst && best.single_sse > 0.0)
    best.gain = (best.single_sse - best.segmented_sse) / best.single_sse;
  if (best.gain > 0.0) {
    const double dof = static_cast<double>(n) - 4.0;
    best.f_stat = best.segmented_sse > 0.0 && dof > 0.0
                      ? 0.5 * (best.single_sse - best.segmented_sse) / (best.segmented_sse / dof)
                      : std::numeric_limits<double>::infinity();
  }
  best.kink = best.gain >= kKinkGain && best.f_stat >= kKinkF;
  return best;
}

inline double detect_breakpoint(std::span<const double> xs, std::span<const double> ys,
                                std::size_t min_segment = kMinSegment) {
  return segmented_fit(xs, ys, min_segment).breakpoint;
}

// Report over a Pareto front.

struct FrontPoint {
  DesignVector x;
  std::array<double, 3> f{};
};

struct Summary {
  std::string name;
  std::size_t n = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  /// Set for bounded design variables: stddev below 1% of the bound span.
  std::optional<bool> pinned;
};

/// Points on one side of the cluster split, keyed by total mass.
struct ClusterEnvelope {
  std::string cluster;  // "R": f1 below the split, "S": at or above
  std::size_t n = 0;
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  std::optional<LineFit> fit;
};

enum class RuleKind { Segmented, Linear, Range };

inline std::string to_string(RuleKind k) {
  switch (k) {
    case RuleKind::Segmented:
      return "segmented";
    case RuleKind::Linear:
      return "linear";
    case RuleKind::Range:
      return "range";
  }
  return "?";
}

struct PairRule {
  std::string x_name;
  std::string y_name;
  RuleKind kind = RuleKind::Linear;
  std::optional<LineFit> line;
  std::optional<SegmentedFit> segmented;
  Summary y_summary;
  std::vector<ClusterEnvelope> clusters;
};

struct RuleReport {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t front_size = 0;
  /// Total mass separating cluster R from cluster S, from the f1-f2 segmented fit.
  std::optional<double> cluster_split;
  std::vector<PairRule> pairs;
  std::vector<Summary> constancy;

  const PairRule* find(std::string_view x, std::string_view y) const {
    for (const auto& p : pairs)
      if (p.x_name == x && p.y_name == y) return &p;
    return nullptr;
  }
};

inline constexpr std::size_t kMinFront = 10;

/// Value of a named column: f1..f3, a design variable, or the product kHb.
inline double column(const FrontPoint& p, std::string_view name) {
  if (name == "f1") return p.f[0];
  if (name == "f2") return p.f[1];
  if (name == "f3") return p.f[2];
  if (name == "kHb") return p.x.k * p.x.Hb;
  const auto a = p.x.to_array();
  for (std::size_t i = 0; i < kNumVars; ++i)
    if (kVariableNames[i] == name) return a[i];
  throw ConfigError("unknown column " + std::string(name));
}

inline Summary summarize(std::string name, std::span<const double> v) {
  Summary s;
  s.name = std::move(name);
  s.n = v.size();
  if (v.empty()) return s;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  return s;
}

namespace detail {

inline std::optional<LineFit> try_line(std::span<const double> xs, std::span<const double> ys) {
  try {
    return linear_fit(xs, ys);
  } catch (const DegenerateData&) {
    return std::nullopt;
  }
}

inline PairRule make_rule(std::span<const FrontPoint> front, std::string x, std::string y,
                          RuleKind kind, std::optional<double> split) {
  PairRule rule;
  rule.x_name = std::move(x);
  rule.y_name = std::move(y);
  rule.kind = kind;
  std::vector<double> xs, ys;
  for (const auto& p : front) {
    xs.push_back(column(p, rule.x_name));
    ys.push_back(column(p, rule.y_name));
  }
  rule.line = try_line(xs, ys);
  rule.y_summary = summarize(rule.y_name, ys);
  if (kind == RuleKind::Segmented) {
    try {
      auto seg = segmented_fit(xs, ys);
      seg.x_name = rule.x_name;
      seg.y_name = rule.y_name;
      rule.segmented = std::move(seg);
    } catch (const DegenerateData&) {
    }
  }
  if (split) {
    for (const char* name : {"R", "S"}) {
      const bool below = std::string_view(name) == "R";
      std::vector<double> cx, cy;
      for (const auto& p : front) {
        if ((p.f[0] < *split) == below) {
          cx.push_back(column(p, rule.x_name));
          cy.push_back(column(p, rule.y_name));
        }
      }
      ClusterEnvelope env;
      env.cluster = name;
      env.n = cx.size();
      if (!cx.empty()) {
        env.x_min = *std::min_element(cx.begin(), cx.end());
        env.x_max = *std::max_element(cx.begin(), cx.end());
        env.y_min = *std::min_element(cy.begin(), cy.end());
        env.y_max = *std::max_element(cy.begin(), cy.end());
        env.fit = try_line(cx, cy);
      }
      rule.clusters.push_back(std::move(env));
    }
  }
  return rule;
}

}  // namespace detail

/// The studied relationships: total mass against the two force objectives and
/// counterweight B; operating force against the Joint 2 and 3 disk torques; total
/// mass against the balancer product k*Hb; the Joint 1 torque range against f3; and
/// constancy of counterweight A.
inline RuleReport build_report(std::span<const FrontPoint> front, const Bounds& bounds,
                               std::string run_id = {}, std::uint64_t seed = 0) {
  if (front.size() < kMinFront)
    throw InsufficientFront("innovization needs at least " + std::to_string(kMinFront) +
                            " front members, got " + std::to_string(front.size()));
  RuleReport report;
  report.run_id = std::move(run_id);
  report.seed = seed;
  report.front_size = front.size();

  {
    std::vector<double> f1, f2;
    for (const auto& p : front) {
      f1.push_back(p.f[0]);
      f2.push_back(p.f[1]);
    }
    try {
      const auto seg = segmented_fit(f1, f2);
      if (seg.kink) report.cluster_split = seg.breakpoint;
    } catch (const DegenerateData&) {
    }
  }

  using enum RuleKind;
  const std::array<std::tuple<const char*, const char*, RuleKind>, 8> studied = {{
      {"f1", "f2", Segmented},
      {"f1", "f3", Segmented},
      {"f1", "mB", Segmented},
      {"f1", "LB", Segmented},
      {"f2", "T3", Linear},
      {"f2", "T2", Linear},
      {"f1", "kHb", Linear},
      {"f3", "T1", Range},
  }};
  for (const auto& [x, y, kind] : studied)
    report.pairs.push_back(detail::make_rule(front, x, y, kind, report.cluster_split));

  for (const char* name : {"mA", "LA"}) {
    std::vector<double> v;
    for (const auto& p : front) v.push_back(column(p, name));
    Summary s = summarize(name, v);
    for (std::size_t i = 0; i < kNumVars; ++i)
      if (kVariableNames[i] == name) s.pinned = s.stddev < 0.01 * bounds.span(i);
    report.constancy.push_back(std::move(s));
  }
  return report;
}

}  // namespace teachopt::innovization
