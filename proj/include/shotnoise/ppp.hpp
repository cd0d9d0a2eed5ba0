#pragma once

#include <boost/math/distributions/poisson.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "core.hpp"
#include "impulses.hpp"
#include "rng.hpp"

namespace shotnoise {

/// Marked Poisson configuration on a window. Points are sorted ascending.
struct PointConfiguration {
  Interval window;
  std::vector<double> points;
  std::vector<double> impulses;
  double intensity = 0.0;
  ImpulseSpec law;
  SeedInfo seed_info;
  std::uint64_t rejected_draws = 0;

  [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
  [[nodiscard]] bool empty() const noexcept { return points.empty(); }

  /// Number of points in [lo, hi].
  [[nodiscard]] std::size_t count_in(double lo, double hi) const {
    auto first = std::lower_bound(points.begin(), points.end(), lo);
    auto last = std::upper_bound(points.begin(), points.end(), hi);
    return last > first ? static_cast<std::size_t>(last - first) : 0;
  }

  /// Checks the sortedness / containment / length invariants.
  [[nodiscard]] bool valid() const {
    if (points.size() != impulses.size()) return false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!window.contains(points[i])) return false;
      if (i > 0 && points[i] < points[i - 1]) return false;
    }
    return true;
  }
};

namespace detail {

inline void check_ppp_args(double lambda, const Interval& window) {
  require(std::isfinite(lambda) && lambda >= 0.0, "intensity must be a finite non-negative number");
  require(std::isfinite(window.lo) && std::isfinite(window.hi), "window must be finite");
  require(window.lo <= window.hi, "window is inverted (w_lo > w_hi)");
}

inline std::uint64_t draw_count(double mean, RngStream& rng) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::uint64_t> pd(mean);
  return pd(rng);
}

inline PointConfiguration place_points(double lambda, const Interval& window, std::uint64_t n,
                                       const ImpulseSpec& impulses, RngStream& rng) {
  PointConfiguration c;
  c.window = window;
  c.intensity = lambda;
  c.law = impulses;
  c.seed_info = rng.seed_info();
  c.points.resize(n);
  for (auto& t : c.points) t = std::min(rng.uniform(window.lo, window.hi), window.hi);
  std::sort(c.points.begin(), c.points.end());
  c.impulses.resize(n);
  for (auto& b : c.impulses) b = impulses.sample(rng);
  return c;
}

}  // namespace detail

/// Homogeneous marked Poisson process of intensity lambda on the window.
inline PointConfiguration sample_ppp(double lambda, const Interval& window, const ImpulseSpec& impulses,
                                     RngStream& rng) {
  detail::check_ppp_args(lambda, window);
  const std::uint64_t n = detail::draw_count(lambda * window.length(), rng);
  return detail::place_points(lambda, window, n, impulses, rng);
}

/// P(Poisson(mean) >= k0).
inline double poisson_tail(double mean, std::uint64_t k0) {
  if (k0 == 0) return 1.0;
  if (mean <= 0.0) return 0.0;
  boost::math::poisson_distribution<double> pd(mean);
  return boost::math::cdf(boost::math::complement(pd, static_cast<double>(k0 - 1)));
}

inline constexpr double kMinAcceptance = 1e-9;

// Poisson configuration conditioned on at least k0 points, by rejection on the
// count. Positions and marks are drawn only for the accepted count, which has
// the same law as rejecting whole configurations.
inline PointConfiguration sample_conditional(double lambda, const Interval& window, std::uint64_t k0,
                                             const ImpulseSpec& impulses, RngStream& rng) {
  detail::check_ppp_args(lambda, window);
  const double mean = lambda * window.length();
  const double acc = poisson_tail(mean, k0);
  if (acc < kMinAcceptance)
    throw InfeasibleError("conditioning on count >= " + std::to_string(k0) + " has acceptance probability " +
                              std::to_string(acc) + " (below 1e-9)",
                          acc);
  std::uint64_t rejected = 0;
  std::uint64_t n = detail::draw_count(mean, rng);
  while (n < k0) {
    ++rejected;
    n = detail::draw_count(mean, rng);
  }
  auto c = detail::place_points(lambda, window, n, impulses, rng);
  c.rejected_draws = rejected;
  return c;
}

/// Superposition of two configurations on the same window.
inline PointConfiguration merge(const PointConfiguration& x, const PointConfiguration& y) {
  detail::require(x.window == y.window, "merge requires identical windows");
  PointConfiguration c;
  c.window = x.window;
  c.intensity = x.intensity + y.intensity;
  c.law = x.law;
  c.seed_info = x.seed_info;
  std::vector<std::size_t> idx(x.size() + y.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto at = [&](std::size_t i) { return i < x.size() ? x.points[i] : y.points[i - x.size()]; };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return at(i) < at(j); });
  c.points.reserve(idx.size());
  c.impulses.reserve(idx.size());
  for (std::size_t i : idx) {
    c.points.push_back(at(i));
    c.impulses.push_back(i < x.size() ? x.impulses[i] : y.impulses[i - x.size()]);
  }
  return c;
}

/// Union of a configuration on an inner window with one on an enclosing window restricted outside it.
inline PointConfiguration splice(const PointConfiguration& inner, const PointConfiguration& outer) {
  detail::require(outer.window.contains(inner.window), "splice: outer window must contain the inner one");
  PointConfiguration c;
  c.window = outer.window;
  c.intensity = outer.intensity;
  c.law = outer.law;
  c.seed_info = outer.seed_info;
  for (std::size_t i = 0; i < outer.size(); ++i) {
    const double t = outer.points[i];
    if (t < inner.window.lo) {
      c.points.push_back(t);
      c.impulses.push_back(outer.impulses[i]);
    }
  }
  c.points.insert(c.points.end(), inner.points.begin(), inner.points.end());
  c.impulses.insert(c.impulses.end(), inner.impulses.begin(), inner.impulses.end());
  for (std::size_t i = 0; i < outer.size(); ++i) {
    const double t = outer.points[i];
    if (t > inner.window.hi) {
      c.points.push_back(t);
      c.impulses.push_back(outer.impulses[i]);
    }
  }
  c.rejected_draws = inner.rejected_draws;
  return c;
}

}  // namespace shotnoise
