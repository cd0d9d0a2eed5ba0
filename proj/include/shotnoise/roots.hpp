#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "core.hpp"

namespace shotnoise {

/// Bisection on a bracket [lo, hi] with f(lo), f(hi) of opposite sign (or zero).
template <class F>
double bisect(F&& f, double lo, double hi, double flo, double tol) {
  if (flo == 0.0) return lo;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Zeros of f on [a,b]: sign-change scan at `resolution` subintervals, each
// bracket bisected to tol. Nodes where |f| < touch_tol without a sign change
// are reported as touching zeros, one per maximal run.
template <class F>
std::vector<double> find_zeros(F&& f, double a, double b, std::size_t resolution = 4096, double tol = 1e-12,
                               double touch_tol = 1e-12) {
  std::vector<double> zeros;
  if (a == b) {
    if (std::abs(f(a)) < touch_tol) zeros.push_back(a);
    return zeros;
  }
  const auto t = uniform_grid({a, b}, (b - a) / static_cast<double>(resolution));
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = f(t[i]);
  auto small = [&](std::size_t i) { return std::abs(v[i]) < touch_tol; };
  bool in_touch = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (small(i)) {
      if (!in_touch) zeros.push_back(t[i]);
      in_touch = true;
    } else {
      in_touch = false;
    }
    if (i + 1 < t.size() && !small(i) && !small(i + 1) && (v[i] < 0.0) != (v[i + 1] < 0.0))
      zeros.push_back(bisect(f, t[i], t[i + 1], v[i], tol));
  }
  return zeros;
}

}  // namespace shotnoise
