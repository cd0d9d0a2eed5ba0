#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <type_traits>

#include "core.hpp"

namespace shotnoise {

template <class T>
struct QuadResult {
  T value{};
  double error = 0.0;
};

namespace detail {

template <class T>
double magnitude(const T& x) {
  return std::abs(x);
}

}  // namespace detail

/// Adaptive 15-point Gauss-Kronrod on [a,b] (infinite limits allowed).
template <class F>
auto integrate_adaptive(F&& f, double a, double b, double tol = 1e-12, unsigned max_depth = 18) {
  using T = std::decay_t<decltype(f(0.0))>;
  QuadResult<T> r;
  double l1 = 0.0;
  r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, tol, &r.error, &l1);
  return r;
}

// Fixed composite rule: n equal panels, each with the 15-point Kronrod rule and
// its embedded 7-point Gauss rule. The error estimate is the sum of |K - G| over
// panels, which is conservative for smooth integrands.
template <class F>
auto integrate_panels(F&& f, double a, double b, std::size_t panels) {
  using T = std::decay_t<decltype(f(0.0))>;
  using K = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  static const auto& xk = K::abscissa();
  static const auto& wk = K::weights();
  static const auto& wg = G::weights();
  QuadResult<T> r;
  if (panels == 0 || a == b) return r;
  const double h = (b - a) / static_cast<double>(panels);
  T total{};
  double err = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    const double c = lo + 0.5 * h;
    const double half = 0.5 * h;
    const T f0 = f(c);
    T kr = f0 * wk[0];
    T gr = f0 * wg[0];
    for (std::size_t j = 1; j < xk.size(); ++j) {
      const double dx = half * xk[j];
      const T s = f(c - dx) + f(c + dx);
      kr += s * wk[j];
      if (j % 2 == 0) gr += s * wg[j / 2];
    }
    total += kr * half;
    err += detail::magnitude(T((kr - gr) * half));
  }
  r.value = total;
  r.error = err + 64.0 * std::numeric_limits<double>::epsilon() * detail::magnitude(total);
  return r;
}

/// Composite rule with doubling of the panel count until the estimate is below tol.
template <class F>
auto integrate_panels_to(F&& f, double a, double b, std::size_t panels, double tol, std::size_t max_panels = 1u << 16) {
  auto r = integrate_panels(f, a, b, panels);
  while (r.error > tol && panels < max_panels) {
    panels *= 2;
    r = integrate_panels(f, a, b, panels);
  }
  return r;
}

}  // namespace shotnoise
