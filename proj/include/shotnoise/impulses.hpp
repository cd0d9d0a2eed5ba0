#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <string>

#include "core.hpp"
#include "rng.hpp"

namespace shotnoise {

using cplx = std::complex<double>;

namespace detail {

/// exp(a) - 1 for complex a without cancellation in the real part.
inline cplx cexpm1(cplx a) {
  const double x = a.real();
  const double y = a.imag();
  const double s = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

/// exp(a) - 1 - a for complex a.
inline cplx cexpm1_minus(cplx a) {
  if (std::abs(a) < 0.5) {
    cplx term = a * a / 2.0;
    cplx sum = term;
    for (int k = 3; k < 30; ++k) {
      term *= a / static_cast<double>(k);
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return cexpm1(a) - a;
}

}  // namespace detail

enum class ImpulseKind { one, two_point, uniform, normal };

// Law of the marks beta_i. Parameters: two_point takes values (a, b) with
// P(beta = a) = p; uniform takes [a, b]; normal takes mean a, sd b.
struct ImpulseSpec {
  ImpulseKind kind = ImpulseKind::one;
  double a = 1.0;
  double b = 1.0;
  double p = 1.0;

  static ImpulseSpec one() { return {}; }
  static ImpulseSpec two_point(double v1, double v2, double p1) {
    detail::require(p1 >= 0.0 && p1 <= 1.0, "two-point probability must lie in [0,1]");
    return {ImpulseKind::two_point, v1, v2, p1};
  }
  static ImpulseSpec uniform(double lo, double hi) {
    detail::require(lo < hi, "uniform impulse interval must satisfy lo < hi");
    return {ImpulseKind::uniform, lo, hi, 1.0};
  }
  static ImpulseSpec normal(double mean, double sd) {
    detail::require(sd > 0.0, "normal impulse sd must be positive");
    return {ImpulseKind::normal, mean, sd, 1.0};
  }

  [[nodiscard]] std::string id() const {
    switch (kind) {
      case ImpulseKind::one: return "one";
      case ImpulseKind::two_point:
        return "two-point:a=" + std::to_string(a) + ",b=" + std::to_string(b) + ",p=" + std::to_string(p);
      case ImpulseKind::uniform: return "uniform:lo=" + std::to_string(a) + ",hi=" + std::to_string(b);
      case ImpulseKind::normal: return "normal:mean=" + std::to_string(a) + ",sd=" + std::to_string(b);
    }
    return "?";
  }

  double sample(RngStream& rng) const {
    switch (kind) {
      case ImpulseKind::one: return 1.0;
      case ImpulseKind::two_point: return rng.uniform() < p ? a : b;
      case ImpulseKind::uniform: return rng.uniform(a, b);
      case ImpulseKind::normal: {
        std::normal_distribution<double> nd(a, b);
        return nd(rng);
      }
    }
    return 1.0;
  }

  [[nodiscard]] double mean() const {
    switch (kind) {
      case ImpulseKind::one: return 1.0;
      case ImpulseKind::two_point: return p * a + (1.0 - p) * b;
      case ImpulseKind::uniform: return 0.5 * (a + b);
      case ImpulseKind::normal: return a;
    }
    return 1.0;
  }

  [[nodiscard]] double second_moment() const {
    switch (kind) {
      case ImpulseKind::one: return 1.0;
      case ImpulseKind::two_point: return p * a * a + (1.0 - p) * b * b;
      case ImpulseKind::uniform: return (a * a + a * b + b * b) / 3.0;
      case ImpulseKind::normal: return a * a + b * b;
    }
    return 1.0;
  }

  [[nodiscard]] double mean_abs() const {
    switch (kind) {
      case ImpulseKind::one: return 1.0;
      case ImpulseKind::two_point: return p * std::abs(a) + (1.0 - p) * std::abs(b);
      case ImpulseKind::uniform:
        if (a >= 0.0 || b <= 0.0) return std::abs(0.5 * (a + b));
        return (a * a + b * b) / (2.0 * (b - a));
      case ImpulseKind::normal: {
        const double z = a / b;
        return b * std::sqrt(2.0 / kPi) * std::exp(-0.5 * z * z) + a * std::erf(z / std::sqrt(2.0));
      }
    }
    return 1.0;
  }

  /// E[exp(i beta w)] - 1, or E[exp(i beta w) - 1 - i beta w] when centered.
  [[nodiscard]] cplx exponent(double w, bool centered = false) const {
    auto e = [centered](double x) {
      const cplx a{0.0, x};
      return centered ? detail::cexpm1_minus(a) : detail::cexpm1(a);
    };
    switch (kind) {
      case ImpulseKind::one: return e(w);
      case ImpulseKind::two_point: return p * e(a * w) + (1.0 - p) * e(b * w);
      case ImpulseKind::uniform: return over_uniform([&](double z) { return e(z * w); }, w);
      case ImpulseKind::normal: {
        const cplx arg{-0.5 * b * b * w * w, a * w};
        return centered ? detail::cexpm1_minus(arg) + cplx{-0.5 * b * b * w * w, 0.0} : detail::cexpm1(arg);
      }
    }
    return {};
  }

  /// E[beta^2 exp(i beta w)].
  [[nodiscard]] cplx second_moment_phase(double w) const {
    auto e = [](double x) { return cplx{std::cos(x), std::sin(x)}; };
    switch (kind) {
      case ImpulseKind::one: return e(w);
      case ImpulseKind::two_point: return p * a * a * e(a * w) + (1.0 - p) * b * b * e(b * w);
      case ImpulseKind::uniform: return over_uniform([&](double z) { return z * z * e(z * w); }, w);
      case ImpulseKind::normal: {
        const cplx phi = std::exp(cplx{-0.5 * b * b * w * w, a * w});
        const cplx d = cplx{-b * b * w, a};
        return (b * b - d * d) * phi;
      }
    }
    return {};
  }

  /// E[exp(i beta w) (exp(i beta dw) - 1)], accurate for small dw.
  [[nodiscard]] cplx increment(double w, double dw) const {
    auto e = [](double x) { return cplx{std::cos(x), std::sin(x)}; };
    auto d = [](double x) { return detail::cexpm1(cplx{0.0, x}); };
    switch (kind) {
      case ImpulseKind::one: return e(w) * d(dw);
      case ImpulseKind::two_point: return p * e(a * w) * d(a * dw) + (1.0 - p) * e(b * w) * d(b * dw);
      case ImpulseKind::uniform:
        return over_uniform([&](double z) { return e(z * w) * d(z * dw); }, std::abs(w) + std::abs(dw));
      case ImpulseKind::normal: {
        // phi(w + dw) - phi(w) = phi(w) (exp(i a dw - b^2 (2 w dw + dw^2) / 2) - 1)
        const cplx phi = std::exp(cplx{-0.5 * b * b * w * w, a * w});
        return phi * detail::cexpm1(cplx{-0.5 * b * b * dw * (2.0 * w + dw), a * dw});
      }
    }
    return {};
  }

  /// Practical bound on |beta| (mean + 8 sd for the normal law).
  [[nodiscard]] double max_abs() const {
    switch (kind) {
      case ImpulseKind::one: return 1.0;
      case ImpulseKind::two_point: return std::max(std::abs(a), std::abs(b));
      case ImpulseKind::uniform: return std::max(std::abs(a), std::abs(b));
      case ImpulseKind::normal: return std::abs(a) + 8.0 * b;
    }
    return 1.0;
  }

  /// E[exp(i beta w)].
  [[nodiscard]] cplx charfn(double w) const { return 1.0 + exponent(w); }

 private:
  template <class F>
  cplx over_uniform(F&& f, double w) const {
    using G = boost::math::quadrature::gauss<double, 20>;
    const double span = b - a;
    const int panels = 1 + static_cast<int>(std::abs(w) * span / 2.0);
    const double h = span / panels;
    cplx sum{};
    for (int k = 0; k < panels; ++k) {
      const double lo = a + h * k;
      sum += G::integrate([&](double z) { return f(z); }, lo, lo + h);
    }
    return sum / span;
  }
};

/// Parses "one", "two-point:a=..,b=..,p=..", "uniform:lo=..,hi=..", "normal:mean=..,sd=..".
inline ImpulseSpec impulses_from_string(const std::string& text) {
  const auto s = parse_spec_string(text);
  if (s.name == "one" || s.name == "deterministic-one") return ImpulseSpec::one();
  if (s.name == "two-point") return ImpulseSpec::two_point(s.get("a", 1.0), s.get("b", -1.0), s.get("p", 0.5));
  if (s.name == "uniform") return ImpulseSpec::uniform(s.get("lo", 0.0), s.get("hi", 1.0));
  if (s.name == "normal") return ImpulseSpec::normal(s.get("mean", 0.0), s.get("sd", 1.0));
  throw ParameterError("unknown impulse law '" + text + "'");
}

}  // namespace shotnoise
