#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "core.hpp"
#include "impulses.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "stats.hpp"

namespace shotnoise {

struct SpectralOptions {
  double rel_tol = 1e-10;     // s-integrals, relative to their natural magnitude
  double v_rel_tol = 1e-7;    // v-integral, relative to sd(X')
  std::size_t max_panels = 1u << 15;
  unsigned threads = 0;
  int tail_probes = 24;  // probes of |C^| on (U, 4U] for the truncation estimate
};

// Joint characteristic function of (X(t), X'(t)) for the stationary process,
//   psi(u, v) = exp(lambda int E[exp(i beta (u g + v g')) - 1] ds),
// or of the normalized process Z = (X - EX) / sqrt(lambda) when normalized is set
// (arguments scaled by 1/sqrt(lambda), exponent centered). The s-integrals use a
// composite 15-point Kronrod rule on [-R, R]; node tables are cached per panel count.
class CharacteristicEngine {
 public:
  CharacteristicEngine(double lambda, KernelModel kernel, ImpulseSpec impulses, bool normalized = false,
                       SpectralOptions opt = {})
      : lambda_(lambda), kernel_(std::move(kernel)), law_(impulses), normalized_(normalized), opt_(opt) {
    detail::require(lambda > 0.0, "characteristic function needs lambda > 0");
    if (!kernel_.has_tail()) throw CapabilityError("kernel '" + kernel_.id() + "' has no tail descriptor");
    kernel_.check_order(2);
    c_ = normalized ? 1.0 / std::sqrt(lambda) : 1.0;
    const double w = lambda_ * c_ * law_.mean_abs();
    R_ = std::max(truncation_radius(kernel_, 0, w, 1e-15), truncation_radius(kernel_, 1, w, 1e-15));
    R_ = std::max(R_, kernel_.scale());
    tail0_ = w * kernel_.tail(0, R_);
    tail1_ = w * kernel_.tail(1, R_);
    const auto& base = table(64);
    for (std::size_t i = 0; i < base.s.size(); ++i) {
      gmax1_ = std::max(gmax1_, std::abs(base.dg[i]));
      std::array<double, kMaxOrder + 1> j{};
      kernel_.jet(base.s[i], 2, j.data());
      gmax2_ = std::max(gmax2_, std::abs(j[2]));
    }
    const auto m = moments(kernel_);
    m0_ = m.m0();
    m2_ = m.m2();
  }

  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] bool normalized() const { return normalized_; }
  [[nodiscard]] const KernelModel& kernel() const { return kernel_; }
  [[nodiscard]] const ImpulseSpec& impulses() const { return law_; }
  [[nodiscard]] double radius() const { return R_; }
  /// Mean of X (0 for the normalized process).
  [[nodiscard]] double mean() const { return normalized_ ? 0.0 : lambda_ * law_.mean() * kernel_.integral(0); }
  /// Var X(t) and Var X'(t) (Campbell).
  [[nodiscard]] double variance() const { return lambda_ * c_ * c_ * law_.second_moment() * m0_; }
  [[nodiscard]] double derivative_variance() const { return lambda_ * c_ * c_ * law_.second_moment() * m2_; }

  /// log psi(u, v) with an error estimate.
  [[nodiscard]] QuadResult<cplx> log_psi(double u, double v) const {
    const double cu = c_ * u, cv = c_ * v;
    return integrate(u, v, [&](double g, double dg) { return law_.exponent(cu * g + cv * dg, normalized_); },
                     std::abs(u) * tail0_ + std::abs(v) * tail1_);
  }

  [[nodiscard]] cplx psi(double u, double v) const { return std::exp(log_psi(u, v).value); }

  /// log psi(u, v) - log psi(u, 0), computed without cancellation.
  [[nodiscard]] QuadResult<cplx> log_ratio(double u, double v) const {
    const double cu = c_ * u, cv = c_ * v;
    return integrate(u, v, [&](double g, double dg) { return law_.increment(cu * g, cv * dg); },
                     std::abs(v) * tail1_);
  }

  /// d^2/dv^2 log psi(u, v) at v = 0 (the first derivative vanishes there).
  [[nodiscard]] cplx log_psi_vv(double u) const {
    const double cu = c_ * u;
    auto r = integrate(u, 0.0, [&](double g, double dg) { return -c_ * c_ * dg * dg * law_.second_moment_phase(cu * g); },
                       0.0);
    return r.value;
  }

 private:
  struct Table {
    std::vector<double> s, g, dg, wk, wg;
  };

  const Table& table(std::size_t panels) const {
    std::lock_guard lock(mu_);
    auto it = tables_.find(panels);
    if (it != tables_.end()) return *it->second;
    using K = boost::math::quadrature::gauss_kronrod<double, 15>;
    using G = boost::math::quadrature::gauss<double, 7>;
    const auto& xk = K::abscissa();
    const auto& wk = K::weights();
    const auto& wg = G::weights();
    auto t = std::make_unique<Table>();
    const double h = 2.0 * R_ / static_cast<double>(panels);
    std::array<double, kMaxOrder + 1> j{};
    auto push = [&](double s, double w1, double w2) {
      kernel_.jet(s, 1, j.data());
      t->s.push_back(s);
      t->g.push_back(j[0]);
      t->dg.push_back(j[1]);
      t->wk.push_back(w1);
      t->wg.push_back(w2);
    };
    for (std::size_t p = 0; p < panels; ++p) {
      const double c = -R_ + h * (static_cast<double>(p) + 0.5);
      const double half = 0.5 * h;
      push(c, wk[0] * half, wg[0] * half);
      for (std::size_t k = 1; k < xk.size(); ++k) {
        const double wgk = k % 2 == 0 ? wg[k / 2] * half : 0.0;
        push(c - half * xk[k], wk[k] * half, wgk);
        push(c + half * xk[k], wk[k] * half, wgk);
      }
    }
    auto& ref = *t;
    tables_.emplace(panels, std::move(t));
    return ref;
  }

  // lambda * int f(g(s), g'(s)) ds, doubling the panel count until the summed
  // per-panel |Kronrod - Gauss| is below rel_tol times the integrand's natural size.
  template <class F>
  QuadResult<cplx> integrate(double u, double v, F&& f, double tail) const {
    const double rate = c_ * law_.max_abs() * (std::abs(u) * gmax1_ + std::abs(v) * gmax2_);
    std::size_t panels = 64;
    while (panels < opt_.max_panels && static_cast<double>(panels) < rate * 2.0 * R_ / 2.0) panels *= 2;
    const double scale =
        lambda_ * c_ * law_.mean_abs() * (std::abs(u) * kernel_.l1_norm(0) + std::abs(v) * kernel_.l1_norm(1)) +
        lambda_ * c_ * c_ * law_.second_moment() * m2_ + 1e-300;
    QuadResult<cplx> r;
    for (;;) {
      const auto& t = table(panels);
      cplx total{};
      double err = 0.0;
      const std::size_t per = 15;
      for (std::size_t p = 0; p < panels; ++p) {
        cplx k{}, g{};
        for (std::size_t i = p * per; i < (p + 1) * per; ++i) {
          const cplx y = f(t.g[i], t.dg[i]);
          k += t.wk[i] * y;
          g += t.wg[i] * y;
        }
        total += k;
        err += std::abs(k - g);
      }
      r.value = lambda_ * total;
      r.error = lambda_ * err + tail;
      if (r.error <= opt_.rel_tol * scale || panels >= opt_.max_panels) break;
      panels *= 2;
    }
    if (r.error > 1e3 * opt_.rel_tol * scale)
      throw AccuracyError("characteristic exponent did not reach tolerance at u=" + std::to_string(u) +
                              ", v=" + std::to_string(v),
                          r.error);
    return r;
  }

  double lambda_;
  KernelModel kernel_;
  ImpulseSpec law_;
  bool normalized_;
  SpectralOptions opt_;
  double c_ = 1.0;
  double R_ = 0.0;
  double tail0_ = 0.0, tail1_ = 0.0;
  double gmax1_ = 0.0, gmax2_ = 0.0;
  double m0_ = 0.0, m2_ = 0.0;
  mutable std::mutex mu_;
  mutable std::map<std::size_t, std::unique_ptr<Table>> tables_;
};

/// psi(u, v) for a single point, with the quadrature error of the exponent.
inline QuadResult<cplx> charfn_joint(double lambda, const KernelModel& kernel, const ImpulseSpec& impulses, double u,
                                     double v, bool normalized = false, const SpectralOptions& opt = {}) {
  CharacteristicEngine e(lambda, kernel, impulses, normalized, opt);
  const auto l = e.log_psi(u, v);
  const cplx p = std::exp(l.value);
  return {p, std::abs(p) * l.error};
}

struct FourierValue {
  cplx value;
  double error = 0.0;     // quadrature error plus the observed-decay tail estimate
  double v_max = 0.0;     // truncation point V of the v-integral
  double envelope = 0.0;  // (L/pi) 2/V: tail bound from |psi| <= 1 alone
};

// C^(u,[0,L]) = -(L/pi) int_0^inf (psi(u,v) + psi(u,-v) - 2 psi(u,0)) / v^2 dv.
// The integrand is psi(u,0) (expm1(D+) + expm1(D-)) / v^2 with D+- = log psi(u,+-v)
// - log psi(u,0); below v = 1e-4 / sd(X') it is replaced by its limit
// psi(u,0) d^2/dv^2 log psi. The v-range is covered by doubling segments until
// the observed tail estimate 2 max|psi(u,+-V)| / V is below tolerance; the
// -2 psi(u,0)/v^2 part beyond V is integrated exactly.
inline FourierValue crossing_fourier(const CharacteristicEngine& e, double u, double L,
                                     const SpectralOptions& opt = {}) {
  const auto l0 = e.log_psi(u, 0.0);
  const cplx psi0 = std::exp(l0.value);
  const double sdv = std::sqrt(e.derivative_variance());
  const double vs = 1.0 / sdv;
  const double v_small = 1e-4 * vs;
  const cplx limit = psi0 * e.log_psi_vv(u);
  double psi_at_end = 1.0;
  auto F = [&](double v) -> cplx {
    if (v < v_small) return limit;
    const auto dp = e.log_ratio(u, v);
    const auto dm = e.log_ratio(u, -v);
    return psi0 * (detail::cexpm1(dp.value) + detail::cexpm1(dm.value)) / (v * v);
  };
  const double seg_tol = opt.v_rel_tol * sdv;
  cplx total{};
  double err = 0.0;
  double lo = 0.0, hi = 0.25 * vs;
  const double v_cap = 1e6 * vs;
  for (;;) {
    auto r = integrate_panels_to(F, lo, hi, 4, seg_tol, 1u << 12);
    total += r.value;
    err += r.error;
    const double pp = std::abs(std::exp(l0.value + e.log_ratio(u, hi).value));
    const double pm = std::abs(std::exp(l0.value + e.log_ratio(u, -hi).value));
    psi_at_end = std::max(pp, pm);
    if ((2.0 * psi_at_end / hi <= seg_tol && hi >= 4.0 * vs) || hi >= v_cap) break;
    lo = hi;
    hi *= 2.0;
  }
  const double V = hi;
  total -= 2.0 * psi0 / V;
  FourierValue out;
  out.value = -(L / kPi) * total;
  // v-quadrature, the exponent error at v = 0, and the observed-decay estimate of the omitted psi(u,+-v) tail
  out.error = (L / kPi) * (err + 2.0 * psi_at_end / V) + std::abs(out.value) * l0.error;
  out.v_max = V;
  out.envelope = (L / kPi) * 2.0 / V;
  return out;
}

inline FourierValue crossing_fourier(double lambda, const KernelModel& kernel, const ImpulseSpec& impulses, double u,
                                     double L, bool normalized = false, const SpectralOptions& opt = {}) {
  CharacteristicEngine e(lambda, kernel, impulses, normalized, opt);
  return crossing_fourier(e, u, L, opt);
}

/// Values of C^(u) (or psi) on a symmetric, uniform u-grid.
struct SpectralCurve {
  std::vector<double> u;
  std::vector<cplx> values;
  std::vector<double> error;
  double lambda = 0.0;
  std::string kernel_id;
  double length = 1.0;
  double mean = 0.0;      // mean of the process the curve describes
  double variance = 0.0;  // its variance (sets the natural widths)
  double truncation = 0.0;  // estimated inversion error from tapering and cutting at U
  bool normalized = false;

  [[nodiscard]] std::size_t size() const { return u.size(); }
  [[nodiscard]] double step() const { return u.size() > 1 ? u[1] - u[0] : 0.0; }
};

// C^ on u_j = -U + 2U j/n, j = 0..n. Only u >= 0 is computed; negative
// frequencies are filled by Hermitian symmetry. Defaults: U = 8/sd(X), n = 256.
// |C^| is decidedly not Gaussian at small lambda (secondary bumps, slow tails),
// so it is probed on (U, 4U] and the mass the inversion drops is estimated as
// (1/pi) [int (1 - taper)|C^| over the taper + int_U^4U |C^| + 4U |C^(4U)|].
inline SpectralCurve crossing_fourier_curve(const CharacteristicEngine& e, double L, double U = 0.0,
                                            std::size_t n = 256, const SpectralOptions& opt = {}) {
  detail::require(n >= 2 && n % 2 == 0, "u-grid needs an even number of intervals");
  SpectralCurve c;
  c.lambda = e.lambda();
  c.kernel_id = e.kernel().id();
  c.length = L;
  c.mean = e.mean();
  c.variance = e.variance();
  c.normalized = e.normalized();
  if (U <= 0.0) U = 8.0 / std::sqrt(c.variance);
  c.u.resize(n + 1);
  for (std::size_t j = 0; j <= n; ++j) c.u[j] = -U + 2.0 * U * static_cast<double>(j) / static_cast<double>(n);
  c.u[n / 2] = 0.0;
  const std::size_t half = n / 2;
  auto pos = parallel_map(half + 1, opt.threads, [&](std::size_t k) { return crossing_fourier(e, c.u[half + k], L, opt); });
  c.values.resize(n + 1);
  c.error.resize(n + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    c.values[half + k] = pos[k].value;
    c.error[half + k] = pos[k].error;
    c.values[half - k] = std::conj(pos[k].value);
    c.error[half - k] = pos[k].error;
  }
  c.values[half] = {c.values[half].real(), 0.0};

  const double du = 2.0 * U / static_cast<double>(n);
  double mass = 0.0;
  for (std::size_t k = 0; k <= half; ++k) {
    const double x = c.u[half + k] / U;
    if (x <= 0.9) continue;
    const double drop = 0.5 * (1.0 - std::cos(kPi * (x - 0.9) / 0.1));
    mass += (k == half ? 0.5 : 1.0) * du * drop * std::abs(c.values[half + k]);
  }
  if (opt.tail_probes > 0) {
    const int np = opt.tail_probes;
    std::vector<double> up(np + 1);
    for (int k = 0; k <= np; ++k) up[k] = U * (1.0 + 3.0 * k / np);
    auto probe =
        parallel_map(np, opt.threads, [&](std::size_t k) { return crossing_fourier(e, up[k + 1], L, opt); });
    double prev = std::abs(c.values.back());
    for (int k = 1; k <= np; ++k) {
      const double cur = std::abs(probe[k - 1].value) + probe[k - 1].error;
      mass += 0.5 * (up[k] - up[k - 1]) * (prev + cur);
      prev = cur;
    }
    mass += up[np] * prev;
  }
  c.truncation = mass / kPi;
  return c;
}

struct InvertedCurve {
  std::vector<double> alpha;
  std::vector<double> value;
  std::vector<double> imag_residual;
  std::vector<double> error;  // propagated quadrature error plus the curve's truncation estimate
  double dc = 0.0;            // C^(0)
};

// C(alpha) = (1/2 pi) int e^{-i u alpha} C^(u) du by the trapezoid rule on the
// curve's grid with a cosine taper over the outer 10% of [-U, U]. Throws
// ResolutionError when the alias period 2 pi / du is shorter than 12 sd or does
// not cover the requested levels.
inline InvertedCurve invert_crossing_curve(const SpectralCurve& curve, const std::vector<double>& alpha) {
  const std::size_t n = curve.size();
  detail::require(n >= 3, "inversion needs at least 3 grid points");
  const double du = curve.step();
  const double U = curve.u.back();
  const double period = 2.0 * kPi / du;
  const double sd = std::sqrt(curve.variance);
  if (period < 12.0 * sd)
    throw ResolutionError("u-grid step " + std::to_string(du) + " aliases at period " + std::to_string(period) +
                          " < 12 sd = " + std::to_string(12.0 * sd));
  for (double a : alpha)
    if (std::abs(a - curve.mean) > 0.5 * period - 6.0 * sd)
      throw ResolutionError("level " + std::to_string(a) + " lies outside the alias-free range of the u-grid");
  auto taper = [&](double u) {
    const double x = std::abs(u) / U;
    if (x <= 0.9) return 1.0;
    return 0.5 * (1.0 + std::cos(kPi * (x - 0.9) / 0.1));
  };
  InvertedCurve out;
  out.alpha = alpha;
  out.dc = curve.values[n / 2].real();
  for (double a : alpha) {
    cplx s{};
    double e = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = (j == 0 || j + 1 == n ? 0.5 : 1.0) * du * taper(curve.u[j]);
      s += w * std::exp(cplx{0.0, -curve.u[j] * a}) * curve.values[j];
      e += w * curve.error[j];
    }
    out.value.push_back(s.real() / (2.0 * kPi));
    out.imag_residual.push_back(s.imag() / (2.0 * kPi));
    out.error.push_back(e / (2.0 * kPi) + curve.truncation);
  }
  return out;
}

/// Spectral moments of the Gaussian limit.
struct GaussianLimit {
  double m0 = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;

  static GaussianLimit of(const KernelModel& kernel) {
    const auto m = moments(kernel);
    return {m.m0(), m.m2(), m.m4()};
  }
};

/// L (1/pi) sqrt(m2/m0) exp(-alpha^2 / 2 m0).
inline double rice_gaussian(const GaussianLimit& g, double alpha, double L = 1.0) {
  detail::require(g.m0 > 0.0 && g.m2 > 0.0, "Rice formula needs m0, m2 > 0");
  return L / kPi * std::sqrt(g.m2 / g.m0) * std::exp(-alpha * alpha / (2.0 * g.m0));
}

/// Mean number of extrema per unit length, (1/pi) sqrt(m4/m2).
inline double rice_extrema_rate(const GaussianLimit& g) {
  detail::require(g.m2 > 0.0 && g.m4 > 0.0, "extrema rate needs m2, m4 > 0");
  return std::sqrt(g.m4 / g.m2) / kPi;
}

/// L sqrt(2 m2 / pi) exp(-m0 u^2 / 2).
inline double gaussian_fourier(const GaussianLimit& g, double u, double L = 1.0) {
  return L * std::sqrt(2.0 * g.m2 / kPi) * std::exp(-0.5 * g.m0 * u * u);
}

struct ConvergenceConstants {
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double m0 = 0.0, m2 = 0.0, m30 = 0.0, m03 = 0.0, m12 = 0.0, m22 = 0.0;

  /// (a2 + a3 |u|) / sqrt(lambda).
  [[nodiscard]] double bound(double lambda, double u) const { return (a2 + a3 * std::abs(u)) / std::sqrt(lambda); }
  /// |u| < a1 sqrt(lambda).
  [[nodiscard]] bool valid(double lambda, double u) const { return std::abs(u) < a1 * std::sqrt(lambda); }
};

inline ConvergenceConstants convergence_constants(const KernelModel& kernel) {
  const auto m = standard_moments(kernel);
  ConvergenceConstants c;
  c.m0 = m.m0();
  c.m2 = m.m2();
  c.m30 = m.at(3, 0);
  c.m03 = m.at(0, 3);
  c.m12 = m.at(1, 2);
  c.m22 = m.at(2, 2);
  c.a1 = std::min({std::sqrt(c.m2 / (2.0 * c.m22)), c.m2 / (2.0 * c.m12), 3.0 * c.m0 / (2.0 * c.m30)});
  c.a2 = (24.0 * c.m30 + 2.0 * c.m03) / (3.0 * c.m2);
  c.a3 = c.m12 * std::sqrt(kPi / c.m2) + 2.0 * std::sqrt(2.0 * kPi * c.m2) * c.m30 * std::exp(-1.0) / (3.0 * c.m0);
  return c;
}

struct BoundRow {
  double u = 0.0;
  double lhs = 0.0;    // |C^_Z(u) - sqrt(2 m2/pi) e^{-m0 u^2/2}| + quadrature error
  double rhs = 0.0;    // (a2 + a3|u|)/sqrt(lambda)
  double tight = 0.0;  // rhs / pi
  bool pass = false;
};

/// Checks the high-intensity rate bound for the normalized process on [0,1] at each u in the validity range.
inline std::vector<BoundRow> convergence_bound_check(double lambda, const KernelModel& kernel,
                                                     const std::vector<double>& u_grid,
                                                     const SpectralOptions& opt = {}) {
  const auto k = convergence_constants(kernel);
  const GaussianLimit lim{k.m0, k.m2, 0.0};
  CharacteristicEngine e(lambda, kernel, ImpulseSpec::one(), true, opt);
  std::vector<double> us;
  for (double u : u_grid)
    if (k.valid(lambda, u)) us.push_back(u);
  auto vals = parallel_map(us.size(), opt.threads, [&](std::size_t i) { return crossing_fourier(e, us[i], 1.0, opt); });
  std::vector<BoundRow> rows;
  for (std::size_t i = 0; i < us.size(); ++i) {
    BoundRow r;
    r.u = us[i];
    r.lhs = std::abs(vals[i].value - gaussian_fourier(lim, us[i])) + vals[i].error;
    r.rhs = k.bound(lambda, us[i]);
    r.tight = r.rhs / kPi;
    r.pass = r.lhs <= r.rhs;
    rows.push_back(r);
  }
  return rows;
}

struct TotalVariationCheck {
  double lhs = 0.0;  // |E|X'|/sqrt(lambda) - sqrt(2 m2/pi)|
  double rhs = 0.0;  // 14 m3 / (3 pi m2 sqrt(lambda))
  double slack = 0.0;
  double limit = 0.0;
  bool pass = false;
};

/// Mean absolute derivative against its Gaussian limit; mc is the per-unit-length estimate of E|X'(t)|.
inline TotalVariationCheck total_variation_bound_check(double lambda, const KernelModel& kernel, const Estimate& mc) {
  detail::require(lambda > 0.0, "lambda must be positive");
  const auto m = moments(kernel, {{0, 3}});
  TotalVariationCheck c;
  const double s = std::sqrt(lambda);
  c.limit = std::sqrt(2.0 * m.m2() / kPi);
  c.lhs = std::abs(mc.value / s - c.limit);
  c.rhs = 14.0 * m.at(0, 3) / (3.0 * kPi * m.m2() * s);
  c.slack = 3.0 * mc.se / s;
  c.pass = c.lhs <= c.rhs + c.slack;
  return c;
}

struct PhaseRow {
  double u = 0.0, v = 0.0, r = 0.0;
  double magnitude = 0.0;
  double error = 0.0;
  double bound = 0.0;
  bool applicable = false;
  bool pass = true;
};

namespace detail {

template <class Phase>
QuadResult<cplx> oscillatory_integral(Phase&& phase, double max_rate, const Interval& iv, double h_base) {
  const double len = iv.length();
  double h = h_base;
  if (max_rate > 0.0) h = std::min(h, kPi / max_rate);
  auto panels = static_cast<std::size_t>(std::ceil(len / h));
  panels = std::max<std::size_t>(panels, 1);
  auto f = [&](double s) { return std::exp(cplx{0.0, phase(s)}); };
  return integrate_panels_to(f, iv.lo, iv.hi, panels, 1e-12, panels * 64);
}

}  // namespace detail

// |int_a^b exp(i u g(s)) ds| (1d) or |int exp(i (u g + v g')) ds| (2d) against the
// stationary-phase bounds 8 sqrt2 (2 n0 + 1)/sqrt(m|u|) and 8 sqrt2 (2 n0 + 3)/sqrt(m r).
// Points with r <= 1/m are marked not applicable.
inline std::vector<PhaseRow> stationary_phase_certify(const KernelModel& kernel, const Interval& iv,
                                                      const std::vector<std::pair<double, double>>& uv,
                                                      PhaseMode mode) {
  const auto p = phase_params(kernel, iv, mode);
  const auto grid = uniform_grid(iv, iv.length() / 4096.0);
  double d1 = 0.0, d2 = 0.0;
  for (double s : grid) {
    d1 = std::max(d1, std::abs(kernel(1, s)));
    d2 = std::max(d2, std::abs(kernel(2, s)));
  }
  std::vector<PhaseRow> rows;
  for (const auto& [u, v] : uv) {
    PhaseRow row;
    row.u = u;
    row.v = mode == PhaseMode::level_1d ? 0.0 : v;
    row.r = std::hypot(row.u, row.v);
    row.applicable = row.r > 1.0 / p.m;
    row.bound = mode == PhaseMode::level_1d ? 8.0 * std::sqrt(2.0) * (2 * p.n0 + 1) / std::sqrt(p.m * row.r)
                                            : 8.0 * std::sqrt(2.0) * (2 * p.n0 + 3) / std::sqrt(p.m * row.r);
    const double rate = std::abs(row.u) * d1 + std::abs(row.v) * d2;
    auto q = detail::oscillatory_integral(
        [&](double s) { return row.u * kernel(0, s) + row.v * kernel(1, s); }, rate, iv, kernel.scale() / 8.0);
    row.magnitude = std::abs(q.value);
    row.error = q.error;
    row.pass = !row.applicable || row.magnitude + row.error <= row.bound;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace shotnoise
