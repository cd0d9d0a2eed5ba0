#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "quadrature.hpp"
#include "roots.hpp"

namespace shotnoise {

inline constexpr int kMaxOrder = 4;

/// Probabilists' Hermite polynomial H_k(x), k = 0..4 (and beyond by recurrence).
inline double hermite(int k, double x) {
  if (k < 0) throw ParameterError("negative Hermite order");
  double h0 = 1.0;
  if (k == 0) return h0;
  double h1 = x;
  for (int n = 1; n < k; ++n) {
    const double h2 = x * h1 - n * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// Which small-ball lower bound applies to a kernel (0 = none).
struct SmallBallRegime {
  int case_id = 0;
  double alpha = 0.0;
};

// Polymorphic kernel implementation. Only KernelModel is part of the public
// surface; the built-ins below derive from this.
class KernelImpl {
 public:
  virtual ~KernelImpl() = default;

  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual int smoothness() const { return kMaxOrder; }
  /// Natural length unit (sigma for the Gaussian); sets default grid steps.
  [[nodiscard]] virtual double scale() const = 0;
  /// Fills out[0..max_order] with g^(k)(s) * exp(log_shift).
  virtual void jet(double s, int max_order, double* out, double log_shift = 0.0) const = 0;
  [[nodiscard]] virtual bool has_tail() const { return true; }
  /// Bound on the integral of |g^(k)| over |s| > T.
  [[nodiscard]] virtual double tail(int order, double T) const = 0;
  [[nodiscard]] virtual double integral(int order) const { return order == 0 ? 1.0 : 0.0; }
  /// Radius beyond which contributions fall below e^-36 (double rounding) of a point at distance d_min.
  [[nodiscard]] virtual double relative_radius(double /*d_min*/) const { return 0.0; }
  /// Exponent shift keeping the nearest contribution representable at distance d_min.
  [[nodiscard]] virtual double log_shift(double /*d_min*/) const { return 0.0; }
  /// Sign-change points of g^(k) (kinks of |g^(k)|), sorted.
  [[nodiscard]] virtual std::vector<double> zeros(int order) const = 0;
  [[nodiscard]] virtual SmallBallRegime small_ball() const { return {}; }
  [[nodiscard]] virtual bool is_gaussian() const { return false; }
};

namespace detail {

// 2 * integral_T^inf |g^(k)| from the positive zeros of g^(k) and values of g^(k-1).
inline double tail_from_zeros(const KernelImpl& k, int order, double T, const std::vector<double>& pos_zeros) {
  T = std::max(T, 0.0);
  std::array<double, kMaxOrder + 1> j{};
  auto prim = [&](double s) {
    k.jet(s, order - 1, j.data());
    return j[static_cast<std::size_t>(order - 1)];
  };
  double acc = 0.0;
  double lo = T;
  double plo = prim(lo);
  for (double z : pos_zeros) {
    if (z <= T) continue;
    const double pz = prim(z);
    acc += std::abs(pz - plo);
    lo = z;
    plo = pz;
  }
  acc += std::abs(plo);
  return 2.0 * acc;
}

}  // namespace detail

class GaussianKernelImpl final : public KernelImpl {
 public:
  explicit GaussianKernelImpl(double sigma) : sigma_(sigma) {
    detail::require(std::isfinite(sigma) && sigma > 0.0, "Gaussian sigma must be positive");
  }

  [[nodiscard]] std::string id() const override { return "gaussian:sigma=" + format(sigma_); }
  [[nodiscard]] double scale() const override { return sigma_; }
  [[nodiscard]] double sigma() const { return sigma_; }
  [[nodiscard]] bool is_gaussian() const override { return true; }

  void jet(double s, int max_order, double* out, double log_shift) const override {
    const double x = s / sigma_;
    const double e = std::exp(log_shift - 0.5 * x * x) / (sigma_ * kSqrt2Pi);
    out[0] = e;
    if (max_order < 1) return;
    const double inv = -1.0 / sigma_;
    double h0 = 1.0;
    double h1 = x;
    double f = e * inv;
    out[1] = f * h1;
    for (int k = 2; k <= max_order; ++k) {
      const double h2 = x * h1 - (k - 1) * h0;
      h0 = h1;
      h1 = h2;
      f *= inv;
      out[k] = f * h1;
    }
  }

  [[nodiscard]] double tail(int order, double T) const override {
    if (order == 0) return std::erfc(std::max(T, 0.0) / (sigma_ * std::sqrt(2.0)));
    std::vector<double> pos;
    for (double z : zeros(order))
      if (z > 0.0) pos.push_back(z);
    return detail::tail_from_zeros(*this, order, T, pos);
  }

  [[nodiscard]] double relative_radius(double d_min) const override {
    return std::sqrt(d_min * d_min + 72.0 * sigma_ * sigma_);
  }

  [[nodiscard]] double log_shift(double d_min) const override {
    const double x = d_min / sigma_;
    return x > 30.0 ? 0.5 * x * x : 0.0;
  }

  [[nodiscard]] std::vector<double> zeros(int order) const override {
    std::vector<double> r;
    switch (order) {
      case 1: r = {0.0}; break;
      case 2: r = {-1.0, 1.0}; break;
      case 3: r = {-std::sqrt(3.0), 0.0, std::sqrt(3.0)}; break;
      case 4: {
        const double a = std::sqrt(3.0 - std::sqrt(6.0));
        const double b = std::sqrt(3.0 + std::sqrt(6.0));
        r = {-b, -a, a, b};
        break;
      }
      default: break;
    }
    for (double& z : r) z *= sigma_;
    return r;
  }

  [[nodiscard]] SmallBallRegime small_ball() const override { return {1, 2.0}; }

  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

 private:
  double sigma_;
};

// g(t) = sech(t/s) / (pi s): unit mass, exponential tails, smooth.
class SechKernelImpl final : public KernelImpl {
 public:
  explicit SechKernelImpl(double s) : s_(s) {
    detail::require(std::isfinite(s) && s > 0.0, "sech width must be positive");
  }

  [[nodiscard]] std::string id() const override { return "sech:s=" + GaussianKernelImpl::format(s_); }
  [[nodiscard]] double scale() const override { return s_; }

  void jet(double t, int max_order, double* out, double log_shift) const override {
    const double x = t / s_;
    const double ax = std::abs(x);
    const double em = std::exp(-ax);
    const double S = 2.0 * em / (1.0 + em * em);
    const double Th = std::tanh(x);
    const double S2 = S * S;
    const double c = std::exp(log_shift) / (kPi * s_);
    const double d[5] = {S, -S * Th, S - 2.0 * S * S2, -S * Th * (1.0 - 6.0 * S2),
                         S - 20.0 * S * S2 + 24.0 * S * S2 * S2};
    double f = c;
    for (int k = 0; k <= max_order; ++k) {
      out[k] = f * d[k];
      f /= s_;
    }
  }

  [[nodiscard]] double tail(int order, double T) const override {
    if (order == 0) return 4.0 / kPi * std::atan(std::exp(-std::max(T, 0.0) / s_));
    std::vector<double> pos;
    for (double z : zeros(order))
      if (z > 0.0) pos.push_back(z);
    return detail::tail_from_zeros(*this, order, T, pos);
  }

  [[nodiscard]] double relative_radius(double d_min) const override { return d_min + 36.0 * s_; }

  [[nodiscard]] std::vector<double> zeros(int order) const override {
    auto at = [](double sech) { return std::acosh(1.0 / sech); };
    std::vector<double> r;
    switch (order) {
      case 1: r = {0.0}; break;
      case 2: {
        const double a = at(std::sqrt(0.5));
        r = {-a, a};
        break;
      }
      case 3: {
        const double a = at(std::sqrt(1.0 / 6.0));
        r = {-a, 0.0, a};
        break;
      }
      case 4: {
        const double q = std::sqrt(304.0);
        const double a = at(std::sqrt((20.0 + q) / 48.0));
        const double b = at(std::sqrt((20.0 - q) / 48.0));
        r = {-b, -a, a, b};
        break;
      }
      default: break;
    }
    for (double& z : r) z *= s_;
    return r;
  }

  [[nodiscard]] SmallBallRegime small_ball() const override {
    // g <= (2/(pi s)) e^{-|t|/s} <= e^{-|t|} eventually iff s <= 1
    return s_ <= 1.0 ? SmallBallRegime{2, 1.0} : SmallBallRegime{};
  }

 private:
  double s_;
};

/// Analytic evaluators for a user-supplied kernel.
struct CustomKernelSpec {
  std::string id = "custom";
  std::array<std::function<double(double)>, kMaxOrder + 1> derivatives;
  int smoothness = kMaxOrder;
  double scale = 1.0;
  /// Optional bound T -> integral over |s|>T of |g^(k)|.
  std::function<double(int, double)> tail;
  std::optional<double> integral;
  /// Interval scanned for zeros of the derivatives.
  double support = 20.0;
};

class CustomKernelImpl final : public KernelImpl {
 public:
  explicit CustomKernelImpl(CustomKernelSpec spec) : spec_(std::move(spec)) {
    detail::require(spec_.smoothness >= 2 && spec_.smoothness <= kMaxOrder, "custom kernel smoothness must be in [2,4]");
    for (int k = 0; k <= spec_.smoothness; ++k)
      detail::require(static_cast<bool>(spec_.derivatives[static_cast<std::size_t>(k)]),
                      "custom kernel is missing the order-" + std::to_string(k) + " evaluator");
    detail::require(spec_.scale > 0.0, "custom kernel scale must be positive");
  }

  [[nodiscard]] std::string id() const override { return spec_.id; }
  [[nodiscard]] int smoothness() const override { return spec_.smoothness; }
  [[nodiscard]] double scale() const override { return spec_.scale; }

  void jet(double s, int max_order, double* out, double log_shift) const override {
    const double f = log_shift == 0.0 ? 1.0 : std::exp(log_shift);
    for (int k = 0; k <= max_order; ++k) out[k] = f * spec_.derivatives[static_cast<std::size_t>(k)](s);
  }

  [[nodiscard]] bool has_tail() const override { return static_cast<bool>(spec_.tail); }

  [[nodiscard]] double tail(int order, double T) const override {
    if (!spec_.tail) throw CapabilityError("kernel '" + spec_.id + "' has no tail descriptor");
    return spec_.tail(order, T);
  }

  [[nodiscard]] double integral(int order) const override {
    if (order == 0 && spec_.integral) return *spec_.integral;
    if (order == 0) {
      auto r = integrate_adaptive(spec_.derivatives[0], -std::numeric_limits<double>::infinity(),
                                  std::numeric_limits<double>::infinity(), 1e-12);
      return r.value;
    }
    return 0.0;
  }

  [[nodiscard]] std::vector<double> zeros(int order) const override {
    if (order > spec_.smoothness) return {};
    return find_zeros(spec_.derivatives[static_cast<std::size_t>(order)], -spec_.support, spec_.support, 8192);
  }

 private:
  CustomKernelSpec spec_;
};

/// Immutable, cheaply copyable handle to a kernel g.
class KernelModel {
 public:
  KernelModel() = default;
  explicit KernelModel(std::shared_ptr<const KernelImpl> impl) : impl_(std::move(impl)) {}

  [[nodiscard]] const KernelImpl& impl() const {
    if (!impl_) throw ParameterError("empty kernel handle");
    return *impl_;
  }
  [[nodiscard]] std::string id() const { return impl().id(); }
  [[nodiscard]] int smoothness() const { return impl().smoothness(); }
  [[nodiscard]] double scale() const { return impl().scale(); }
  [[nodiscard]] bool is_gaussian() const { return impl().is_gaussian(); }
  [[nodiscard]] bool has_tail() const { return impl().has_tail(); }
  [[nodiscard]] double tail(int order, double T) const {
    check_order(order);
    return impl().tail(order, T);
  }
  [[nodiscard]] double l1_norm(int order) const { return tail(order, 0.0); }
  [[nodiscard]] double integral(int order = 0) const { return impl().integral(order); }
  [[nodiscard]] SmallBallRegime small_ball() const { return impl().small_ball(); }

  /// Gaussian width; throws for other kernels.
  [[nodiscard]] double sigma() const {
    if (!is_gaussian()) throw CapabilityError("kernel '" + id() + "' is not Gaussian");
    return scale();
  }

  void jet(double s, int max_order, double* out, double log_shift = 0.0) const {
    check_order(max_order);
    impl_->jet(s, max_order, out, log_shift);
  }

  [[nodiscard]] double operator()(int order, double s) const {
    std::array<double, kMaxOrder + 1> j{};
    jet(s, order, j.data());
    return j[static_cast<std::size_t>(order)];
  }

  void check_order(int order) const {
    if (order < 0 || order > impl().smoothness())
      throw CapabilityError("derivative order " + std::to_string(order) + " not available for kernel '" + id() +
                            "' (smoothness " + std::to_string(impl().smoothness()) + ")");
  }

 private:
  std::shared_ptr<const KernelImpl> impl_;
};

inline KernelModel gaussian_kernel(double sigma) {
  return KernelModel(std::make_shared<GaussianKernelImpl>(sigma));
}

inline KernelModel sech_kernel(double s) { return KernelModel(std::make_shared<SechKernelImpl>(s)); }

inline KernelModel custom_kernel(CustomKernelSpec spec) {
  return KernelModel(std::make_shared<CustomKernelImpl>(std::move(spec)));
}

/// "gaussian:sigma=<x>" (also "σ=<x>"), "sech:s=<x>".
inline KernelModel kernel_from_string(const std::string& text) {
  const auto s = parse_spec_string(text);
  auto pick = [&](std::initializer_list<const char*> keys, double fallback) {
    for (const char* k : keys)
      if (s.params.count(k)) return s.params.at(k);
    return fallback;
  };
  if (s.name == "gaussian") {
    for (const auto& [k, v] : s.params)
      if (k != "sigma" && k != "σ" && k != "s") throw ParameterError("unknown Gaussian parameter '" + k + "'");
    return gaussian_kernel(pick({"sigma", "σ", "s"}, 1.0));
  }
  if (s.name == "sech") return sech_kernel(pick({"s", "sigma", "σ"}, 1.0));
  throw ParameterError("unknown kernel '" + text + "'");
}

/// g^(order)(t).
inline double eval_derivative(const KernelModel& kernel, int order, double t) { return kernel(order, t); }

/// Smallest R (on a scale/20 grid) with tail(k, R) <= eps for every order k <= max_order.
inline double support_radius(const KernelModel& kernel, double eps, int max_order = 2) {
  const double step = kernel.scale() / 20.0;
  double R = 0.0;
  for (int k = 0; k <= std::min(max_order, kernel.smoothness()); ++k)
    while (kernel.tail(k, R) > eps) R += step;
  return R;
}

// Smallest T on the grid {0, h, 2h, ...}, h = scale/20, with
// lambda * E|beta| * tail(k, T) <= eps.
inline double truncation_radius(const KernelModel& kernel, int order, double lambda, double eps,
                                double mean_abs_beta = 1.0) {
  detail::require(eps > 0.0, "truncation tolerance must be positive");
  detail::require(lambda >= 0.0, "intensity must be non-negative");
  if (!kernel.has_tail()) throw CapabilityError("kernel '" + kernel.id() + "' has no tail descriptor");
  const double c = lambda * mean_abs_beta;
  if (eps >= c * kernel.l1_norm(order)) return 0.0;
  const double h = kernel.scale() / 20.0;
  // bracket by doubling, then walk the grid inside the last bracket
  std::size_t hi = 1;
  while (c * kernel.tail(order, h * static_cast<double>(hi)) > eps) {
    hi *= 2;
    if (hi > (1u << 30)) throw CapabilityError("tail of kernel '" + kernel.id() + "' does not decay");
  }
  std::size_t lo = hi / 2;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (c * kernel.tail(order, h * static_cast<double>(mid)) > eps)
      lo = mid;
    else
      hi = mid;
  }
  return h * static_cast<double>(hi);
}

struct MomentEntry {
  double value = 0.0;
  double error = 0.0;
};

/// m_kl = int |g|^k |g'|^l, plus m0 = int g^2, m2 = int g'^2, m4 = int g''^2.
struct MomentTable {
  std::map<std::pair<int, int>, MomentEntry> entries;
  MomentEntry m0_, m2_, m4_;

  [[nodiscard]] double m0() const { return m0_.value; }
  [[nodiscard]] double m2() const { return m2_.value; }
  [[nodiscard]] double m4() const { return m4_.value; }
  /// m_3 = m_03 = int |g'|^3.
  [[nodiscard]] double m3() const { return at(0, 3); }
  [[nodiscard]] double at(int k, int l) const {
    auto it = entries.find({k, l});
    if (it == entries.end())
      throw ParameterError("moment m_" + std::to_string(k) + std::to_string(l) + " was not computed");
    return it->second.value;
  }
  [[nodiscard]] double error(int k, int l) const { return entries.at({k, l}).error; }
  [[nodiscard]] bool has(int k, int l) const { return entries.count({k, l}) > 0; }
};

namespace detail {

// Integral over the real line of f, split at the kernel's derivative zeros so
// that |g^(k)| kinks sit on panel boundaries.
template <class F>
QuadResult<double> kernel_line_integral(const KernelModel& kernel, F&& f, double tol, int kink_orders = 2) {
  if (!kernel.has_tail()) {
    const double inf = std::numeric_limits<double>::infinity();
    auto r = integrate_adaptive(f, -inf, inf, tol);
    if (!std::isfinite(r.value) || !std::isfinite(r.error) || r.error > 1e-6 * std::max(1.0, std::abs(r.value)))
      throw IntegrabilityError("integral over the real line did not converge for kernel '" + kernel.id() + "'");
    return r;
  }
  const double R = support_radius(kernel, 1e-18, std::min(2, kernel.smoothness()));
  std::vector<double> cuts{-R, R};
  for (int k = 0; k <= std::min(kink_orders, kernel.smoothness()); ++k)
    for (double z : kernel.impl().zeros(k))
      if (z > -R && z < R) cuts.push_back(z);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  QuadResult<double> total;
  const double per = tol / static_cast<double>(cuts.size());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto r = integrate_adaptive(f, cuts[i], cuts[i + 1], per);
    total.value += r.value;
    total.error += r.error;
  }
  // the omitted tails are bounded by the same integrand envelope; negligible at 1e-18
  return total;
}

}  // namespace detail

// Moment functionals by adaptive Gauss-Kronrod. The reported error is the
// quadrature estimate; requests are rejected unless k + l >= 1.
inline MomentTable moments(const KernelModel& kernel, const std::vector<std::pair<int, int>>& pairs = {}) {
  MomentTable t;
  std::array<double, kMaxOrder + 1> j{};
  auto m = [&](int k, int l) {
    detail::require(k >= 0 && l >= 0 && k + l >= 1, "moment orders must satisfy k,l >= 0 and k+l >= 1");
    auto f = [&, k, l](double s) {
      std::array<double, kMaxOrder + 1> jj{};
      kernel.jet(s, 1, jj.data());
      return std::pow(std::abs(jj[0]), k) * std::pow(std::abs(jj[1]), l);
    };
    auto r = detail::kernel_line_integral(kernel, f, 1e-13);
    return MomentEntry{r.value, r.error};
  };
  for (const auto& [k, l] : pairs) t.entries[{k, l}] = m(k, l);
  if (!t.has(2, 0)) t.entries[{2, 0}] = m(2, 0);
  if (!t.has(0, 2)) t.entries[{0, 2}] = m(0, 2);
  t.m0_ = t.entries[{2, 0}];
  t.m2_ = t.entries[{0, 2}];
  if (kernel.smoothness() >= 2) {
    auto f = [&](double s) {
      kernel.jet(s, 2, j.data());
      return j[2] * j[2];
    };
    auto r = detail::kernel_line_integral(kernel, f, 1e-13);
    t.m4_ = {r.value, r.error};
  }
  return t;
}

/// The moments used by the convergence constants.
inline MomentTable standard_moments(const KernelModel& kernel) {
  return moments(kernel, {{2, 0}, {0, 2}, {3, 0}, {0, 3}, {1, 2}, {2, 2}});
}

/// S(tau) = int g(tau - s) g(-s) ds.
inline double covariance(const KernelModel& kernel, double tau) {
  auto f = [&](double s) { return kernel(0, s + tau) * kernel(0, s); };
  if (!kernel.has_tail()) return detail::kernel_line_integral(kernel, f, 1e-13).value;
  const double R = support_radius(kernel, 1e-18, 0);
  const double lo = std::max(-R, -R - tau);
  const double hi = std::min(R, R - tau);
  if (lo >= hi) return 0.0;
  const double c = std::clamp(-0.5 * tau, lo, hi);
  return integrate_adaptive(f, lo, c, 1e-14).value + integrate_adaptive(f, c, hi, 1e-14).value;
}

enum class PhaseMode { level_1d, joint_2d };

struct PhaseParams {
  double m = 0.0;
  int n0 = 0;
  double argmin = 0.0;
};

// Parameters of the stationary-phase bound on [a,b]:
//   1d: m = min sqrt(g'^2 + g''^2), n0 = #zeros of g''
//   2d: m = min smallest singular value of [[g',g''],[g'',g''']],
//       n0 = #zeros of g'' g'''' - g'''^2
inline PhaseParams phase_params(const KernelModel& kernel, const Interval& iv, PhaseMode mode) {
  detail::require(iv.lo <= iv.hi, "phase_params: inverted interval");
  const int need = mode == PhaseMode::level_1d ? 2 : 4;
  kernel.check_order(need);
  auto mval = [&](double s) {
    std::array<double, kMaxOrder + 1> j{};
    kernel.jet(s, need, j.data());
    if (mode == PhaseMode::level_1d) return std::hypot(j[1], j[2]);
    // symmetric 2x2: singular values are |eigenvalues|
    const double a = j[1], b = j[2], c = j[3];
    const double mean = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    return std::min(std::abs(mean - rad), std::abs(mean + rad));
  };
  auto zfun = [&](double s) {
    std::array<double, kMaxOrder + 1> j{};
    kernel.jet(s, need, j.data());
    return mode == PhaseMode::level_1d ? j[2] : j[2] * j[4] - j[3] * j[3];
  };
  PhaseParams p;
  constexpr std::size_t kRes = 4096;
  if (iv.length() == 0.0) {
    p.m = mval(iv.lo);
    p.argmin = iv.lo;
  } else {
    const auto grid = uniform_grid(iv, iv.length() / kRes);
    std::size_t best = 0;
    double bv = mval(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double v = mval(grid[i]);
      if (v < bv) {
        bv = v;
        best = i;
      }
    }
    // golden-section refinement around the best node
    double lo = grid[best > 0 ? best - 1 : 0];
    double hi = grid[std::min(best + 1, grid.size() - 1)];
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 80 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
      const double x1 = hi - gr * (hi - lo);
      const double x2 = lo + gr * (hi - lo);
      if (mval(x1) < mval(x2))
        hi = x2;
      else
        lo = x1;
    }
    const double xm = 0.5 * (lo + hi);
    const double vm = mval(xm);
    p.m = std::min(bv, vm);
    p.argmin = vm < bv ? xm : grid[best];
  }
  if (!(p.m >= 1e-12))
    throw DegeneracyError("phase parameter m = " + std::to_string(p.m) + " below 1e-12 on [" +
                          std::to_string(iv.lo) + ", " + std::to_string(iv.hi) + "]");
  p.n0 = static_cast<int>(find_zeros(zfun, iv.lo, iv.hi, kRes).size());
  return p;
}

}  // namespace shotnoise
