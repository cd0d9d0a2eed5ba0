#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "core.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "ppp.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace shotnoise {

inline constexpr double kDefaultCertificate = 1e-8;

/// Seeding and scheduling of a Monte Carlo ensemble.
struct McOptions {
  std::uint64_t master_seed = 2024;
  std::size_t replications = 1000;
  unsigned threads = 0;
  std::uint64_t first_replication = 0;

  [[nodiscard]] RngStream stream(std::size_t r) const { return RngStream({master_seed, first_replication + r}); }
};

// Exact evaluation of X^(k)(t) for a fixed configuration. Points farther than
// max(T, relative radius) are skipped; the relative radius keeps the sum
// accurate to double rounding relative to the nearest point, so signs stay
// right inside long empty gaps. Values come back multiplied by exp(shift)
// (shift > 0 only where the nearest point is so far that the kernel would
// underflow).
class PathEvaluator {
 public:
  PathEvaluator(std::shared_ptr<const PointConfiguration> config, KernelModel kernel, double radius)
      : config_(std::move(config)), kernel_(std::move(kernel)), radius_(radius) {}

  [[nodiscard]] const PointConfiguration& config() const { return *config_; }
  [[nodiscard]] const KernelModel& kernel() const { return kernel_; }
  [[nodiscard]] double radius() const { return radius_; }

  /// Fills out[0..order] (and optionally mag[k] = sum of |terms|); returns the log-scale shift applied.
  double eval(double t, int order, double* out, double* mag = nullptr) const {
    const auto& p = config_->points;
    const auto& b = config_->impulses;
    for (int k = 0; k <= order; ++k) out[k] = 0.0;
    if (mag)
      for (int k = 0; k <= order; ++k) mag[k] = 0.0;
    if (p.empty()) return 0.0;
    auto it = std::lower_bound(p.begin(), p.end(), t);
    double d_min = std::numeric_limits<double>::infinity();
    if (it != p.end()) d_min = *it - t;
    if (it != p.begin()) d_min = std::min(d_min, t - *(it - 1));
    const double R = std::max(radius_, kernel_.impl().relative_radius(d_min));
    const double shift = kernel_.impl().log_shift(d_min);
    const auto lo = static_cast<std::size_t>(std::lower_bound(p.begin(), p.end(), t - R) - p.begin());
    const auto hi = static_cast<std::size_t>(std::upper_bound(p.begin(), p.end(), t + R) - p.begin());
    const std::size_t n = hi - lo;
    if (n == 0) return 0.0;
    thread_local std::array<std::vector<double>, kMaxOrder + 1> buf;
    for (int k = 0; k <= order; ++k) buf[static_cast<std::size_t>(k)].resize(n);
    std::array<double, kMaxOrder + 1> j{};
    for (std::size_t i = 0; i < n; ++i) {
      kernel_.impl().jet(t - p[lo + i], order, j.data(), shift);
      const double beta = b[lo + i];
      for (int k = 0; k <= order; ++k) buf[static_cast<std::size_t>(k)][i] = beta * j[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k <= order; ++k) {
      auto& v = buf[static_cast<std::size_t>(k)];
      out[k] = detail::pairwise_sum(v);
      if (mag) {
        for (double& x : v) x = std::abs(x);
        mag[k] = detail::pairwise_sum(v);
      }
    }
    return shift;
  }

 private:
  std::shared_ptr<const PointConfiguration> config_;
  KernelModel kernel_;
  double radius_;
};

/// Grid evaluation of X, X', X'' (optionally X''') on [a,b].
struct SamplePath {
  Interval interval;
  double h = 0.0;
  std::vector<double> t;
  std::array<std::vector<double>, kMaxOrder + 1> d;    // d[k] = X^(k) on the grid
  std::array<std::vector<double>, kMaxOrder + 1> mag;  // sum of |terms| of X^(k), same scaling as d
  std::vector<double> log_scale;                      // empty unless some node is rescaled
  int max_order = 2;
  std::array<double, kMaxOrder + 1> certificate{};    // mean absolute omitted tail per order
  double radius = 0.0;
  double lambda = 0.0;
  SeedInfo seed;
  std::string kernel_id;
  bool normalized = false;
  // true value of order k = offset[k] + gain * exp(-shift) * evaluator value
  double gain = 1.0;
  std::array<double, kMaxOrder + 1> offset{};
  std::shared_ptr<const PathEvaluator> evaluator;

  [[nodiscard]] std::size_t size() const { return t.size(); }
  [[nodiscard]] const std::vector<double>& X() const { return d[0]; }
  [[nodiscard]] const std::vector<double>& dX() const { return d[1]; }
  [[nodiscard]] const std::vector<double>& d2X() const { return d[2]; }
  [[nodiscard]] const std::vector<double>& d3X() const { return d[3]; }
  [[nodiscard]] double shift(std::size_t i) const { return log_scale.empty() ? 0.0 : log_scale[i]; }
  /// Local magnitude of X^(k) at node i (unscaled); 1 where no term contributes.
  [[nodiscard]] double magnitude(int k, std::size_t i) const {
    const auto& m = mag[static_cast<std::size_t>(k)];
    if (m.empty()) return 1.0;
    const double s = shift(i);
    const double v = (s == 0.0 ? m[i] : m[i] * std::exp(-s)) * gain;
    return v > 0.0 ? v : 1.0;
  }
  /// Same, in the node's stored scaling.
  [[nodiscard]] double scaled_magnitude(int k, std::size_t i) const {
    const auto& m = mag[static_cast<std::size_t>(k)];
    if (m.empty() || m[i] <= 0.0) return 1.0;
    return m[i] * gain;
  }
  /// Unscaled value of X^(k) at node i.
  [[nodiscard]] double value(int k, std::size_t i) const {
    const double v = d[static_cast<std::size_t>(k)][i];
    const double s = shift(i);
    return s == 0.0 ? v : v * std::exp(-s);
  }

  /// Exact re-evaluation at t: fills out[0..order] (scaled by exp(shift)) and returns the shift.
  /// Without an evaluator, falls back to cubic Hermite interpolation of the arrays.
  double eval(double at, int order, double* out) const;
};

namespace detail {

inline double certified_radius(const KernelModel& kernel, int max_order, double lambda, double mean_abs, double eps) {
  double T = 0.0;
  if (lambda <= 0.0) return 0.0;
  for (int k = 0; k <= max_order; ++k) T = std::max(T, truncation_radius(kernel, k, lambda, eps, mean_abs));
  return T;
}

// Cubic Hermite interpolant of f on [t0, t0+h] from values and slopes.
inline double hermite_interp(double f0, double f1, double s0, double s1, double h, double x) {
  const double u = x / h;
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * f0 + (u3 - 2 * u2 + u) * h * s0 + (-2 * u3 + 3 * u2) * f1 + (u3 - u2) * h * s1;
}

}  // namespace detail

inline double SamplePath::eval(double at, int order, double* out) const {
  if (evaluator) {
    const double s = evaluator->eval(at, order, out);
    if (gain != 1.0 || normalized) {
      const double f = std::exp(-s);
      for (int k = 0; k <= order; ++k) out[k] = offset[static_cast<std::size_t>(k)] + gain * f * out[k];
      return 0.0;
    }
    return s;
  }
  // interpolation fallback (arrays unscaled here)
  const std::size_t n = t.size();
  if (n == 1) {
    for (int k = 0; k <= order; ++k) out[k] = value(k, 0);
    return 0.0;
  }
  auto i = static_cast<std::size_t>(std::clamp((at - t[0]) / h, 0.0, static_cast<double>(n - 2)));
  i = std::min(i, n - 2);
  const double x = at - t[i];
  for (int k = 0; k <= order; ++k) {
    if (k < max_order)
      out[k] = detail::hermite_interp(value(k, i), value(k, i + 1), value(k + 1, i), value(k + 1, i + 1), h, x);
    else
      out[k] = value(k, i) + (value(k, i + 1) - value(k, i)) * x / h;
  }
  return 0.0;
}

// Evaluates the path on a uniform grid spanning [a,b] with step <= h. The
// configuration window must cover [a-T, b+T], T the certified radius for
// orders 0..max_order at tolerance eps.
inline SamplePath evaluate_path(std::shared_ptr<const PointConfiguration> config, const KernelModel& kernel,
                                const Interval& iv, double h, int max_order = 2,
                                double eps = kDefaultCertificate) {
  detail::require(config != nullptr, "null configuration");
  detail::require(h > 0.0, "grid step must be positive");
  detail::require(iv.lo <= iv.hi, "path interval is inverted");
  detail::require(max_order >= 0 && max_order <= kMaxOrder, "max_order must be in [0,4]");
  kernel.check_order(max_order);
  const double lambda = config->intensity;
  const double mean_abs = config->law.mean_abs();
  const double T = detail::certified_radius(kernel, max_order, lambda, mean_abs, eps);
  if (!config->window.contains(iv.expanded(T)))
    throw WindowError("configuration window [" + std::to_string(config->window.lo) + ", " +
                      std::to_string(config->window.hi) + "] does not cover [a-T, b+T] = [" +
                      std::to_string(iv.lo - T) + ", " + std::to_string(iv.hi + T) + "]");
  SamplePath path;
  path.interval = iv;
  path.t = uniform_grid(iv, h);
  path.h = path.t.size() > 1 ? iv.length() / static_cast<double>(path.t.size() - 1) : h;
  path.max_order = max_order;
  path.radius = T;
  path.lambda = lambda;
  path.seed = config->seed_info;
  path.kernel_id = kernel.id();
  for (int k = 0; k <= max_order; ++k)
    path.certificate[static_cast<std::size_t>(k)] = lambda * mean_abs * kernel.tail(k, T);
  auto ev = std::make_shared<PathEvaluator>(config, kernel, T);
  const std::size_t n = path.t.size();
  for (int k = 0; k <= max_order; ++k) {
    path.d[static_cast<std::size_t>(k)].assign(n, 0.0);
    path.mag[static_cast<std::size_t>(k)].assign(n, 0.0);
  }
  std::array<double, kMaxOrder + 1> out{}, mag{};
  for (std::size_t i = 0; i < n; ++i) {
    const double s = ev->eval(path.t[i], max_order, out.data(), mag.data());
    for (int k = 0; k <= max_order; ++k) {
      path.d[static_cast<std::size_t>(k)][i] = out[static_cast<std::size_t>(k)];
      path.mag[static_cast<std::size_t>(k)][i] = mag[static_cast<std::size_t>(k)];
    }
    if (s != 0.0) {
      if (path.log_scale.empty()) path.log_scale.assign(n, 0.0);
      path.log_scale[i] = s;
    }
  }
  path.evaluator = std::move(ev);
  return path;
}

inline SamplePath evaluate_path(const PointConfiguration& config, const KernelModel& kernel, const Interval& iv,
                                double h, int max_order = 2, double eps = kDefaultCertificate) {
  return evaluate_path(std::make_shared<const PointConfiguration>(config), kernel, iv, h, max_order, eps);
}

// Z = (X - E X) / sqrt(lambda), with E X^(k) = lambda E(beta) int g^(k).
inline SamplePath normalize_path(const SamplePath& path, double lambda, const KernelModel& kernel,
                                 double mean_beta) {
  detail::require(lambda > 0.0, "normalization needs lambda > 0");
  if (!std::isfinite(mean_beta)) throw CapabilityError("impulse mean unknown");
  SamplePath z = path;
  const double rs = 1.0 / std::sqrt(lambda);
  z.log_scale.clear();
  for (int k = 0; k <= path.max_order; ++k) {
    const double mk = lambda * mean_beta * kernel.integral(k);
    z.offset[static_cast<std::size_t>(k)] = -mk * rs;
    auto& v = z.d[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (path.value(k, i) - mk) * rs;
    auto& m = z.mag[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = path.magnitude(k, i);
    z.certificate[static_cast<std::size_t>(k)] = path.certificate[static_cast<std::size_t>(k)] * rs;
  }
  z.gain = rs;
  z.normalized = true;
  return z;
}

inline SamplePath normalize_path(const SamplePath& path, double lambda, const KernelModel& kernel) {
  if (!path.evaluator) throw CapabilityError("impulse mean unknown: path has no configuration attached");
  return normalize_path(path, lambda, kernel, path.evaluator->config().law.mean());
}

/// Max over j of |trapezoid integral of X' on [t0, tj] - (X(tj) - X(t0))|.
inline double integral_consistency(const SamplePath& p) {
  double acc = 0.0, worst = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    acc += 0.5 * p.h * (p.value(1, i - 1) + p.value(1, i));
    worst = std::max(worst, std::abs(acc - (p.value(0, i) - p.value(0, 0))));
  }
  return worst;
}

/// Independent replications of a path on [a,b], in replication order.
inline std::vector<SamplePath> simulate_paths(double lambda, const KernelModel& kernel, const ImpulseSpec& impulses,
                                              const Interval& iv, double h, int max_order, const McOptions& mc,
                                              double eps = kDefaultCertificate) {
  const double T = detail::certified_radius(kernel, max_order, lambda, impulses.mean_abs(), eps);
  const Interval window = iv.expanded(T);
  return parallel_map(mc.replications, mc.threads, [&](std::size_t r) {
    auto rng = mc.stream(r);
    auto cfg = std::make_shared<const PointConfiguration>(sample_ppp(lambda, window, impulses, rng));
    return evaluate_path(cfg, kernel, iv, h, max_order, eps);
  });
}

struct EnsembleStats {
  std::size_t replications = 0;
  double t_mid = 0.0;
  MomentSummary at_mid;
  std::vector<double> lags;
  std::vector<Estimate> covariance;
  std::vector<double> target;  // covariance(kernel, lag) when a kernel is supplied
};

// Moments of the ensemble at the interval midpoint, and Cov(Z(mid), Z(mid+lag)).
// Lags are rounded to the nearest grid multiple.
inline EnsembleStats ensemble_statistics(const std::vector<SamplePath>& paths, const std::vector<double>& lags,
                                         const KernelModel* kernel = nullptr) {
  if (paths.size() < 100) throw ParameterError("ensemble statistics need at least 100 replications");
  const auto& p0 = paths.front();
  const std::size_t n = p0.size();
  const std::size_t mid = (n - 1) / 2;
  EnsembleStats s;
  s.replications = paths.size();
  s.t_mid = p0.t[mid];
  std::vector<double> x(paths.size());
  for (std::size_t r = 0; r < paths.size(); ++r) {
    if (paths[r].size() != n) throw ParameterError("ensemble paths must share a grid");
    x[r] = paths[r].value(0, mid);
  }
  s.at_mid = moment_summary(x);
  for (double lag : lags) {
    const auto off = static_cast<long>(std::llround(lag / p0.h));
    const long j = static_cast<long>(mid) + off;
    if (j < 0 || j >= static_cast<long>(n)) throw ParameterError("lag " + std::to_string(lag) + " leaves the path grid");
    std::vector<double> y(paths.size());
    for (std::size_t r = 0; r < paths.size(); ++r) y[r] = paths[r].value(0, static_cast<std::size_t>(j));
    s.lags.push_back(static_cast<double>(off) * p0.h);
    s.covariance.push_back(off == 0 ? s.at_mid.variance : covariance_se(x, y));
    if (kernel) s.target.push_back(covariance(*kernel, s.lags.back()));
  }
  return s;
}

struct SmallBallResult {
  double epsilon = 0.0;
  double p_hat = 0.0;
  double se = 0.0;
  double bound = 0.0;
  double t_eps = 0.0;
  double ratio = 0.0;       // p_hat / epsilon
  double max_abs = 0.0;     // largest |X(0)| observed
  bool bound_flag = false;  // p_hat + 3 se < bound (reported, not asserted)
  int regime = 0;
};

/// Analytic lower bound on P(|X(t)| <= eps) for the kernel's tail regime.
inline double small_ball_bound(const KernelModel& kernel, double lambda, double eps, double* t_eps = nullptr) {
  detail::require(eps > 0.0 && eps < 1.0, "small-ball level must lie in (0,1)");
  const auto reg = kernel.small_ball();
  double T = 0.0, b = 0.0;
  if (reg.case_id == 1) {
    T = std::pow(-std::log(eps), 1.0 / reg.alpha);
    b = 0.5 * std::exp(-2.0 * lambda * T);
  } else if (reg.case_id == 2) {
    detail::require(lambda < 0.25, "exponential-tail small-ball bound needs lambda < 1/4");
    T = -std::log(eps);
    b = (1.0 - lambda / ((1.0 - 2.0 * lambda) * (1.0 - 2.0 * lambda))) * std::exp(-2.0 * lambda * T);
  } else {
    throw CapabilityError("kernel '" + kernel.id() + "' matches no small-ball tail regime");
  }
  if (t_eps) *t_eps = T;
  return b;
}

// Monte Carlo estimate of P(|X(0)| <= eps) for deterministic unit impulses,
// with the analytic lower bound alongside.
inline SmallBallResult small_ball_probability(double lambda, const KernelModel& kernel, double eps,
                                              const McOptions& mc) {
  SmallBallResult r;
  r.epsilon = eps;
  r.regime = kernel.small_ball().case_id;
  r.bound = small_ball_bound(kernel, lambda, eps, &r.t_eps);
  detail::require(mc.replications >= 1, "need at least one replication");
  const double T = lambda > 0 ? truncation_radius(kernel, 0, lambda, 1e-3 * eps) : 0.0;
  const auto x = parallel_map(mc.replications, mc.threads, [&](std::size_t i) {
    auto rng = mc.stream(i);
    const auto c = sample_ppp(lambda, {-T, T}, ImpulseSpec::one(), rng);
    std::vector<double> terms(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) terms[k] = c.impulses[k] * kernel(0, -c.points[k]);
    return detail::pairwise_sum(terms);
  });
  std::size_t hits = 0;
  for (double v : x) {
    r.max_abs = std::max(r.max_abs, std::abs(v));
    if (std::abs(v) <= eps) ++hits;
  }
  const double n = static_cast<double>(x.size());
  r.p_hat = static_cast<double>(hits) / n;
  r.se = std::sqrt(r.p_hat * (1.0 - r.p_hat) / n);
  r.ratio = r.p_hat / eps;
  r.bound_flag = r.p_hat + 3.0 * r.se < r.bound;
  return r;
}

}  // namespace shotnoise
