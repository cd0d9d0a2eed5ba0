#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "core.hpp"

namespace shotnoise {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Sample mean with its standard error (sd / sqrt(n)).
inline Estimate mean_se(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const double m = detail::pairwise_sum(x) / static_cast<double>(n);
  if (n == 1) return {m, 0.0};
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = (x[i] - m) * (x[i] - m);
  const double var = detail::pairwise_sum(d) / static_cast<double>(n - 1);
  return {m, std::sqrt(var / static_cast<double>(n))};
}

// Unbiased covariance of paired samples, with the standard error of the mean
// of the centred products.
inline Estimate covariance_se(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return {};
  const double mx = detail::pairwise_sum(x.first(n)) / static_cast<double>(n);
  const double my = detail::pairwise_sum(y.first(n)) / static_cast<double>(n);
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = (x[i] - mx) * (y[i] - my);
  const double c = detail::pairwise_sum(p) / static_cast<double>(n - 1);
  const double pm = detail::pairwise_sum(p) / static_cast<double>(n);
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = (p[i] - pm) * (p[i] - pm);
  const double vp = detail::pairwise_sum(q) / static_cast<double>(n - 1);
  return {c, std::sqrt(vp / static_cast<double>(n))};
}

struct MomentSummary {
  std::size_t n = 0;
  Estimate mean, variance, skewness, excess_kurtosis;
};

inline MomentSummary moment_summary(std::span<const double> x) {
  MomentSummary s;
  s.n = x.size();
  const double n = static_cast<double>(s.n);
  if (s.n < 4) throw ParameterError("moment summary needs at least 4 samples");
  s.mean = mean_se(x);
  s.variance = covariance_se(x, x);
  std::vector<double> c2(s.n), c3(s.n), c4(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    const double d = x[i] - s.mean.value;
    c2[i] = d * d;
    c3[i] = d * d * d;
    c4[i] = d * d * d * d;
  }
  const double m2 = detail::pairwise_sum(c2) / n;
  const double m3 = detail::pairwise_sum(c3) / n;
  const double m4 = detail::pairwise_sum(c4) / n;
  // adjusted Fisher-Pearson skewness and unbiased excess kurtosis
  const double g1 = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
  const double g2 = m2 > 0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  s.skewness.value = std::sqrt(n * (n - 1)) / (n - 2) * g1;
  s.excess_kurtosis.value = (n - 1) / ((n - 2) * (n - 3)) * ((n + 1) * g2 + 6.0);
  s.skewness.se = std::sqrt(6.0 * n * (n - 1) / ((n - 2) * (n + 1) * (n + 3)));
  s.excess_kurtosis.se = 2.0 * s.skewness.se * std::sqrt((n * n - 1) / ((n - 3) * (n + 5)));
  return s;
}

/// Asymptotic Kolmogorov distribution tail Q_KS(lambda).
inline double kolmogorov_q(double lam) {
  if (lam < 1e-3) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lam * lam);
    sum += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the Stephens small-sample correction.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ParameterError("KS test needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double x, double dof) {
  boost::math::chi_squared_distribution<double> c(dof);
  return boost::math::cdf(boost::math::complement(c, std::max(x, 0.0)));
}

}  // namespace shotnoise
