#include <gtest/gtest.h>

#include <cmath>

#include <shotnoise/paths.hpp>

#include "oracles.hpp"

using namespace shotnoise;

namespace {

PointConfiguration fixed_config(std::vector<double> pts, std::vector<double> beta, Interval window) {
  PointConfiguration c;
  c.window = window;
  c.points = std::move(pts);
  c.impulses = std::move(beta);
  c.intensity = 1.0;
  return c;
}

}  // namespace

TEST(Paths, EmptyConfigurationIsZero) {
  auto g = gaussian_kernel(1.0);
  auto c = fixed_config({}, {}, {-20, 21});
  auto p = evaluate_path(c, g, {0, 1}, 0.05, 3);
  for (int k = 0; k <= 3; ++k)
    for (double v : p.d[static_cast<std::size_t>(k)]) EXPECT_EQ(v, 0.0);
}

TEST(Paths, SinglePointIsTheKernel) {
  auto g = gaussian_kernel(1.0);
  auto c = fixed_config({0.0}, {1.0}, {-20, 20});
  auto p = evaluate_path(c, g, {-3, 3}, 0.05, 2);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(p.value(0, i), oracle::gaussian_derivative(0, 1.0, p.t[i]), 1e-15);
    EXPECT_NEAR(p.value(1, i), oracle::gaussian_derivative(1, 1.0, p.t[i]), 1e-15);
    EXPECT_NEAR(p.value(2, i), oracle::gaussian_derivative(2, 1.0, p.t[i]), 1e-15);
  }
}

TEST(Paths, SuperpositionOfFivePoints) {
  auto g = gaussian_kernel(0.7);
  std::vector<double> pts{-1.3, -0.2, 0.4, 1.1, 2.5};
  std::vector<double> beta{1.0, -0.5, 2.0, 1.0, 0.3};
  auto c = fixed_config(pts, beta, {-30, 30});
  auto p = evaluate_path(c, g, {-2, 3}, 0.01, 3);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (int k = 0; k <= 3; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < pts.size(); ++j) s += beta[j] * g(k, p.t[i] - pts[j]);
      EXPECT_NEAR(p.value(k, i), s, 1e-12);
    }
}

TEST(Paths, MatchesBruteForceSum) {
  auto g = gaussian_kernel(1.0);
  RngStream rng({42, 0});
  auto c = sample_ppp(3.0, {-20, 30}, ImpulseSpec::normal(1.0, 0.5), rng);
  auto p = evaluate_path(c, g, {0, 10}, 0.05, 2);
  // omitted terms are bounded by the certificate on average; pointwise they are far smaller here
  for (std::size_t i = 0; i < p.size(); ++i)
    for (int k = 0; k <= 2; ++k) EXPECT_NEAR(p.value(k, i), oracle::brute_path(c, g, k, p.t[i]), 1e-8);
}

TEST(Paths, SechKernelAgainstBruteForce) {
  auto g = sech_kernel(0.5);
  const double T = detail::certified_radius(g, 2, 2.0, 1.0, kDefaultCertificate);
  RngStream rng({43, 0});
  auto c = sample_ppp(2.0, Interval{0, 5}.expanded(T + 1), ImpulseSpec::one(), rng);
  auto p = evaluate_path(c, g, {0, 5}, 0.025, 2);
  for (std::size_t i = 0; i < p.size(); i += 7)
    EXPECT_NEAR(p.value(0, i), oracle::brute_path(c, g, 0, p.t[i]), 1e-7);
}

TEST(Paths, WindowTooSmall) {
  auto g = gaussian_kernel(1.0);
  auto c = fixed_config({0.5}, {1.0}, {-1, 2});
  EXPECT_THROW((void)evaluate_path(c, g, {0, 1}, 0.05), WindowError);
}

TEST(Paths, LongGapKeepsSigns) {
  // two points 200 sigma apart: X underflows mid-gap, the shifted values do not
  auto g = gaussian_kernel(1.0);
  auto c = fixed_config({0.0, 200.0}, {1.0, 1.0}, {-50, 250});
  auto p = evaluate_path(c, g, {1, 199}, 0.05, 2);
  ASSERT_FALSE(p.log_scale.empty());
  const std::size_t mid = p.size() / 2;
  EXPECT_GT(p.d[0][mid], 0.0);
  EXPECT_EQ(p.value(0, mid), 0.0);
  // X' changes sign exactly once in the middle of the gap
  int changes = 0;
  double prev = p.d[1][0];
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double v = p.d[1][i];
    if (v == 0.0) continue;
    if ((v > 0) != (prev > 0)) ++changes;
    prev = v;
  }
  EXPECT_EQ(changes, 1);
}

TEST(Paths, IntegralConsistency) {
  auto g = gaussian_kernel(1.0);
  RngStream rng({5, 5});
  auto c = sample_ppp(2.0, {-10, 20}, ImpulseSpec::one(), rng);
  auto p = evaluate_path(c, g, {0, 10}, 0.05, 3);
  double d3 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d3 = std::max(d3, std::abs(p.value(3, i)));
  // trapezoid error h^2 (b-a) max|X'''| / 12, plus twice the certificate
  EXPECT_LT(integral_consistency(p), 0.05 * 0.05 * 10 * d3 / 12 + 2 * p.certificate[0]);
  EXPECT_GT(integral_consistency(p), 0.0);
}

TEST(Paths, NormalizeUnitMass) {
  auto g = gaussian_kernel(1.0);
  RngStream rng({6, 0});
  auto c = std::make_shared<const PointConfiguration>(sample_ppp(4.0, {-10, 12}, ImpulseSpec::one(), rng));
  auto p = evaluate_path(c, g, {0, 2}, 0.05, 2);
  auto z = normalize_path(p, 4.0, g);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(z.value(0, i), (p.value(0, i) - 4.0) / 2.0, 1e-14);
    EXPECT_NEAR(z.value(1, i), p.value(1, i) / 2.0, 1e-14);
  }
  std::array<double, kMaxOrder + 1> out{};
  z.eval(1.03, 0, out.data());
  p.eval(1.03, 0, out.data() + 1);
  EXPECT_NEAR(out[0], (out[1] - 4.0) / 2.0, 1e-14);
  auto z1 = normalize_path(p, 1.0, g, 1.0);
  EXPECT_NEAR(z1.value(0, 3), p.value(0, 3) - 1.0, 1e-14);
}

TEST(Paths, EnsembleMeanAndCampbellVariance) {
  auto g = gaussian_kernel(1.0);
  McOptions mc;
  mc.replications = 10000;
  mc.master_seed = 77;
  auto paths = simulate_paths(5.0, g, ImpulseSpec::one(), {0, 1}, 0.5, 0, mc);
  std::vector<SamplePath> z;
  z.reserve(paths.size());
  for (auto& p : paths) z.push_back(normalize_path(p, 5.0, g, 1.0));
  auto s = ensemble_statistics(z, {0.0, 0.5}, &g);
  const double m0 = 0.5 / std::sqrt(kPi);
  EXPECT_NEAR(s.at_mid.mean.value, 0.0, 3.0 * std::sqrt(m0 / 1e4));
  EXPECT_NEAR(s.at_mid.variance.value, m0, 3.0 * s.at_mid.variance.se);
  EXPECT_DOUBLE_EQ(s.covariance[0].value, s.at_mid.variance.value);
  EXPECT_NEAR(s.covariance[1].value, s.target[1], 3.0 * s.covariance[1].se);
}

TEST(Paths, ThreadCountInvariance) {
  auto g = gaussian_kernel(1.0);
  McOptions a, b;
  a.replications = b.replications = 8;
  a.threads = 1;
  b.threads = 4;
  auto pa = simulate_paths(2.0, g, ImpulseSpec::one(), {0, 3}, 0.05, 2, a);
  auto pb = simulate_paths(2.0, g, ImpulseSpec::one(), {0, 3}, 0.05, 2, b);
  for (std::size_t r = 0; r < pa.size(); ++r) EXPECT_EQ(pa[r].d[0], pb[r].d[0]);
}

TEST(Paths, HeatEquationIdentity) {
  RngStream rng({9, 9});
  auto c = sample_ppp(2.0, {-15, 20}, ImpulseSpec::one(), rng);
  const double s = 0.8, ds = 1e-3;
  auto gp = gaussian_kernel(s + ds), gm = gaussian_kernel(s - ds), g = gaussian_kernel(s);
  auto pp = evaluate_path(c, gp, {0, 5}, 0.1, 0), pm = evaluate_path(c, gm, {0, 5}, 0.1, 0);
  auto p = evaluate_path(c, g, {0, 5}, 0.1, 2);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double lhs = (pp.value(0, i) - pm.value(0, i)) / (2 * ds);
    EXPECT_NEAR(lhs, s * p.value(2, i), 1e-4);
  }
}

TEST(Paths, StationarityKs) {
  auto g = gaussian_kernel(1.0);
  McOptions mc;
  mc.replications = 10000;
  auto paths = simulate_paths(1.0, g, ImpulseSpec::one(), {0, 3}, 0.05, 0, mc);
  std::vector<double> x0, x3;
  for (auto& p : paths) {
    x0.push_back(p.value(0, 0));
    x3.push_back(p.value(0, p.size() - 1));
  }
  EXPECT_GT(ks_two_sample(x0, x3).p_value, 0.01);
}

TEST(Paths, SmallBall) {
  auto g = gaussian_kernel(1.0);
  double T = 0.0;
  const double b = small_ball_bound(g, 0.2, 1e-3, &T);
  EXPECT_NEAR(T, std::sqrt(3.0 * std::log(10.0)), 1e-12);
  EXPECT_NEAR(b, 0.5 * std::exp(-0.4 * T), 1e-15);
  McOptions mc;
  mc.replications = 2000;
  auto r = small_ball_probability(0.2, g, 0.5, mc);
  if (r.max_abs <= 0.5)
    EXPECT_EQ(r.p_hat, 1.0);
  else
    EXPECT_LT(r.p_hat, 1.0);
  EXPECT_NEAR(r.se, std::sqrt(r.p_hat * (1 - r.p_hat) / 2000.0), 1e-15);
  auto sb = sech_kernel(1.0);
  EXPECT_EQ(sb.small_ball().case_id, 2);
  EXPECT_THROW((void)small_ball_bound(sb, 0.3, 0.1), ParameterError);
}
