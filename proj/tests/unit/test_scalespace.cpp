#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <shotnoise/scalespace.hpp>

#include "oracles.hpp"

using namespace shotnoise;

namespace {

PointConfiguration fixed_config(std::vector<double> pts, Interval window) {
  PointConfiguration c;
  c.window = window;
  c.points = std::move(pts);
  c.impulses.assign(c.points.size(), 1.0);
  c.intensity = 1.0;
  return c;
}

// Zeros of X' for the configuration at width sigma, by brute force on a dense grid.
int brute_extrema(const PointConfiguration& c, double sigma, double a, double b) {
  auto g = gaussian_kernel(sigma);
  return oracle::dense_sign_changes([&](double t) { return oracle::brute_path(c, g, 1, t); }, a, b, 40000);
}

}  // namespace

TEST(ScaleSpace, RateConstants) {
  EXPECT_NEAR(extrema_rate_limit(1.0), 0.38984840, 1e-8);
  EXPECT_NEAR(extrema_rate_limit(4.0), extrema_rate_limit(1.0) / 4.0, 1e-15);
  EXPECT_NEAR(extrema_rate_bound(1.0, 1.0), 13.0 * std::exp(1.0), 1e-12);
}

TEST(ScaleSpace, SinglePointOneTrack) {
  auto c = fixed_config({0.3}, {-60, 60});
  auto tr = track_extrema(c, 0.1, 3.0, {-10, 10});
  ASSERT_EQ(tr.tracks.size(), 1u);
  const auto& t = tr.tracks[0];
  EXPECT_EQ(t.type, RootKind::maximum);
  EXPECT_EQ(t.end, TrackEnd::reached_min);
  EXPECT_DOUBLE_EQ(t.birth_sigma, 3.0);
  for (const auto& s : t.samples) EXPECT_NEAR(s.t, 0.3, 1e-8);
  for (std::size_t i = 1; i < t.samples.size(); ++i) EXPECT_LT(t.samples[i].sigma, t.samples[i - 1].sigma);
  EXPECT_NEAR(t.samples.back().sigma, 0.1, 1e-15);
  EXPECT_EQ(tr.pair_births, 0);
}

TEST(ScaleSpace, TwoPointsBirthAtHalfDistance) {
  const double d = 2.0;
  auto c = fixed_config({0.0, d}, {-60, 60});
  // dense sigma-grid oracle for the merge scale
  double sigma_c = 0.0;
  for (double s = 1.2; s > 0.8; s -= 0.001)
    if (brute_extrema(c, s, -8, 10) == 3) {
      sigma_c = s;
      break;
    }
  EXPECT_NEAR(sigma_c, d / 2.0, 2e-3);

  auto tr = track_extrema(c, 0.2, 3.0, {-8, 10});
  ASSERT_EQ(tr.tracks.size(), 3u);
  EXPECT_EQ(tr.pair_births, 1);
  const auto& a = tr.tracks[1];
  const auto& b = tr.tracks[2];
  EXPECT_EQ(a.partner, 2);
  EXPECT_EQ(b.partner, 1);
  EXPECT_NE(a.type, b.type);
  EXPECT_LT(a.birth_sigma, d / 2.0);
  EXPECT_GT(a.birth_sigma, 0.95 * d / 2.0);
  EXPECT_NEAR(refine_birth_sigma(c, a, b, a.birth_sigma * 1.03), d / 2.0, 2e-3);
  // one track above the merge scale, three below
  for (std::size_t i = 0; i < tr.sigma.size(); ++i) EXPECT_EQ(tr.live[i], tr.sigma[i] > d / 2.0 ? 1 : 3);
  // final positions: maxima at the points, minimum halfway
  std::vector<double> ends;
  for (const auto& t : tr.tracks) ends.push_back(t.samples.back().t);
  std::sort(ends.begin(), ends.end());
  EXPECT_NEAR(ends[0], 0.0, 1e-6);
  EXPECT_NEAR(ends[1], 1.0, 1e-9);
  EXPECT_NEAR(ends[2], 2.0, 1e-6);
}

TEST(ScaleSpace, TrackingInvariantsOnRandomConfigurations) {
  McOptions mc;
  for (std::size_t r = 0; r < 6; ++r) {
    auto rng = mc.stream(r);
    auto cfg = sample_ppp(1.5, {0.0, 30.0}, ImpulseSpec::one(), rng);
    if (cfg.empty()) continue;
    const Interval hull{cfg.points.front() - 2.0, cfg.points.back() + 2.0};
    cfg.window = hull.expanded(40.0);
    TrackingOptions o;
    o.levels = {0.3, 0.6, 1.0};
    auto tr = track_extrema(cfg, 0.2, 2.0, hull, o);
    // counts non-increasing in sigma (downward they only grow)
    for (std::size_t i = 1; i < tr.live.size(); ++i) EXPECT_GE(tr.live[i], tr.live[i - 1]);
    // exact count consistency with an independent brute-force count at the levels
    for (double s : {2.0, 1.0, 0.6, 0.3, 0.2}) EXPECT_EQ(tr.live_at(s), brute_extrema(cfg, s, hull.lo, hull.hi)) << s;
    // non-intersection and alternation at a common level
    std::vector<std::pair<double, RootKind>> at;
    for (const auto& t : tr.tracks)
      for (const auto& s : t.samples)
        if (s.sigma == 0.6) at.emplace_back(s.t, t.type);
    std::sort(at.begin(), at.end());
    ASSERT_EQ(static_cast<int>(at.size()), tr.live_at(0.6));
    for (std::size_t i = 1; i < at.size(); ++i) {
      EXPECT_GT(at[i].first - at[i - 1].first, 1e-9);
      EXPECT_NE(at[i].second, at[i - 1].second);
    }
    for (const auto& t : tr.tracks) {
      EXPECT_EQ(t.end, TrackEnd::reached_min);
      if (t.birth == TrackBirth::pair) EXPECT_GE(t.partner, 0);
      EXPECT_NE(t.birth, TrackBirth::entered);
    }
    EXPECT_GT(tr.max_speed, 0.0);
  }
}

TEST(ScaleSpace, HeatEquationResidual) {
  auto cfg = fixed_config({-0.7, 0.1, 0.4, 1.9}, {-60, 60});
  const double sigma = 0.8;
  auto g = gaussian_kernel(sigma);
  for (double t : {-1.0, 0.25, 1.3}) {
    const double lap = sigma * oracle::brute_path(cfg, g, 3, t);
    double prev = 0.0;
    for (double ds : {1e-2, 5e-3}) {
      const double fd = (oracle::brute_path(cfg, gaussian_kernel(sigma + ds), 1, t) -
                         oracle::brute_path(cfg, gaussian_kernel(sigma - ds), 1, t)) /
                        (2 * ds);
      const double res = std::abs(fd - lap);
      EXPECT_LT(res, 20.0 * ds * ds);
      if (prev > 0.0) EXPECT_NEAR(res / prev, 0.25, 0.02);
      prev = res;
    }
  }
}

TEST(ScaleSpace, SemigroupIdentity) {
  RngStream rng(SeedInfo{5, 0});
  auto cfg = sample_ppp(2.0, {-40.0, 60.0}, ImpulseSpec::one(), rng);
  auto s = semigroup_check(cfg, 0.5, 0.5, {0.0, 20.0}, 0.01);
  EXPECT_EQ(s.points, 2001u);
  EXPECT_GT(s.peak, 0.0);
  EXPECT_LE(s.deviation, 1e-4 * s.peak);
  auto thin = semigroup_check(cfg, 0.5, 0.05, {0.0, 20.0}, 0.005);
  EXPECT_LE(thin.deviation, 1e-6 * thin.peak);
  EXPECT_THROW((void)semigroup_check(cfg, 0.5, 0.5, {-45.0, 0.0}, 0.01), WindowError);
}

TEST(ScaleSpace, ScalingLawInDistribution) {
  McOptions mc;
  mc.replications = 10000;
  auto ks = scaling_law_ks(1.0, 1.0, 2.0, mc);
  EXPECT_GT(ks.p_value, 0.01);
  auto same = scaling_law_ks(3.0, 0.5, 1.0, mc);
  EXPECT_GT(same.p_value, 0.01);
}

TEST(ScaleSpace, RhoHighIntensity) {
  McOptions mc;
  mc.replications = 200;
  auto e = rho_estimate(10.0, 1.0, {0.0, 50.0}, mc);
  EXPECT_NEAR(e.rho, extrema_rate_limit(1.0), 0.1 * extrema_rate_limit(1.0));
  EXPECT_EQ(e.bound_violations, 0u);
  EXPECT_LE(e.max_rate, e.bound);
  EXPECT_EQ(e.replications, 200u);
}

TEST(ScaleSpace, RhoLowIntensity) {
  McOptions mc;
  mc.replications = 10000;
  auto e = rho_estimate(0.05, 1.0, {0.0, 50.0}, mc);
  EXPECT_GE(e.rho / 0.1, 0.8);
  EXPECT_LE(e.rho / 0.1, 1.0);
  EXPECT_EQ(e.bound_violations, 0u);
}

TEST(ScaleSpace, ScalingCheck) {
  McOptions mc;
  mc.replications = 300;
  auto same = scaling_check(1.0, 1.0, 1.0, mc);
  EXPECT_TRUE(same.pass);
  auto two = scaling_check(1.0, 1.0, 2.0, mc);
  EXPECT_TRUE(two.pass) << two.lhs << " vs " << two.rhs << " se " << two.combined_se;
  auto half = scaling_check(2.0, 1.0, 0.5, mc);
  EXPECT_TRUE(half.pass);
  // applying the law with c and then 1/c agrees: both describe rho(2, 1)
  EXPECT_NEAR(two.rhs, half.lhs / 0.5 * 0.5, 3.0 * std::hypot(two.combined_se, half.combined_se));
}

TEST(ScaleSpace, MonotonicityReportSmall) {
  McOptions mc;
  mc.replications = 8;
  auto rep = rho_monotonicity_report(1.0, {0.25, 0.5, 1.0, 2.0}, mc, 40.0);
  EXPECT_EQ(rep.tracking_failures, 0u);
  EXPECT_EQ(rep.monotone, 8u);
  EXPECT_TRUE(rep.per_config_pass);
  ASSERT_EQ(rep.counts.size(), 8u);
  for (const auto& c : rep.counts) {
    ASSERT_EQ(c.size(), 4u);
    for (std::size_t k = 1; k < c.size(); ++k) EXPECT_LE(c[k], c[k - 1]);
  }
  for (std::size_t k = 1; k < rep.curve.rho.size(); ++k) EXPECT_LT(rep.curve.rho[k], rep.curve.rho[k - 1]);
  EXPECT_GE(rep.mean_probe_crossings, 0.0);
}
