#include <gtest/gtest.h>

#include <cmath>

#include <shotnoise/crossings.hpp>

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

const double g1_0 = 1.0 / std::sqrt(2.0 * kPi);

}  // namespace

TEST(Crossings, ZeroPath) {
  auto g = gaussian_kernel(1.0);
  auto p = evaluate_path(fixed_config({}, {-20, 20}), g, {0, 1}, 0.05, 2);
  EXPECT_EQ(count_crossings(p, 1.0).total(), 0);
  auto at0 = count_crossings(p, 0.0);
  EXPECT_GE(at0.tangency_suspect, 1);
  EXPECT_EQ(at0.up, 0);
  EXPECT_EQ(at0.down, 0);
  EXPECT_EQ(kac_estimate(p, 1.0, 0.1), 0.0);
  EXPECT_EQ(total_variation(p), 0.0);
  auto r = rolle_check(p, {0.0, 1.0});
  EXPECT_TRUE(r.pass);
}

TEST(Crossings, SingleBump) {
  auto g = gaussian_kernel(1.0);
  auto p = evaluate_path(fixed_config({0.0}, {-20, 20}), g, {-6, 6}, 0.05, 2);
  const double a = g1_0 / 2;
  auto t = count_crossings(p, a);
  EXPECT_EQ(t.up, 1);
  EXPECT_EQ(t.down, 1);
  EXPECT_EQ(t.total(), 2);
  EXPECT_EQ(oracle::dense_sign_changes([&](double x) { return g(0, x) - a; }, -6, 6, 24000), 2);
  const double root = std::sqrt(2.0 * std::log(2.0));
  ASSERT_EQ(t.locations.size(), 2u);
  EXPECT_NEAR(t.locations[0].t, -root, 1e-7);
  EXPECT_NEAR(t.locations[1].t, root, 1e-7);
  EXPECT_TRUE(alternates(t.locations));

  auto e = count_extrema(p);
  EXPECT_EQ(e.maxima, 1);
  EXPECT_EQ(e.minima, 0);
  EXPECT_NEAR(e.locations[0].t, 0.0, 1e-7);

  EXPECT_NEAR(kac_estimate(p, a, 1e-3), 2.0, 0.1);
  // trapezoid error is h^2/12 times the jump of d|X'|/dt, about 1.7e-4 at h = 0.05
  auto fine = evaluate_path(fixed_config({0.0}, {-20, 20}), g, {-6, 6}, 0.025, 2);
  EXPECT_NEAR(total_variation(fine), 2.0 * g1_0, 1e-4);
}

TEST(Crossings, TwoSeparatedBumps) {
  auto g = gaussian_kernel(1.0);
  auto p = evaluate_path(fixed_config({-4.0, 4.0}, {-30, 30}), g, {-10, 10}, 0.05, 2);
  auto e = count_extrema(p);
  EXPECT_EQ(e.maxima, 2);
  EXPECT_EQ(e.minima, 1);
  EXPECT_TRUE(alternates(e.locations));
}

TEST(Crossings, HiddenPairInsideOneCell) {
  // a shallow dip between two bumps crossed at a level just below its top: with a coarse grid
  // both roots fall inside a single cell and only the derivative sign change reveals them
  auto g = gaussian_kernel(1.0);
  auto c = fixed_config({0.0}, {-20, 20});
  auto p = evaluate_path(c, g, {-3, 3}, 0.5, 2);
  const double a = g(0, 0.1);
  // nodes at -0.5, 0, 0.5: X(0) above a, X(+-0.5) below; still ordinary brackets
  EXPECT_EQ(count_crossings(p, a).total(), 2);
  // shift grid so the peak sits inside a cell: nodes at -0.25, 0.25 both below a
  auto q = evaluate_path(c, g, {-2.75, 2.25}, 0.5, 2);
  EXPECT_EQ(count_crossings(q, a).total(), 2);
}

TEST(Crossings, EndpointCountedOnce) {
  auto g = gaussian_kernel(1.0);
  auto c = fixed_config({0.0}, {-20, 20});
  auto p = evaluate_path(c, g, {1.0, 3.0}, 0.05, 2);
  const double a = p.value(0, 0);
  EXPECT_EQ(count_crossings(p, a).total(), 1);
}

TEST(Crossings, KacConvergesOnRandomPath) {
  auto g = gaussian_kernel(1.0);
  RngStream rng({3, 3});
  auto c = sample_ppp(2.0, {-10, 20}, ImpulseSpec::one(), rng);
  auto p = evaluate_path(c, g, {0, 10}, 0.01, 2);
  const double a = 2.0;
  const auto tally = count_crossings(p, a);
  ASSERT_EQ(tally.tangency_suspect, 0);
  EXPECT_NEAR(kac_estimate(p, a, 1e-3), tally.total(), 1e-9);
  EXPECT_NEAR(kac_estimate(p, a, 1e-4), tally.total(), 1e-9);
  const int ext = count_extrema(p).total();
  for (double d : {1e-1, 1e-2, 1e-3}) EXPECT_LE(kac_estimate(p, a, d), ext + 1 + 1e-12);
}

TEST(Crossings, AgreesWithDenseOracle) {
  auto g = gaussian_kernel(0.5);
  for (std::uint64_t r = 0; r < 40; ++r) {
    RngStream rng({17, r});
    auto c = sample_ppp(2.0, {-10, 15}, ImpulseSpec::one(), rng);
    auto p = evaluate_path(c, g, {0, 5}, 0.025, 2);
    for (double a : {0.3, 0.8, 1.5}) {
      const auto t = count_crossings(p, a);
      const int dense = oracle::dense_sign_changes([&](double x) { return oracle::brute_path(c, g, 0, x) - a; }, 0,
                                                   5, 50000);
      EXPECT_EQ(t.total(), dense) << "rep " << r << " level " << a;
      if (t.tangency_suspect == 0) {
        EXPECT_LE(std::abs(t.up - t.down), 1);
        EXPECT_TRUE(alternates(t.locations));
      }
      for (const auto& loc : t.locations) {
        EXPECT_TRUE(p.interval.contains(loc.t));
        EXPECT_LT(loc.residual, 1e-6);
      }
    }
    const auto e = count_extrema(p);
    EXPECT_EQ(e.total(),
              oracle::dense_sign_changes([&](double x) { return oracle::brute_path(c, g, 1, x); }, 0, 5, 50000));
    EXPECT_TRUE(alternates(e.locations));
  }
}

TEST(Crossings, RefinementNeverLosesCrossings) {
  auto g = gaussian_kernel(1.0);
  for (std::uint64_t r = 0; r < 30; ++r) {
    RngStream rng({23, r});
    auto c = std::make_shared<const PointConfiguration>(sample_ppp(3.0, {-10, 20}, ImpulseSpec::one(), rng));
    auto coarse = evaluate_path(c, g, {0, 10}, 0.1, 2);
    auto fine = evaluate_path(c, g, {0, 10}, 0.05, 2);
    for (double a : {1.0, 3.0}) EXPECT_LE(count_crossings(coarse, a).total(), count_crossings(fine, a).total());
  }
}

TEST(Crossings, TallyLevelsMatchesCounts) {
  auto g = gaussian_kernel(1.0);
  RngStream rng({31, 0});
  auto c = sample_ppp(2.0, {-10, 30}, ImpulseSpec::one(), rng);
  auto p = evaluate_path(c, g, {0, 20}, 0.05, 2);
  std::vector<double> levels;
  for (int i = 0; i < 40; ++i) levels.push_back(0.05 + 0.1 * i);
  auto fast = tally_levels(p, levels);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto t = count_crossings(p, levels[i]);
    EXPECT_EQ(fast.total[i], t.total()) << levels[i];
    EXPECT_EQ(fast.up[i], t.up);
    EXPECT_EQ(fast.down[i], t.down);
  }
}

TEST(Crossings, CoAreaOnOnePath) {
  auto g = gaussian_kernel(1.0);
  RngStream rng({32, 0});
  auto c = sample_ppp(2.0, {-10, 30}, ImpulseSpec::one(), rng);
  auto p = evaluate_path(c, g, {0, 20}, 0.02, 2);
  std::vector<double> levels;
  for (int i = 0; i <= 4000; ++i) levels.push_back(-0.1 + 0.001 * i);
  auto n = tally_levels(p, levels);
  std::vector<double> v(n.total.begin(), n.total.end());
  EXPECT_NEAR(integrate_over_levels(levels, v), total_variation(p), 0.02 * total_variation(p));
}

TEST(Crossings, RolleOnRandomPaths) {
  auto g = gaussian_kernel(0.5);
  std::vector<double> levels;
  for (int i = 0; i < 50; ++i) levels.push_back(0.02 + 0.06 * i);
  for (std::uint64_t r = 0; r < 100; ++r) {
    RngStream rng({41, r});
    auto c = sample_ppp(2.0, {-10, 15}, ImpulseSpec::one(), rng);
    auto p = evaluate_path(c, g, {0, 5}, 0.025, 2);
    const int ext = count_extrema(p).total();
    auto n = tally_levels(p, levels);
    for (int k : n.total) EXPECT_LE(k, ext + 1);
  }
}

TEST(Crossings, ExpPolyBounds) {
  EXPECT_EQ(exp_poly_extrema_bound(0), 0);
  EXPECT_EQ(exp_poly_extrema_bound(1), 1);
  EXPECT_EQ(exp_poly_extrema_bound(2), 3);
  EXPECT_EQ(exp_poly_inflection_bound(2), 5);
  EXPECT_EQ(exp_poly_root_bound({1, 2, 0}), 5);
  auto g = gaussian_kernel(1.0);
  for (std::uint64_t r = 0; r < 1000; ++r) {
    RngStream rng({51, r});
    const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
    auto c = fixed_config({std::min(a, b), std::max(a, b)}, {-40, 40});
    const int n = oracle::dense_sign_changes(
        [&](double x) { return g(1, x - c.points[0]) + g(1, x - c.points[1]); }, -12, 12, 24000);
    EXPECT_LE(n, exp_poly_extrema_bound(2));
  }
}

TEST(Crossings, CurveBasics) {
  auto g = gaussian_kernel(1.0);
  McOptions mc;
  mc.replications = 400;
  auto curve = mc_crossing_curve(1.0, g, ImpulseSpec::one(), {-1.0, 0.5, 1.0, 50.0}, {0, 10}, mc);
  EXPECT_EQ(curve.mean[3], 0.0);
  EXPECT_EQ(curve.mean[0], 0.0);
  EXPECT_GT(curve.mean[2], 0.0);
  EXPECT_GT(curve.se[2], 0.0);
  EXPECT_NEAR(curve.up_mean[2] + curve.down_mean[2], curve.mean[2], 1e-12);

  CurveOptions opt;
  opt.conditioning = Conditioning{1.0, 4};
  auto cond = mc_crossing_curve(1.0, g, ImpulseSpec::one(), {1.0}, {-1, 1}, mc, opt);
  EXPECT_GT(cond.mean[0], 0.0);
  opt.conditioning = Conditioning{1.0, 60};
  EXPECT_THROW((void)mc_crossing_curve(1.0, g, ImpulseSpec::one(), {1.0}, {-1, 1}, mc, opt), InfeasibleError);
}

TEST(Crossings, CurveCoArea) {
  auto g = gaussian_kernel(1.0);
  McOptions mc;
  mc.replications = 1000;
  std::vector<double> levels;
  for (int i = 0; i <= 1600; ++i) levels.push_back(-0.5 + 0.005 * i);
  auto curve = mc_crossing_curve(2.0, g, ImpulseSpec::one(), levels, {0, 5}, mc);
  ASSERT_LT(curve.max_abs_level, levels.back());
  EXPECT_NEAR(integrate_over_levels(levels, curve.mean), curve.total_variation.value,
              2.0 * curve.total_variation.se);
}
