// Sample one path, count its crossings and extrema, and compare the per-level
// Monte Carlo rate with Rice's formula for the Gaussian limit.

#include <cstdio>

#include <shotnoise/crossings.hpp>
#include <shotnoise/spectral.hpp>

using namespace shotnoise;

int main() {
  const double lambda = 5.0;
  const auto g = gaussian_kernel(1.0);
  RngStream rng(SeedInfo{7, 0});
  const Interval iv{0.0, 50.0};
  const double T = truncation_radius(g, 2, lambda, 1e-8);
  auto cfg = sample_ppp(lambda, iv.expanded(T), ImpulseSpec::one(), rng);
  std::printf("%zu points on [%.2f, %.2f]\n", cfg.size(), cfg.window.lo, cfg.window.hi);

  const auto path = evaluate_path(cfg, g, iv, 0.05, 2);
  const auto ex = count_extrema(path);
  std::printf("extrema on [0,50]: %d maxima, %d minima\n", ex.maxima, ex.minima);
  for (double a : {4.0, 5.0, 6.0}) {
    const auto c = count_crossings(path, a);
    std::printf("level %.1f: %d up, %d down, Kac(0.01) = %.3f\n", a, c.up, c.down, kac_estimate(path, a, 0.01));
  }
  std::printf("total variation %.4f\n", total_variation(path));

  McOptions mc;
  mc.replications = 400;
  const auto m = moments(g);
  const GaussianLimit lim{lambda * m.m0(), lambda * m.m2(), 0.0};
  const double mean = lambda * g.integral(0);
  std::vector<double> levels;
  for (double k : {-2.0, -1.0, 0.0, 1.0, 2.0}) levels.push_back(mean + k * std::sqrt(lim.m0));
  const auto curve = mc_crossing_curve(lambda, g, ImpulseSpec::one(), levels, {0.0, 10.0}, mc);
  std::printf("\n alpha   C_mc/L    se       Rice\n");
  for (std::size_t i = 0; i < levels.size(); ++i)
    std::printf("%6.2f  %7.4f  %7.4f  %7.4f\n", levels[i], curve.rate(i), curve.rate_se(i),
                rice_gaussian(lim, levels[i] - mean));
}
