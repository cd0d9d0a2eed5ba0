// Extrema across Gaussian scales: two equal bumps at distance 2 merge at
// sigma = 1; then the extrema rate of a random configuration as sigma grows.

#include <cstdio>

#include <shotnoise/scalespace.hpp>

using namespace shotnoise;

int main() {
  PointConfiguration two;
  two.window = {-60.0, 60.0};
  two.points = {0.0, 2.0};
  two.impulses = {1.0, 1.0};
  two.intensity = 1.0;
  const auto tr = track_extrema(two, 0.3, 2.0, {-6.0, 8.0});
  std::printf("two bumps: %zu tracks, %d pair birth(s)\n", tr.tracks.size(), tr.pair_births);
  for (const auto& t : tr.tracks)
    if (t.partner > t.id)
      std::printf("  pair %d/%d born near sigma %.4f (refined %.5f)\n", t.id, t.partner, t.birth_sigma,
                  refine_birth_sigma(two, t, tr.tracks[static_cast<std::size_t>(t.partner)], t.birth_sigma * 1.05));

  McOptions mc;
  mc.replications = 30;
  const auto rep = rho_monotonicity_report(1.0, {0.25, 0.5, 1.0, 2.0, 4.0}, mc);
  std::printf("\nlambda = 1, %zu configurations, %zu with monotone counts\n", mc.replications, rep.monotone);
  std::printf(" sigma    rho      se     limit\n");
  for (std::size_t k = 0; k < rep.curve.axis.size(); ++k)
    std::printf("%6.2f  %6.4f  %6.4f  %6.4f\n", rep.curve.axis[k], rep.curve.rho[k], rep.curve.se[k],
                extrema_rate_limit(rep.curve.axis[k]));
}
