// Mean crossings two ways: through the Fourier transform of the crossings
// function (computed from the joint characteristic function), and by counting.

#include <cstdio>

#include <shotnoise/crossings.hpp>
#include <shotnoise/spectral.hpp>

using namespace shotnoise;

int main(int argc, char** argv) {
  const double lambda = argc > 1 ? std::atof(argv[1]) : 2.0;
  const double L = 10.0;
  const auto g = gaussian_kernel(1.0);
  CharacteristicEngine e(lambda, g, ImpulseSpec::one());
  const double sd = std::sqrt(e.variance());

  const auto curve = crossing_fourier_curve(e, L);
  std::printf("C^(0) = %.6f  (mean total variation on [0,%g])\n", curve.values[curve.size() / 2].real(), L);
  std::printf("inversion truncation estimate %.2e\n", curve.truncation);

  std::vector<double> levels;
  for (int k = -6; k <= 6; ++k) levels.push_back(e.mean() + k * sd * 0.5);
  const auto inv = invert_crossing_curve(curve, levels);

  McOptions mc;
  mc.replications = 2000;
  const auto cur = mc_crossing_curve(lambda, g, ImpulseSpec::one(), levels, {0.0, L}, mc);
  std::printf("\n   alpha   spectral     err       MC       se\n");
  for (std::size_t i = 0; i < levels.size(); ++i)
    std::printf("%8.3f  %8.4f  %8.1e  %8.4f  %7.4f\n", levels[i], inv.value[i], inv.error[i], cur.mean[i], cur.se[i]);
}
