#include <gtest/gtest.h>

#include <cmath>
#include <shotnoise/kernels.hpp>

#include "oracles.hpp"

using namespace shotnoise;

namespace {

// Regression goldens from an independent 30-digit quadrature (Gaussian, sigma = 1).
constexpr double kM20 = 0.28209479177387814;
constexpr double kM02 = 0.14104739588693907;
constexpr double kM30 = 0.091888149236965342;
constexpr double kM03 = 0.028219393748551542;
constexpr double kM12 = 0.030629383078988447;
constexpr double kM22 = 0.0079367044917801212;
constexpr double kM4 = 0.21157109383040861;

}  // namespace

TEST(Kernels, GaussianPointValues) {
  auto g = gaussian_kernel(1.0);
  EXPECT_EQ(eval_derivative(g, 1, 0.0), 0.0);
  EXPECT_NEAR(eval_derivative(g, 0, 0.0), 0.3989422804014327, 1e-15);
  EXPECT_NEAR(eval_derivative(g, 2, 0.0), -0.3989422804014327, 1e-15);
}

TEST(Kernels, GaussianMatchesClosedFormDerivatives) {
  for (double sigma : {0.3, 1.0, 2.5}) {
    auto g = gaussian_kernel(sigma);
    for (double t = -4.0 * sigma; t <= 4.0 * sigma; t += 0.37 * sigma)
      for (int k = 0; k <= 4; ++k) {
        const double ref = oracle::gaussian_derivative(k, sigma, t);
        EXPECT_NEAR(g(k, t), ref, 1e-13 * std::max(1.0, std::abs(ref))) << "k=" << k << " t=" << t;
      }
  }
}

TEST(Kernels, HermiteRecurrence) {
  for (double x = -3.0; x <= 3.0; x += 0.25) {
    EXPECT_DOUBLE_EQ(hermite(1, x), x);
    EXPECT_DOUBLE_EQ(hermite(2, x), x * x - 1.0);
    EXPECT_NEAR(hermite(3, x), x * x * x - 3.0 * x, 1e-12);
    EXPECT_NEAR(hermite(4, x), x * x * x * x - 6.0 * x * x + 3.0, 1e-12);
    for (int k = 1; k < 4; ++k)
      EXPECT_NEAR(hermite(k + 1, x), x * hermite(k, x) - k * hermite(k - 1, x), 1e-12);
  }
}

TEST(Kernels, FiniteDifferenceConsistency) {
  for (auto g : {gaussian_kernel(1.0), gaussian_kernel(0.5), sech_kernel(1.0), sech_kernel(0.7)}) {
    for (double h : {1e-2, 5e-3}) {
      for (double t = -3.0; t <= 3.0; t += 0.41)
        for (int k = 1; k <= 4; ++k) {
          const double fd = (g(k - 1, t + h) - g(k - 1, t - h)) / (2 * h);
          const double c = 20.0 / std::pow(g.scale(), k + 3);
          EXPECT_LE(std::abs(fd - g(k, t)), c * h * h) << g.id() << " k=" << k << " t=" << t;
        }
    }
  }
}

TEST(Kernels, UnitMassAndL1Norms) {
  for (auto g : {gaussian_kernel(1.0), gaussian_kernel(3.0), sech_kernel(1.0)}) {
    auto r = integrate_adaptive([&](double s) { return g(0, s); }, -200.0, 200.0, 1e-14);
    EXPECT_NEAR(r.value, 1.0, 1e-10) << g.id();
    for (int k = 0; k <= 4; ++k) {
      const double l1 = g.l1_norm(k);
      const double ref = oracle::l1_norm_numeric(g, k);
      EXPECT_NEAR(l1, ref, 1e-9 * std::max(1.0, ref)) << g.id() << " k=" << k;
    }
  }
}

TEST(Kernels, TailsMatchQuadrature) {
  for (auto g : {gaussian_kernel(1.0), sech_kernel(1.0)})
    for (int k = 0; k <= 4; ++k)
      for (double T : {0.5, 1.0, 2.0, 4.0}) {
        const double ref = oracle::tail_numeric(g, k, T);
        EXPECT_NEAR(g.tail(k, T), ref, 1e-10) << g.id() << " k=" << k << " T=" << T;
      }
}

TEST(Kernels, UnsupportedOrderIsCapabilityError) {
  auto g = gaussian_kernel(1.0);
  EXPECT_THROW(eval_derivative(g, 5, 0.0), CapabilityError);
  EXPECT_THROW(eval_derivative(g, -1, 0.0), CapabilityError);
  CustomKernelSpec spec;
  spec.smoothness = 2;
  spec.derivatives[0] = [](double s) { return std::exp(-s * s); };
  spec.derivatives[1] = [](double s) { return -2 * s * std::exp(-s * s); };
  spec.derivatives[2] = [](double s) { return (4 * s * s - 2) * std::exp(-s * s); };
  auto c = custom_kernel(spec);
  EXPECT_THROW(eval_derivative(c, 3, 0.0), CapabilityError);
  EXPECT_THROW(truncation_radius(c, 0, 1.0, 1e-8), CapabilityError);
}

TEST(Kernels, GaussianMomentsClosedForm) {
  auto t = moments(gaussian_kernel(1.0));
  const double sp = std::sqrt(kPi);
  EXPECT_NEAR(t.m0(), 1.0 / (2 * sp), 1e-12);
  EXPECT_NEAR(t.m2(), 1.0 / (4 * sp), 1e-12);
  EXPECT_NEAR(t.m4(), 3.0 / (8 * sp), 1e-12);
  EXPECT_NEAR(std::sqrt(t.m4() / t.m2()) / kPi, std::sqrt(1.5) / kPi, 1e-12);
  EXPECT_EQ(t.m0(), t.at(2, 0));
  EXPECT_EQ(t.m2(), t.at(0, 2));
  EXPECT_LE(t.error(2, 0), 1e-9);
}

TEST(Kernels, GaussianMomentGoldens) {
  auto t = standard_moments(gaussian_kernel(1.0));
  EXPECT_NEAR(t.at(2, 0), kM20, 1e-12);
  EXPECT_NEAR(t.at(0, 2), kM02, 1e-12);
  EXPECT_NEAR(t.at(3, 0), kM30, 1e-12);
  EXPECT_NEAR(t.at(0, 3), kM03, 1e-12);
  EXPECT_NEAR(t.at(1, 2), kM12, 1e-12);
  EXPECT_NEAR(t.at(2, 2), kM22, 1e-12);
  EXPECT_NEAR(t.m4(), kM4, 1e-12);
  for (const auto& [kl, e] : t.entries) EXPECT_GE(e.value, 0.0);
}

TEST(Kernels, GaussianMomentScaling) {
  auto one = moments(gaussian_kernel(1.0), {{3, 0}, {1, 2}});
  for (double sigma : {0.25, 0.7, 3.0}) {
    auto t = moments(gaussian_kernel(sigma), {{3, 0}, {1, 2}});
    EXPECT_NEAR(t.m0(), one.m0() / sigma, 1e-8 * t.m0());
    EXPECT_NEAR(t.m2(), one.m2() / std::pow(sigma, 3), 1e-8 * t.m2());
    EXPECT_NEAR(t.m4(), one.m4() / std::pow(sigma, 5), 1e-8 * t.m4());
    // m_kl(sigma) = sigma^(1-k-2l) m_kl(1)
    EXPECT_NEAR(t.at(3, 0), one.at(3, 0) * std::pow(sigma, -2), 1e-8 * t.at(3, 0));
    EXPECT_NEAR(t.at(1, 2), one.at(1, 2) * std::pow(sigma, -4), 1e-8 * t.at(1, 2));
  }
}

TEST(Kernels, MomentOrdersValidated) {
  EXPECT_THROW(moments(gaussian_kernel(1.0), {{0, 0}}), ParameterError);
  EXPECT_THROW(moments(gaussian_kernel(1.0), {{-1, 2}}), ParameterError);
}

TEST(Kernels, NonIntegrableCustomKernel) {
  CustomKernelSpec spec;
  spec.id = "lorentz-like";
  spec.derivatives[0] = [](double s) { return 1.0 / std::sqrt(1 + s * s); };
  spec.derivatives[1] = [](double s) { return -s / std::pow(1 + s * s, 1.5); };
  spec.derivatives[2] = [](double s) { return (2 * s * s - 1) / std::pow(1 + s * s, 2.5); };
  spec.derivatives[3] = [](double) { return 0.0; };
  spec.derivatives[4] = [](double) { return 0.0; };
  auto c = custom_kernel(spec);
  EXPECT_THROW(moments(c, {{1, 0}}), IntegrabilityError);
}

TEST(Kernels, Covariance) {
  auto g = gaussian_kernel(1.0);
  auto m = moments(g);
  EXPECT_NEAR(covariance(g, 0.0), m.m0(), 1e-12);
  auto g2 = gaussian_kernel(std::sqrt(2.0));
  for (double tau = -3.0; tau <= 3.0; tau += 0.5) {
    EXPECT_NEAR(covariance(g, tau), g2(0, tau), 1e-12) << tau;
    EXPECT_NEAR(covariance(g, tau), covariance(g, -tau), 1e-14);
  }
  auto gs = gaussian_kernel(0.6);
  EXPECT_NEAR(covariance(gs, 0.4), gaussian_kernel(0.6 * std::sqrt(2.0))(0, 0.4), 1e-12);
}

TEST(Kernels, TruncationRadius) {
  auto g = gaussian_kernel(1.0);
  const double T = truncation_radius(g, 0, 1.0, 1e-8);
  EXPECT_GE(T, 5.7);
  EXPECT_LE(T, 6.0);
  EXPECT_LE(g.tail(0, T), 1e-8);
  EXPECT_GT(g.tail(0, T - 0.05), 1e-8);
  EXPECT_EQ(truncation_radius(g, 0, 1.0, 1.0), 0.0);
  EXPECT_EQ(truncation_radius(g, 1, 2.0, 2.0 * g.l1_norm(1)), 0.0);
  double prev = 1e9;
  for (double eps : {1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2}) {
    const double t = truncation_radius(g, 2, 3.0, eps);
    EXPECT_LE(t, prev);
    prev = t;
  }
  EXPECT_THROW(truncation_radius(g, 0, 1.0, 0.0), ParameterError);
}

TEST(Kernels, PhaseParams1d) {
  auto g = gaussian_kernel(1.0);
  auto p = phase_params(g, {-1.0, 2.0}, PhaseMode::level_1d);
  EXPECT_EQ(p.n0, 2);
  EXPECT_GT(p.m, 0.0);
  // brute-force minimum over a dense grid
  double best = 1e9;
  for (int i = 0; i <= 300000; ++i) {
    const double s = -1.0 + 3.0 * i / 300000.0;
    best = std::min(best, std::hypot(g(1, s), g(2, s)));
  }
  EXPECT_NEAR(p.m, best, 1e-9);
  EXPECT_LE(p.m, best + 1e-15);
}

TEST(Kernels, PhaseParamsSinglePoint) {
  auto g = gaussian_kernel(1.0);
  auto p = phase_params(g, {0.3, 0.3}, PhaseMode::level_1d);
  EXPECT_DOUBLE_EQ(p.m, std::hypot(g(1, 0.3), g(2, 0.3)));
  EXPECT_EQ(p.n0, 0);
  auto q = phase_params(g, {1.0, 1.0}, PhaseMode::level_1d);
  EXPECT_EQ(q.n0, 1);
}

TEST(Kernels, PhaseParams2dGaussianIsNondegenerate) {
  auto g = gaussian_kernel(1.0);
  for (double s = -3.0; s <= 3.0; s += 0.1) {
    const double det = g(1, s) * g(3, s) - g(2, s) * g(2, s);
    EXPECT_NEAR(det, -(s * s + 1) * std::exp(-s * s) / (2 * kPi), 1e-14);
    EXPECT_LT(det, 0.0);
  }
  auto p = phase_params(g, {-1.0, 2.0}, PhaseMode::joint_2d);
  EXPECT_EQ(p.n0, 0);
  EXPECT_GT(p.m, 1e-3);
}

TEST(Kernels, PhaseParamsDegeneracy) {
  auto g = gaussian_kernel(1.0);
  EXPECT_THROW(phase_params(g, {40.0, 41.0}, PhaseMode::level_1d), DegeneracyError);
}

TEST(Kernels, KernelSelectors) {
  EXPECT_DOUBLE_EQ(kernel_from_string("gaussian:sigma=2.5").sigma(), 2.5);
  EXPECT_DOUBLE_EQ(kernel_from_string("gaussian:σ=0.5").sigma(), 0.5);
  EXPECT_DOUBLE_EQ(kernel_from_string("sech:s=1").scale(), 1.0);
  EXPECT_THROW(kernel_from_string("cauchy:s=1"), ParameterError);
  EXPECT_THROW(kernel_from_string("gaussian:sigma=abc"), ParameterError);
  EXPECT_THROW(kernel_from_string("gaussian:sigma=-1"), ParameterError);
  EXPECT_THROW((void)sech_kernel(1.0).sigma(), CapabilityError);
}
