#include "cgolab/reconstruction.hpp"

#include <gtest/gtest.h>

using namespace cgolab;

namespace {

using R3 = std::array<Rational, 3>;

PotentialFn gaussian_potential(double eps, double T) {
  return [=](double t, const double* x) {
    const double s = (t - T / 2) / 0.333;
    return cplx(eps * std::exp(-(x[0] * x[0] + x[1] * x[1]) - 0.5 * s * s), 0.0);
  };
}

const SpatialGrid small_grid{2, 4.0, 32};

BornSettings born(double T, int steps) {
  BornSettings b;
  b.T = T;
  b.steps = steps;
  return b;
}

}  // namespace

TEST(Reconstruction, ParametrizationWorkedExample) {
  const auto p = freq_parametrization(Rational(3), R3{Rational(2), Rational(0), Rational(0)}, 2);
  EXPECT_EQ(p.eta[0], Rational(-7, 4));
  EXPECT_EQ(p.eta[1], Rational(0));
  EXPECT_EQ(p.kappa[0], Rational(1, 4));
  EXPECT_EQ(p.eta[0] * p.eta[0] - p.kappa[0] * p.kappa[0], Rational(3));
}

TEST(Reconstruction, ParametrizationIdentitiesAreExact) {
  for (int n : {2, 3})
    for (long a = -3; a <= 3; ++a)
      for (long b = -2; b <= 2; ++b)
        for (long c : {0L, 1L}) {
          const R3 xi{Rational(a, 2), Rational(b), n == 3 ? Rational(c, 3) : Rational(0)};
          if (xi[0] == Rational(0) && xi[1] == Rational(0) && xi[2] == Rational(0)) continue;
          for (const Rational tau : {Rational(0), Rational(7, 3), Rational(-5, 2)}) {
            const auto p = freq_parametrization(tau, xi, n);
            Rational e2(0), k2(0), dot(0);
            for (int i = 0; i < n; ++i) {
              e2 += p.eta[i] * p.eta[i];
              k2 += p.kappa[i] * p.kappa[i];
              dot += p.nu[i] * xi[i];
              EXPECT_EQ(p.kappa[i] - p.eta[i], xi[i]);
            }
            EXPECT_EQ(e2 - k2, tau);
            EXPECT_EQ(dot, Rational(0));
            EXPECT_FALSE(p.nu[0] == Rational(0) && p.nu[1] == Rational(0) && p.nu[2] == Rational(0));
            if (tau == Rational(0)) EXPECT_EQ(e2, k2);
          }
        }
}

TEST(Reconstruction, ParametrizationRejections) {
  EXPECT_THROW(freq_parametrization(1.0, Vec3{0.0, 0.0, 0.0}, 2), std::invalid_argument);
  EXPECT_THROW(freq_parametrization(1.0, Vec3{1.0, 0.0, 0.0}, 1), std::invalid_argument);
  const auto p = freq_parametrization(0.0, Vec3{1.0, -2.0, 0.0}, 2);
  EXPECT_DOUBLE_EQ(p.eta[0], -0.5);
  EXPECT_DOUBLE_EQ(p.kappa[1], -1.0);
}

TEST(Reconstruction, TransformTableMatchesDirectSumAndClosedForm) {
  const double T = 2.0;
  const auto V = gaussian_potential(1.0, T);
  const std::vector<double> taus{0.0, pi};
  const auto table = potential_transform_table(V, small_grid, T, taus);
  const double dk = small_grid.axis().dfreq();
  for (const Vec3 xi : {Vec3{0.0, 0.0, 0.0}, Vec3{dk, -2 * dk, 0.0}, Vec3{-3 * dk, dk, 0.0}})
    for (std::size_t m = 0; m < taus.size(); ++m) {
      const cplx direct = potential_transform(V, small_grid, T, taus[m], xi);
      EXPECT_LT(std::abs(table[m][mode_index(small_grid, xi)] - direct), 1e-12);
      // pi e^{-|xi|^2/4} times the time transform of the Gaussian truncated to (0, T).
      const double x2 = xi[0] * xi[0] + xi[1] * xi[1];
      const auto rule = composite_gauss_legendre(0.0, T, 32, 8);
      cplx tt = 0.0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double s = (rule.nodes[k] - T / 2) / 0.333;
        tt += rule.weights[k] * std::exp(-0.5 * s * s) * std::polar(1.0, -taus[m] * rule.nodes[k]);
      }
      EXPECT_LT(std::abs(direct - pi * std::exp(-x2 / 4) * tt), 1e-6);
    }
}

TEST(Reconstruction, ZeroPotentialGivesZero) {
  const auto P = prepare_potential(nullptr, small_grid, born(1.0, 16));
  const double dk = small_grid.axis().dfreq();
  EXPECT_LT(std::abs(born_sample(P, 2.0, {dk, 0.0, 0.0}).amplitude), 1e-12);
  ReconstructionConfig c;
  c.grid = small_grid;
  c.born = born(1.0, 16);
  c.freq_radius = 2.0;
  c.tau_modes = 1;
  c.time_pts = 4;
  const auto R = reconstruct_potential(nullptr, c);
  EXPECT_LT(l2(R.V_est), 1e-12);
}

TEST(Reconstruction, SingleModeCalibration) {
  const double dk = small_grid.axis().dfreq();
  for (const Vec3 xi0 : {Vec3{2 * dk, dk, 0.0}, Vec3{0.0, -3 * dk, 0.0}}) {
    const cplx c = single_mode_calibration(small_grid, born(1.0, 32), xi0, 0.02);
    EXPECT_LT(std::abs(c - 1.0), 0.1);
  }
}

TEST(Reconstruction, ConjugateSymmetryForRealPotential) {
  const double T = 2.0;
  const auto P = prepare_potential(gaussian_potential(0.02, T), small_grid, born(T, 32));
  const double dk = small_grid.axis().dfreq();
  for (const Vec3 xi : {Vec3{dk, 0.0, 0.0}, Vec3{dk, -2 * dk, 0.0}})
    for (double tau : {0.0, pi, 2 * pi}) {
      const cplx a = born_sample(P, tau, xi).amplitude;
      const cplx b = born_sample(P, -tau, Vec3{-xi[0], -xi[1], 0.0}).amplitude;
      EXPECT_LT(std::abs(a - std::conj(b)), 0.02 * std::abs(a)) << tau;
    }
}

TEST(Reconstruction, BornSampleIsLinearAtLeadingOrder) {
  const double T = 2.0;
  const double dk = small_grid.axis().dfreq();
  const Vec3 xi{dk, dk, 0.0};
  auto s = [&](double eps) {
    return born_sample(prepare_potential(gaussian_potential(eps, T), small_grid, born(T, 32)), pi, xi).amplitude;
  };
  // s(eps) = a eps + b eps^2 + ...: the relative defect |s(2 eps) - 2 s(eps)| / |s(eps)| ~ eps.
  const double d1 = std::abs(s(0.1) - 2.0 * s(0.05)) / std::abs(s(0.05));
  const double d2 = std::abs(s(0.05) - 2.0 * s(0.025)) / std::abs(s(0.025));
  EXPECT_LT(d1, 0.2);
  EXPECT_NEAR(d1 / d2, 2.0, 0.3);
}

TEST(Reconstruction, TimeDependenceRecovered) {
  const double T = 2.0;
  const PotentialFn V = [=](double t, const double* x) {
    const double g = std::sin(pi * t / T);
    return cplx(0.03 * g * g * std::exp(-(x[0] * x[0] + x[1] * x[1])), 0.0);
  };
  const auto P = prepare_potential(V, small_grid, born(T, 32));
  const double dk = small_grid.axis().dfreq();
  const Vec3 xi{dk, 0.0, 0.0};
  const cplx r = born_sample(P, 2 * pi / T, xi).amplitude / born_sample(P, 0.0, xi).amplitude;
  // Time factor sin^2(pi t / T): transform T/2 at tau = 0 and -T/4 at tau = 2 pi / T.
  EXPECT_LT(std::abs(r - (-0.5)), 0.25 * 0.5);
}

TEST(Reconstruction, SynthesisReproducesBandLimitedPotential) {
  const double T = 1.0;
  const double dk = small_grid.axis().dfreq();
  const double meas = T * std::pow(2.0 * small_grid.box, 2);
  std::vector<FreqSample> S(2);
  S[0].xi = {dk, 0.0, 0.0};
  S[1].xi = {-dk, 0.0, 0.0};
  S[0].amplitude = S[1].amplitude = 0.5 * meas;
  const auto F = recon_detail::synthesize(S, small_grid, T, 4);
  double err = 0.0;
  for_each_point(F.spec, [&](std::size_t i, double, const double* x) { err = std::max(err, std::abs(F[i] - std::cos(dk * x[0]))); });
  EXPECT_LT(err, 1e-12);
}

TEST(Reconstruction, GaussianReconstructionImprovesAsEpsShrinks) {
  const double T = 2.0;
  ReconstructionConfig c;
  c.grid = small_grid;
  c.born = born(T, 32);
  c.freq_radius = 3.0;
  double prev = 1e300;
  for (double eps : {0.1, 0.05, 0.025}) {
    const auto V = gaussian_potential(eps, T);
    const auto R = reconstruct_potential(V, c, V);
    EXPECT_TRUE(R.born_regime);
    EXPECT_LT(R.relative_error, 0.2);
    EXPECT_LT(R.relative_error, prev) << eps;
    prev = R.relative_error;
  }
  c.born.born_threshold = 0.01;
  EXPECT_FALSE(reconstruct_potential(gaussian_potential(0.1, T), c).born_regime);
}
