#include "cgolab/birman_schwinger.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <random>

using namespace cgolab;

namespace {

using Mat = Eigen::MatrixXcd;

// Dense S_nu on the (offset) lattice from explicit exponential matrices:
// S = E diag(1/p_nu) E^* / N with E[x][k] = e^{i (k + off).x}.
Mat dense_S_nu(const GridSpec& g, const NuVector& nu) {
  const FreqOffset off = default_offset_S_nu(g, nu);
  const std::size_t N = g.size();
  std::vector<std::array<double, 4>> modes, pts;
  Eigen::VectorXcd inv(N);
  for (int kt = 0; kt < g.pts_time; ++kt) {
    const double tau = g.time_axis().freq(kt) + off.tau;
    for (std::size_t s = 0; s < g.spatial_size(); ++s) {
      std::array<double, 4> m{tau, 0, 0, 0};
      std::size_t rem = s;
      for (int a = g.n - 1; a >= 0; --a) {
        const int k = static_cast<int>(rem % g.pts_space);
        rem /= g.pts_space;
        m[a + 1] = g.space_axis().freq(k) + off.xi[a];
      }
      inv(static_cast<Eigen::Index>(modes.size())) = 1.0 / eval_p_nu(tau, &m[1], nu);
      modes.push_back(m);
    }
  }
  for_each_point(g, [&](std::size_t, double t, const double* x) {
    std::array<double, 4> p{t, 0, 0, 0};
    for (int a = 0; a < g.n; ++a) p[a + 1] = x[a];
    pts.push_back(p);
  });
  Mat E(N, N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < N; ++k) {
      double ph = 0.0;
      for (int a = 0; a <= g.n; ++a) ph += modes[k][a] * pts[i][a];
      E(i, k) = std::polar(1.0, ph);
    }
  return E * inv.asDiagonal() * E.adjoint() / static_cast<double>(N);
}

Mat diag(const Field& W) {
  Mat D = Mat::Zero(W.size(), W.size());
  for (std::size_t i = 0; i < W.size(); ++i) D(i, i) = W[i];
  return D;
}

Eigen::VectorXcd vec(const Field& f) {
  Eigen::VectorXcd v(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) v(i) = f[i];
  return v;
}

Field gaussian_V(const GridSpec& g, double amp, double tw) {
  return sample(g, [&](double t, const double* x) {
    if (std::abs(t) > tw) return cplx(0.0);
    double r2 = 0.0;
    for (int a = 0; a < g.n; ++a) r2 += x[a] * x[a];
    return cplx(amp * std::pow(std::cos(pi * t / (2 * tw)), 2) * std::exp(-r2));
  });
}

Field random_field(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  Field f(g);
  for (auto& z : f.data) z = {N(rng), N(rng)};
  return f;
}

}  // namespace

TEST(BirmanSchwinger, BuildWFactorization) {
  const GridSpec g{2, 2.0, 2.0, 8, 8};
  EXPECT_EQ(l2(build_W(Field(g))), 0.0);
  Field V(g);
  V[5] = -4.0;
  V[6] = cplx(0.0, 9.0);
  const Field W = build_W(V);
  EXPECT_EQ(W[5], cplx(-2.0, 0.0));
  EXPECT_NEAR(std::abs(W[6] - cplx(0.0, 3.0)), 0.0, 1e-15);
  EXPECT_EQ(W[0], cplx(0.0));
  const Field R = random_field(g, 3);
  const Field WR = build_W(R);
  double vmax = 0.0, err = 0.0;
  for (std::size_t i = 0; i < R.size(); ++i) {
    vmax = std::max(vmax, std::abs(R[i]));
    err = std::max(err, std::abs(std::abs(WR[i]) * WR[i] - R[i]));
  }
  EXPECT_LE(err, 1e-12 * vmax);
  const Field W2 = pointwise(modulus(WR), modulus(WR));
  for (auto [a, b] : {std::pair{Exponent(2), Exponent(2)}, std::pair{Exponent::infinity(), Exponent(1)}}) {
    const double n1 = mixed_norm(W2, a, b), n2 = mixed_norm(R, a, b);
    EXPECT_NEAR(n1, n2, 1e-12 * n2);
  }
}

TEST(BirmanSchwinger, TimeModulusBound) {
  for (int n : {2, 3}) {
    const GridSpec g{n, 2.0, 3.0, 8, 16};
    std::mt19937_64 rng(7 + n);
    std::normal_distribution<double> N;
    const Field V = sample(g, [&](double t, const double* x) {
      double r2 = 0.0;
      for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
      return cplx(N(rng), N(rng)) * std::exp(-r2 / 2) * (1.0 + t * t);
    });
    const Field W = build_W(V);
    for (int t = 0; t < g.pts_time; ++t)
      for (int s = 0; s < t; ++s) {
        const SpatialField dW = time_slice(W, t) - time_slice(W, s);
        const SpatialField dV = time_slice(V, t) - time_slice(V, s);
        EXPECT_LE(lebesgue_norm(dW, Exponent(n)), 3 * std::sqrt(lebesgue_norm(dV, Exponent(n, 2))) + 1e-14);
      }
  }
}

TEST(BirmanSchwinger, ApplyTrivialCases) {
  const GridSpec g{2, 4.0, 4.0, 8, 8};
  const NuVector nu = NuVector::last_axis(2, 4.0);
  const Field v = random_field(g, 1);
  EXPECT_EQ(l2(apply_BS(v, Field(g), build_W(gaussian_V(g, 1.0, 2.0)), nu)), 0.0);
  // Constant weights commute with the multiplier: single mode scaled by c1 c2 / p_nu.
  Field c1(g), c2(g);
  for (auto& z : c1.data) z = cplx(0.5, 1.0);
  for (auto& z : c2.data) z = -3.0;
  const FreqOffset off = default_offset_S_nu(g, nu);
  const double tau = 2 * g.time_axis().dfreq();
  const double xi[2] = {g.space_axis().dfreq(), off.xi[1] - 2 * g.space_axis().dfreq()};
  const Field mode = sample(g, [&](double t, const double* x) { return std::polar(1.0, tau * t + xi[0] * x[0] + xi[1] * x[1]); });
  const Field expect = scaled(mode, cplx(0.5, 1.0) * -3.0 / eval_p_nu(tau, xi, nu));
  EXPECT_LT(l2(apply_BS(mode, c1, c2, nu) - expect) / l2(expect), 1e-12);
}

TEST(BirmanSchwinger, ApplyMatchesDenseComposition) {
  const GridSpec g{2, 3.0, 3.0, 8, 8};
  const NuVector nu = NuVector::last_axis(2, 2.0);
  const Field W1 = build_W(gaussian_V(g, -2.0, 2.0));
  const Field W2 = modulus(W1);
  const Mat A = diag(W1) * dense_S_nu(g, nu) * diag(W2);
  for (std::uint64_t seed : {1u, 2u}) {
    const Field v = random_field(g, seed);
    const Eigen::VectorXcd ref = A * vec(v);
    const Eigen::VectorXcd got = vec(apply_BS(v, W1, W2, nu));
    EXPECT_LT((got - ref).norm() / ref.norm(), 1e-10);
  }
}

TEST(BirmanSchwinger, OpNormMatchesDenseSvd) {
  struct Case {
    GridSpec g;
    double nu;
  };
  for (const auto& c : {Case{{1, 3.0, 3.0, 16, 16}, 2.0}, Case{{2, 3.0, 3.0, 8, 8}, 3.0}}) {
    const NuVector nu = NuVector::last_axis(c.g.n, c.nu);
    const Field W = build_W(gaussian_V(c.g, -3.0, 2.0));
    const Mat A = diag(W) * dense_S_nu(c.g, nu) * diag(modulus(W));
    const double sv = std::sqrt(Eigen::SelfAdjointEigenSolver<Mat>(A.adjoint() * A, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff());
    const auto r = op_norm(W, modulus(W), nu, 1e-12, 1000);
    EXPECT_NEAR(r.estimate, sv, 0.01 * sv) << "n=" << c.g.n;
    EXPECT_TRUE(r.starts_agree);
  }
}

TEST(BirmanSchwinger, OpNormDominatesRayleighAndAdjointAgrees) {
  const GridSpec g{2, 4.0, 4.0, 16, 16};
  const NuVector nu = NuVector::last_axis(2, 4.0);
  const Field W1 = build_W(gaussian_V(g, cplx(-2.0, 1.0).real(), 3.0));
  const Field W2 = build_W(gaussian_V(g, 1.5, 3.0));
  const auto r = op_norm(W1, W2, nu, 1e-12, 2000);
  ASSERT_TRUE(r.converged);
  const BSOperator A(W1, W2, nu);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Field v = random_field(g, 100 + seed);
    EXPECT_LE(l2(A.apply(v)) / l2(v), r.estimate * (1 + 1e-12));
  }
  const auto ra = op_norm_adjoint(W1, W2, nu, 1e-12, 2000);
  EXPECT_NEAR(ra.estimate, r.estimate, 1e-4 * r.estimate);
  EXPECT_EQ(op_norm(Field(g), Field(g), nu).estimate, 0.0);
}

TEST(BirmanSchwinger, NormDecaysWithNu) {
  const GridSpec g{2, 4.0, 8.0, 16, 32};
  const Field W = build_W(gaussian_V(g, -4.0, 2.0));
  const double n4 = op_norm(W, modulus(W), NuVector::last_axis(2, 4.0)).estimate;
  const double n64 = op_norm(W, modulus(W), NuVector::last_axis(2, 64.0)).estimate;
  EXPECT_LE(n64, 0.5 * n4);
}

TEST(BirmanSchwinger, SplitW) {
  const GridSpec g{2, 2.0, 4.0, 8, 16};
  const Field W = build_W(random_field(g, 9));
  const double R = 1.5 * g.dx();  // half-integer multiple: the planes |s| <= R span exactly 2R
  auto s = split_W(W, std::numeric_limits<double>::infinity(), R);
  EXPECT_EQ(l2(s.flat), 0.0);
  EXPECT_EQ(l2(s.sharp - W), 0.0);
  s = split_W(W, 0.0, R);
  for_each_point(g, [&](std::size_t i, double, const double* x) {
    const bool outside = x[0] * x[0] + x[1] * x[1] > R * R;
    EXPECT_EQ(s.sharp[i], outside ? W[i] : cplx(0.0));
  });
  for (double lambda : {0.3, 0.8, 1.2}) {
    s = split_W(W, lambda, R);
    EXPECT_EQ(l2(s.sharp + s.flat - W), 0.0);
    for (int axis = 0; axis < 2; ++axis)
      EXPECT_LE(line_sup_norm(s.sharp, axis), split_sharp_bound(W, lambda, R, axis) * (1 + 1e-12));
  }
  EXPECT_THROW(split_W(W, -1.0, R), std::invalid_argument);
}

TEST(BirmanSchwinger, SandwichHolder) {
  // ||W u||_{q,r} <= || |W|^2 ||_{a,b}^{1/2} ||u||_2 with the linked pair.
  struct Case {
    int n;
    Exponent a, b;
  };
  for (const auto& c : {Case{2, Exponent(2), Exponent(2)}, Case{3, Exponent::infinity(), Exponent(3, 2)},
                        Case{1, Exponent(4, 3), Exponent(2)}}) {
    const auto pc = potential_pair_check(c.a, c.b, c.n);
    ASSERT_TRUE(pc.admissible);
    const GridSpec g{c.n, 2.0, 2.0, 8, 8};
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const Field W = random_field(g, seed), u = random_field(g, seed + 50);
      const double lhs = mixed_norm(pointwise(W, u), pc.linked.q, pc.linked.r);
      const double rhs = std::sqrt(mixed_norm(pointwise(modulus(W), modulus(W)), c.a, c.b)) * quad_l2(u);
      EXPECT_LE(lhs, rhs * (1 + 1e-12));
    }
  }
}

TEST(BirmanSchwinger, DecaySweepReport) {
  Potential P;
  P.V = gaussian_V(GridSpec{2, 4.0, 8.0, 16, 32}, -4.0, 2.0);
  P.t_lo = -2.0;
  P.t_hi = 2.0;
  P.R = 3.0;
  validate(P);
  EXPECT_EQ(bs_decay_sweep(P, {}).verdict, "vacuous-pass");
  const auto rep = bs_decay_sweep(P, {4, 16, 64});
  EXPECT_EQ(rep.rows.size(), 3u);
  EXPECT_TRUE(rep.pass);
  EXPECT_LE(rep.statistic, 0.5);
  EXPECT_EQ(rep.rows[2].params.at("lambda").get<double>(), std::pow(64.0, 0.25));
}

TEST(BirmanSchwinger, PotentialValidationAndDiagnostics) {
  const GridSpec g{2, 4.0, 8.0, 16, 32};
  Potential P;
  P.V = gaussian_V(g, 1.0, 2.0);
  P.t_lo = -1.0;
  P.t_hi = 1.0;
  EXPECT_THROW(validate(P), std::invalid_argument);
  P.t_lo = -2.0;
  P.t_hi = 2.0;
  P.a = Exponent::infinity();
  P.b = Exponent(1);
  EXPECT_THROW(validate(P), std::invalid_argument);
  P.a = Exponent(2);
  P.b = Exponent(2);
  validate(P);
  P.R = 100.0;
  EXPECT_EQ(decay_diagnostic(P), 0.0);
  P.R = 1.0;
  // Oracle: per plane s, the max of |V| over |x| > R, summed with spacing dx.
  double oracle = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    double sum = 0.0;
    for (int j = 0; j < g.pts_space; ++j) {
      const double s = g.space_axis().coord(j);
      double m = 0.0;
      for (int k = 0; k < g.pts_space; ++k) {
        const double o = g.space_axis().coord(k);
        if (s * s + o * o > 1.0) m = std::max(m, std::exp(-(s * s + o * o)));
      }
      sum += m;
    }
    oracle = std::max(oracle, sum * g.dx());
  }
  EXPECT_NEAR(decay_diagnostic(P), oracle, 1e-12);
}

TEST(BirmanSchwinger, TimePartitionApproximant) {
  const GridSpec g{2, 4.0, 4.0, 32, 8};
  const Field steady = sample(g, [&](double t, const double* x) {
    return std::abs(t) <= 2.0 ? cplx(std::exp(-x[0] * x[0] - x[1] * x[1])) : cplx(0.0);
  });
  const auto tp = time_partition_for(steady, -2.0, 2.0, 1e-12);
  EXPECT_EQ(tp.m, 1);
  EXPECT_LE(tp.error, 1e-12);
  const Field W = build_W(gaussian_V(g, -1.0, 2.0));
  auto err = [&](int m) {
    return mixed_norm(W - piecewise_constant_in_time(W, -2.0, 2.0, m), Exponent::infinity(), Exponent(2));
  };
  const double e1 = err(1), e16 = err(16);
  EXPECT_LT(e16, 0.25 * e1);
  const double prev = e16;
  const auto t2 = time_partition_for(W, -2.0, 2.0, 0.5 * prev);
  EXPECT_LE(t2.error, 0.5 * prev);
  EXPECT_GE(t2.m, 16);
}
