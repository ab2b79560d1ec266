#include "cgolab/symbols.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cgolab;

TEST(Symbols, EvalP) {
  const double z[3] = {0, 0, 0};
  EXPECT_EQ(eval_p(0.0, z, 2), cplx(0.0));
  EXPECT_EQ(eval_p(1.0, z, 3), cplx(1.0));
  const double xi[2] = {1, 1};
  EXPECT_EQ(eval_p(2.0, xi, 2), cplx(0.0, 1.0));
}

TEST(Symbols, EvalPNu) {
  const double z[3] = {0, 0, 0};
  const auto nu = NuVector(3, {0.3, -2.0, 1.0});
  EXPECT_EQ(eval_p_nu(0.0, z, nu), cplx(0.0));
  EXPECT_EQ(eval_p_nu(-1.0, z, nu), cplx(1.0));
}

TEST(Symbols, NuRejectsZero) { EXPECT_THROW(NuVector(2, {0.0, 0.0, 0.0}), std::invalid_argument); }

TEST(Symbols, ScalingIdentityRandom) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-5, 5);
  std::uniform_int_distribution<int> D(1, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = D(rng);
    std::array<double, 3> c{U(rng), U(rng), U(rng)};
    if (trial % 4 == 0) c = {0, 0, 0}, c[static_cast<std::size_t>(trial % n)] = U(rng) + 10;
    const NuVector nu(n, c);
    const ScalingMap S(nu);
    double xi[3] = {U(rng), U(rng), U(rng)};
    const double tau = U(rng);
    const auto eta = S.eta(xi);
    const cplx lhs = eval_p_nu(S.sigma(tau), eta.data(), nu);
    const cplx rhs = 4 * nu.norm() * nu.norm() * eval_p(tau, xi, n);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Symbols, ScalingMapIsOrthogonalAndMapsEn) {
  for (auto nu : {NuVector::along(3, 0, -2.0), NuVector::along(2, 1, 5.0), NuVector(3, {1, 2, -3}), NuVector(2, {-1, 0.5})}) {
    const ScalingMap S(nu);
    const int n = nu.dim();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += S.Q(k, i) * S.Q(k, j);
        EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-12);
      }
    double en[3] = {0, 0, 0};
    en[n - 1] = 1.0;
    const auto img = S.apply_Q(en);
    for (int a = 0; a < n; ++a) EXPECT_NEAR(nu.norm() * img[a], nu[a], 1e-12);
  }
}

TEST(Symbols, NegatingNuConjugates) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-4, 4);
  for (int trial = 0; trial < 1000; ++trial) {
    const NuVector nu(3, {U(rng), U(rng), U(rng)});
    double xi[3] = {U(rng), U(rng), U(rng)};
    const double tau = U(rng);
    EXPECT_EQ(eval_p_nu(tau, xi, -nu), std::conj(eval_p_nu(tau, xi, nu)));
  }
}

TEST(Symbols, AdmissibleEndpointN3) {
  const auto v = check_admissible(Exponent(2), Exponent(6, 5), 3);
  EXPECT_TRUE(v.admissible);
  EXPECT_TRUE(v.endpoint);
  EXPECT_EQ(v.dual.q.str(), "2");
  EXPECT_EQ(v.dual.r.str(), "6");
}

TEST(Symbols, ExcludedTriple) { EXPECT_FALSE(check_admissible(Exponent(2), Exponent(1), 2).admissible); }

TEST(Symbols, AdmissibleN2OneTwo) {
  const auto v = check_admissible(Exponent(1), Exponent(2), 2);
  EXPECT_TRUE(v.admissible);
  EXPECT_FALSE(v.endpoint);
  EXPECT_TRUE(v.dual.q.is_infinite());
  EXPECT_EQ(v.dual.r, Exponent(2));
}

TEST(Symbols, DualRelationHoldsForAllAdmissible) {
  int count = 0;
  for (int n = 1; n <= 3; ++n)
    for (long long a = 1; a <= 12; ++a)
      for (long long b = a; b <= 2 * a; ++b)
        for (long long c = 1; c <= 12; ++c)
          for (long long d = c; d <= 2 * c; ++d) {
            const Exponent q(b, a), r(d, c);
            const auto v = check_admissible(q, r, n);
            if (!v.admissible) continue;
            ++count;
            EXPECT_TRUE(satisfies_dual_relation(v.dual.q, v.dual.r, n));
          }
  EXPECT_GT(count, 10);
}

TEST(Symbols, RejectsOutsideUnitSquare) {
  EXPECT_FALSE(check_admissible(Exponent(3), Exponent(1), 1).admissible);
  EXPECT_FALSE(check_admissible(Exponent(2), Exponent(3, 2), 3).admissible);
}

TEST(Symbols, PotentialPairs) {
  const auto e = potential_pair_check(Exponent::infinity(), Exponent(3, 2), 3);
  EXPECT_TRUE(e.admissible);
  EXPECT_TRUE(e.endpoint);
  EXPECT_EQ(e.linked.q, Exponent(2));
  EXPECT_EQ(e.linked.r, Exponent(6, 5));
  EXPECT_FALSE(potential_pair_check(Exponent::infinity(), Exponent(1), 2).admissible);
  const auto m = potential_pair_check(Exponent(2), Exponent(2), 2);
  EXPECT_TRUE(m.admissible);
  EXPECT_FALSE(m.endpoint);
  // The linked pair is itself admissible.
  EXPECT_TRUE(check_admissible(m.linked.q, m.linked.r, 2).admissible);
}

TEST(Symbols, ExponentParsing) {
  EXPECT_EQ(Exponent::parse("6/5"), Exponent(6, 5));
  EXPECT_TRUE(Exponent::parse("inf").is_infinite());
  EXPECT_THROW(Exponent::parse("1/2"), std::invalid_argument);
  EXPECT_THROW(Exponent::parse("x"), std::invalid_argument);
  EXPECT_EQ(Exponent(4, 3).conjugate(), Exponent(4));
}
