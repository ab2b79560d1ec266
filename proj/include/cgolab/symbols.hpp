#pragma once

#include "cgolab/exponent.hpp"
#include "cgolab/grid.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgolab {

/// Nonzero vector nu in R^n.
class NuVector {
 public:
  NuVector() = default;
  NuVector(int n, std::array<double, 3> c) : n_(n), c_(c) {
    if (n < 1 || n > 3) throw std::invalid_argument("nu: dimension must be 1, 2 or 3");
    for (int a = n; a < 3; ++a) c_[a] = 0.0;
    if (norm() == 0.0) throw std::invalid_argument("nu: must be nonzero");
  }
  /// |nu| e_axis (axis 0-based).
  static NuVector along(int n, int axis, double magnitude) {
    std::array<double, 3> c{0.0, 0.0, 0.0};
    c[static_cast<std::size_t>(axis)] = magnitude;
    return NuVector(n, c);
  }
  /// Default direction used throughout: the last axis, nu = |nu| e_n.
  static NuVector last_axis(int n, double magnitude) { return along(n, n - 1, magnitude); }

  int dim() const { return n_; }
  double operator[](int a) const { return c_[static_cast<std::size_t>(a)]; }
  const std::array<double, 3>& components() const { return c_; }
  double norm() const { return std::sqrt(c_[0] * c_[0] + c_[1] * c_[1] + c_[2] * c_[2]); }
  std::array<double, 3> unit() const {
    const double m = norm();
    return {c_[0] / m, c_[1] / m, c_[2] / m};
  }
  /// Axis index when nu is parallel to a coordinate axis, -1 otherwise.
  int aligned_axis() const {
    int axis = -1;
    for (int a = 0; a < n_; ++a) {
      if (c_[a] != 0.0) {
        if (axis >= 0) return -1;
        axis = a;
      }
    }
    return axis;
  }
  /// Axis with the largest |component|.
  int dominant_axis() const {
    int best = 0;
    for (int a = 1; a < n_; ++a)
      if (std::abs(c_[a]) > std::abs(c_[best])) best = a;
    return best;
  }
  double dot(const double* xi) const {
    double s = 0.0;
    for (int a = 0; a < n_; ++a) s += c_[a] * xi[a];
    return s;
  }
  NuVector operator-() const { return NuVector(n_, {-c_[0], -c_[1], -c_[2]}); }

 private:
  int n_ = 1;
  std::array<double, 3> c_{1.0, 0.0, 0.0};
};

inline double norm_sq(const double* xi, int n) {
  double s = 0.0;
  for (int a = 0; a < n; ++a) s += xi[a] * xi[a];
  return s;
}

/// p(tau, xi) = tau - |xi|^2 + i xi_n.
inline cplx eval_p(double tau, const double* xi, int n) {
  return {tau - norm_sq(xi, n), xi[n - 1]};
}

/// p_nu(tau, xi) = -tau - |xi|^2 + 2 i nu . xi.
inline cplx eval_p_nu(double tau, const double* xi, const NuVector& nu) {
  return {-tau - norm_sq(xi, nu.dim()), 2.0 * nu.dot(xi)};
}

/// Mixed-norm pair (q, r) in dimension n.
struct ExponentPair {
  Exponent q;
  Exponent r;
  int n = 1;
  bool dual = false;
};

struct Admissibility {
  bool admissible = false;
  bool endpoint = false;
  std::string reason;
  ExponentPair dual;
};

/// Decides 2 - 2/q = n/r - n/2 with (q, r) in [1,2]^2, (n,q,r) != (2,2,1), in exact arithmetic.
inline Admissibility check_admissible(const Exponent& q, const Exponent& r, int n) {
  Admissibility out;
  out.dual = {q.conjugate(), r.conjugate(), n, true};
  const Rational half(1, 2);
  if (q.recip() < half || r.recip() < half) {
    out.reason = "exponents must lie in [1,2]";
    return out;
  }
  if (Rational(2) - 2 * q.recip() != n * r.recip() - Rational(n, 2)) {
    out.reason = "2 - 2/q != n/r - n/2";
    return out;
  }
  if (n == 2 && q == Exponent(2) && r == Exponent(1)) {
    out.reason = "excluded triple (n,q,r) = (2,2,1)";
    return out;
  }
  out.admissible = true;
  out.endpoint = n >= 3 && q == Exponent(2) && r == Exponent(2 * n, n + 2);
  out.reason = out.endpoint ? "admissible endpoint" : "admissible";
  return out;
}

/// 2/q' = n/2 - n/r' in exact arithmetic.
inline bool satisfies_dual_relation(const Exponent& qd, const Exponent& rd, int n) {
  return 2 * qd.recip() == Rational(n, 2) - n * rd.recip();
}

struct PotentialPairVerdict {
  bool admissible = false;
  bool endpoint = false;
  std::string reason;
  /// Linked Strichartz pair: 1/q - 1/q' = 1/a, 1/r - 1/r' = 1/b.
  ExponentPair linked;
};

/// Decides 2 - 2/a = n/b with (n,a,b) != (2,inf,1).
inline PotentialPairVerdict potential_pair_check(const Exponent& a, const Exponent& b, int n) {
  PotentialPairVerdict out;
  const Rational one(1), two(2);
  out.linked = {Exponent::from_recip((one + a.recip()) / two), Exponent::from_recip((one + b.recip()) / two),
                n, false};
  if (two - 2 * a.recip() != n * b.recip()) {
    out.reason = "2 - 2/a != n/b";
    return out;
  }
  if (n == 2 && a.is_infinite() && b == Exponent(1)) {
    out.reason = "excluded triple (n,a,b) = (2,inf,1)";
    return out;
  }
  out.admissible = true;
  out.endpoint = a.is_infinite() && b == Exponent(n, 2);
  out.reason = out.endpoint ? "admissible endpoint" : "admissible";
  return out;
}

/// The change of variables sigma = -4|nu|^2 tau, eta = 2|nu| Q xi with nu = |nu| Q e_n.
class ScalingMap {
 public:
  explicit ScalingMap(const NuVector& nu) : nu_(nu) {
    const int n = nu.dim();
    for (auto& row : Q_) row.fill(0.0);
    const int axis = nu.aligned_axis();
    if (axis >= 0) {
      // Signed permutation: e_n -> sign * e_axis, e_axis -> e_n (swap), others fixed.
      const double sign = nu[axis] > 0 ? 1.0 : -1.0;
      for (int a = 0; a < n; ++a) Q_[a][a] = 1.0;
      if (axis == n - 1) {
        Q_[n - 1][n - 1] = sign;
      } else {
        Q_[axis][axis] = 0.0;
        Q_[n - 1][n - 1] = 0.0;
        Q_[axis][n - 1] = sign;
        Q_[n - 1][axis] = 1.0;
      }
    } else {
      // Householder reflection H = I - 2 v v^T / v^T v with v = e_n - nu_hat, so H e_n = nu_hat.
      const auto u = nu.unit();
      std::array<double, 3> v{-u[0], -u[1], -u[2]};
      v[static_cast<std::size_t>(n - 1)] += 1.0;
      double vv = 0.0;
      for (int a = 0; a < n; ++a) vv += v[a] * v[a];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Q_[i][j] = (i == j ? 1.0 : 0.0) - 2.0 * v[i] * v[j] / vv;
    }
  }

  const NuVector& nu() const { return nu_; }
  double Q(int i, int j) const { return Q_[i][j]; }

  std::array<double, 3> apply_Q(const double* xi) const {
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (int i = 0; i < nu_.dim(); ++i)
      for (int j = 0; j < nu_.dim(); ++j) out[i] += Q_[i][j] * xi[j];
    return out;
  }
  std::array<double, 3> apply_QT(const double* y) const {
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (int i = 0; i < nu_.dim(); ++i)
      for (int j = 0; j < nu_.dim(); ++j) out[i] += Q_[j][i] * y[j];
    return out;
  }
  double sigma(double tau) const { return -4.0 * nu_.norm() * nu_.norm() * tau; }
  std::array<double, 3> eta(const double* xi) const {
    auto q = apply_Q(xi);
    for (auto& c : q) c *= 2.0 * nu_.norm();
    return q;
  }

 private:
  NuVector nu_;
  std::array<std::array<double, 3>, 3> Q_{};
};

}  // namespace cgolab
