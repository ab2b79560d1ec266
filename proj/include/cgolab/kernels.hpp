#pragma once

#include "cgolab/grid.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgolab {

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class KernelMethod { closed_form, quadrature };

inline const char* to_string(KernelMethod m) {
  return m == KernelMethod::closed_form ? "closed_form" : "quadrature";
}

struct KernelSample {
  cplx value;
  double err_est = 0.0;
  KernelMethod method = KernelMethod::closed_form;
  std::string label;
};

namespace kernel_detail {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

/// Gauss-Kronrod on [a, b], bisected until the Kronrod-Gauss difference is below abs_tol;
/// accumulates the absolute error estimate.
template <class F>
cplx integrate(F&& f, double a, double b, double abs_tol, double& err, int depth = 10) {
  double e = 0.0;
  const cplx v = GK::integrate(f, a, b, 0, 0.0, &e);
  if (e <= abs_tol || depth == 0) {
    err += e;
    return v;
  }
  const double m = 0.5 * (a + b);
  return integrate(f, a, m, 0.5 * abs_tol, err, depth - 1) + integrate(f, m, b, 0.5 * abs_tol, err, depth - 1);
}

}  // namespace kernel_detail

// ---------------------------------------------------------------------------------------------
// K_sigma

/// Closed form of K_sigma(x) = (1/2pi) int e^{-i x eta} / (sigma - eta^2 + i eta) d eta.
/// sigma = 1/4 is filled by the limit -x e^{x/2} 1(x < 0).
inline KernelSample eval_K_sigma(double sigma, double x) {
  if (sigma == 0.0) throw std::invalid_argument("K_sigma: sigma = 0 is excluded");
  KernelSample out;
  out.method = KernelMethod::closed_form;
  const double a = std::sqrt(std::abs(4.0 * sigma - 1.0));
  if (sigma == 0.25) {
    out.label = "limit_quarter";
    out.value = x < 0 ? -x * std::exp(x / 2) : 0.0;
  } else if (sigma > 0.25) {
    out.label = "sin";
    out.value = x < 0 ? -2.0 * std::exp(x / 2) / a * std::sin(a * x / 2) : 0.0;
  } else if (sigma > 0.0) {
    out.label = "sinh";
    // e^{x/2} sinh(a x/2) written without overflow-prone products.
    out.value = x < 0 ? -(std::exp((1 + a) * x / 2) - std::exp((1 - a) * x / 2)) / a : 0.0;
  } else if (x < 0) {
    out.label = "negative_left";
    out.value = -std::exp((1 + a) * x / 2) / a;
  } else {
    out.label = "negative_right";
    out.value = -std::exp(-(a - 1) * x / 2) / a;
  }
  return out;
}

/// Direct quadrature of the defining integral. The slowly decaying parts -1/(1+eta^2),
/// -i eta/(1+eta^2)^2 and -sigma/(1+eta^2)^2 are subtracted and transformed exactly; the
/// O(eta^-5) remainder is integrated on [-L, L], with L doubled until the tail estimate is
/// below tol / 20.
inline KernelSample eval_K_sigma_quadrature(double sigma, double x, double tol = 1e-10) {
  if (sigma == 0.0) throw std::invalid_argument("K_sigma: sigma = 0 is excluded");
  if (!(tol > 0)) throw std::invalid_argument("tol must be positive");
  auto remainder = [&](double eta) {
    const double e2 = eta * eta;
    const double d = 1.0 + e2;
    const cplx h = 1.0 / cplx(sigma - e2, eta);
    return std::polar(1.0, -x * eta) * (h + 1.0 / d + cplx(sigma, eta) / (d * d));
  };
  // Tail beyond L: |r| L / 4 from the eta^-5 decay, or 2 |r| / |x| after one integration by parts
  // when the phase oscillates.
  auto tail = [&](double L) {
    return (std::abs(remainder(L)) + std::abs(remainder(-L))) * std::min(L / 4.0, 2.0 / std::abs(x));
  };
  double L = 32.0 + 4.0 * std::sqrt(std::abs(sigma));
  int doublings = 0;
  while (tail(L) > 0.05 * tol) {
    L *= 2.0;
    if (++doublings > 30) throw NonConvergence("K_sigma quadrature: truncation radius did not converge");
  }
  const double width = std::min(2.0, 12.0 / (1.0 + std::abs(x)));
  const int panels = static_cast<int>(std::ceil(L / width));
  const double ptol = 0.1 * tol / (2.0 * panels);
  double err = 0.0;
  cplx sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double a = k * width, b = std::min(L, (k + 1) * width);
    sum += kernel_detail::integrate(remainder, a, b, ptol, err);
    sum += kernel_detail::integrate(remainder, -b, -a, ptol, err);
  }
  const double ax = std::abs(x);
  const double ex = std::exp(-ax);
  // Exact transforms of the subtracted terms: -pi e^{-|x|}, -(pi/2) x e^{-|x|},
  // -sigma (pi/2)(1+|x|) e^{-|x|}.
  const cplx exact = -pi * ex - 0.5 * pi * x * ex - sigma * 0.5 * pi * (1.0 + ax) * ex;
  KernelSample out;
  out.method = KernelMethod::quadrature;
  out.value = (sum + exact) / (2.0 * pi);
  out.err_est = (err + tail(L)) / (2.0 * pi);
  if (!(out.err_est <= tol)) throw NonConvergence("K_sigma quadrature: error estimate above tolerance");
  out.label = "subtracted_gk";
  return out;
}

// ---------------------------------------------------------------------------------------------
// Oscillatory primitive

/// E(a, b) = int_{-inf}^0 exp(xi + i a xi + i b xi^2) d xi by numerical steepest descent.
/// With A = ib, B = 1 + ia, the descent path from 0 gives
///   L = int_0^inf e^{-tau} / (B sqrt(1 + z tau)) d tau,  z = -4A/B^2,
/// and when the path ends in the valley not containing -inf the Gaussian saddle integral
/// e^{psi*} d sqrt(pi/|b|) is added.
inline cplx descent_integral(double a, double b, double tol = 1e-12, double* err_out = nullptr) {
  const cplx B(1.0, a);
  if (b == 0.0) {
    if (err_out) *err_out = 0.0;
    return 1.0 / B;
  }
  const cplx A(0.0, b);
  cplx z = -4.0 * A / (B * B);
  if (std::abs(z.imag()) <= 1e-14 * std::abs(z) && z.real() < 0) z = cplx(z.real(), +0.0);
  auto g = [&](double u) { return 2.0 * u * std::exp(-u * u) / (B * std::sqrt(1.0 + z * u * u)); };
  const double U = std::sqrt(std::max(30.0, -std::log(tol * 1e-3)));
  double err = 0.0;
  cplx L = 0.0;
  const cplx tc = -1.0 / z;
  double uc = -1.0;
  if (tc.real() > 0 && std::abs(tc.imag()) < 0.5 * tc.real() && std::sqrt(tc.real()) < U)
    uc = std::sqrt(tc.real());
  const double ptol = 0.02 * tol;
  if (uc > 0) {
    // 1 + z u^2 nearly vanishes at uc: u = uc -+ w^2 removes the square-root singularity.
    auto left = [&](double w) { return 2.0 * w * g(uc - w * w); };
    auto right = [&](double w) { return 2.0 * w * g(uc + w * w); };
    L += kernel_detail::integrate(left, 0.0, std::sqrt(uc), ptol, err);
    L += kernel_detail::integrate(right, 0.0, std::sqrt(U - uc), ptol, err);
  } else {
    std::vector<double> br{0.0};
    for (double s = 1.0 / std::sqrt(std::abs(z)); s < U; s *= 4.0)
      if (s > 1e-12) br.push_back(s);
    br.push_back(U);
    std::sort(br.begin(), br.end());
    for (std::size_t i = 0; i + 1 < br.size(); ++i) L += kernel_detail::integrate(g, br[i], br[i + 1], ptol, err);
  }
  const cplx D = B * std::sqrt(z) / A;
  if (D.real() > 0) {
    const cplx psi = (cplx(0.0, 1.0 - a * a) - 2.0 * a) / (4.0 * b);
    const cplx d = std::polar(1.0, b > 0 ? pi / 4 : -pi / 4);
    L += std::exp(psi) * d * std::sqrt(pi / std::abs(b));
  }
  if (err_out) *err_out = err;
  return L;
}

/// K_s(y) = int e^{i y eta} e^{i s eta^2} 1(s eta < 0) e^{s eta} d eta = E(y/s, 1/s) / |s|.
inline KernelSample eval_K_s(double s, double y, double tol = 1e-12) {
  if (s == 0.0) throw std::invalid_argument("K_s: s = 0 is excluded");
  double err = 0.0;
  const cplx v = descent_integral(y / s, 1.0 / s, tol * std::abs(s), &err);
  return {v / std::abs(s), err / std::abs(s), KernelMethod::quadrature, "steepest_descent"};
}

/// int_{-inf}^y e^{i xi^2 / s} e^{xi} d xi = e^{y + i y^2/s} E(2y/s, 1/s).
inline KernelSample oscillatory_tail(double y, double s, double tol = 1e-12) {
  if (s == 0.0) throw std::invalid_argument("oscillatory_tail: s = 0 is excluded");
  double err = 0.0;
  const double scale = std::exp(y);
  const cplx v = descent_integral(2.0 * y / s, 1.0 / s, tol / std::max(scale, 1e-300), &err);
  const cplx pre = scale * std::polar(1.0, y * y / s);
  return {pre * v, scale * err, KernelMethod::quadrature, "steepest_descent"};
}

/// K_(s,t)(y) = int e^{i y eta} e^{i (s-t) eta^2} 1((s+t) eta < 0) e^{(s+t) eta} d eta
///            = E(y/(s+t), (s-t)/(s+t)^2) / |s+t|, for s t > 0.
inline KernelSample eval_K_st(double s, double t, double y, double tol = 1e-12) {
  if (s + t == 0.0) throw std::invalid_argument("K_(s,t): s = -t is excluded");
  if (!(s * t > 0)) throw std::invalid_argument("K_(s,t): requires s t > 0");
  const double w = s + t;
  double err = 0.0;
  const cplx v = descent_integral(y / w, (s - t) / (w * w), tol * std::abs(w), &err);
  return {v / std::abs(w), err / std::abs(w), KernelMethod::quadrature, "steepest_descent"};
}

}  // namespace cgolab
