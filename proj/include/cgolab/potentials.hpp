#pragma once

#include "cgolab/birman_schwinger.hpp"
#include "cgolab/forward.hpp"
#include "cgolab/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cgolab {

/// Named sampled potentials used by the sweeps: amp * profile(x) * cos^2(pi t / (2 tw)) on |t| <= tw.
///   gaussian: e^{-|x|^2 / w^2}
///   cusp:     |x|^{-alpha} e^{-|x|^2 / w^2}, unbounded at x = 0 (in L^b near 0 iff alpha b < n)
struct PotentialSpec {
  std::string kind = "gaussian";
  double amp = -4.0;
  double width = 1.0;
  double alpha = 0.5;
  double time_window = 2.0;
  double R = 3.0;
  Exponent a = Exponent(2);
  Exponent b = Exponent(2);
};

/// Cell average of |x|^{-alpha} over the lattice cell [-h/2, h/2]^n centred at the origin (n <= 2).
inline double cusp_cell_average(double alpha, double h, int n) {
  if (!(alpha >= 0 && alpha < n)) throw std::invalid_argument("cusp: alpha must lie in [0, n)");
  if (n == 1) return std::pow(0.5 * h, -alpha) / (1 - alpha);
  if (n != 2) throw std::invalid_argument("cusp: only n <= 2 is supported");
  // 8 int_0^{pi/4} int_0^{h / (2 cos th)} r^{1 - alpha} dr dth / h^2.
  const auto rule = composite_gauss_legendre(0.0, 0.25 * pi, 4, 16);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * std::pow(0.5 * h / std::cos(rule.nodes[i]), 2 - alpha);
  return 8.0 * acc / ((2 - alpha) * h * h);
}

inline Field sample_potential(const PotentialSpec& s, const GridSpec& g) {
  if (!(s.width > 0) || !(s.time_window > 0)) throw std::invalid_argument("potential: width and time_window must be positive");
  const bool cusp = s.kind == "cusp";
  if (!cusp && s.kind != "gaussian") throw std::invalid_argument("potential: unknown kind '" + s.kind + "'");
  const double origin = cusp ? cusp_cell_average(s.alpha, g.dx(), g.n) : 1.0;
  return sample(g, [&](double t, const double* x) {
    if (std::abs(t) > s.time_window) return cplx(0.0);
    double r2 = 0.0;
    for (int a = 0; a < g.n; ++a) r2 += x[a] * x[a];
    double prof = std::exp(-r2 / (s.width * s.width));
    if (cusp) prof *= r2 > 0 ? std::pow(r2, -0.5 * s.alpha) : origin;
    return cplx(s.amp * std::pow(std::cos(pi * t / (2 * s.time_window)), 2) * prof);
  });
}

inline Potential make_potential(const PotentialSpec& s, const GridSpec& g) {
  Potential P;
  P.V = sample_potential(s, g);
  P.R = s.R;
  P.t_lo = -s.time_window;
  P.t_hi = s.time_window;
  P.a = s.a;
  P.b = s.b;
  validate(P);
  return P;
}

/// eps e^{-|x|^2 / w^2} e^{-((t - t0) / sigma)^2 / 2}: the smooth potential of the forward experiments.
inline PotentialFn gaussian_bump(int n, double eps, double width, double t0, double sigma) {
  return [=](double t, const double* x) {
    const double s = (t - t0) / sigma;
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
    return cplx(eps * std::exp(-r2 / (width * width) - 0.5 * s * s), 0.0);
  };
}

}  // namespace cgolab
