#pragma once

#include "cgolab/grid.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace cgolab {

/// Random field with i.i.d. complex normal Fourier coefficients on the (offset) lattice modes
/// with |tau| <= frac_time * tau_nyquist and |xi_a - off_a| <= frac_space * xi_nyquist.
inline Field random_band_limited(const GridSpec& g, const FreqOffset& off, double frac_time, double frac_space,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  Field F(g, Rep::frequency);
  const double tmax = frac_time * g.time_axis().nyquist(), xmax = frac_space * g.space_axis().nyquist();
  for_each_mode(g, off, [&](std::size_t i, double tau, const double* xi) {
    bool keep = std::abs(tau - off.tau) <= tmax;
    for (int a = 0; a < g.n; ++a) keep = keep && std::abs(xi[a] - off.xi[a]) <= xmax;
    const double re = N(rng), im = N(rng);
    if (keep) F[i] = {re, im};
  });
  Field f = transform(F, fft::Direction::inverse);
  modulate(f, off, 1.0);
  return f;
}

/// Gaussian wave packet exp(-|t - t0|^2 / (2 wt^2) - |x - x0|^2 / (2 wx^2)) e^{i (tau0 t + xi0 . x)}.
struct WavePacketParams {
  double t0 = 0.0, wt = 1.0, tau0 = 0.0;
  std::array<double, 3> x0{0.0, 0.0, 0.0};
  std::array<double, 3> xi0{0.0, 0.0, 0.0};
  double wx = 1.0;
};

inline Field gaussian_packet(const GridSpec& g, const WavePacketParams& p) {
  return sample(g, [&](double t, const double* x) {
    double e = -(t - p.t0) * (t - p.t0) / (2 * p.wt * p.wt);
    double ph = p.tau0 * t;
    for (int a = 0; a < g.n; ++a) {
      e -= (x[a] - p.x0[a]) * (x[a] - p.x0[a]) / (2 * p.wx * p.wx);
      ph += p.xi0[a] * x[a];
    }
    return std::exp(e) * std::polar(1.0, ph);
  });
}

/// Draws packet parameters: center within `spread` of the origin (in units of the box), widths
/// in [w_lo, w_hi], modulation up to `mod` times the Nyquist frequency. With `near_char` the
/// modulation is placed near the characteristic set of p (xi_n ~ 0, tau ~ |xi|^2).
inline WavePacketParams draw_packet(const GridSpec& g, std::mt19937_64& rng, double spread, double w_lo, double w_hi,
                                    double mod, bool near_char) {
  std::uniform_real_distribution<double> U(-1.0, 1.0), W(w_lo, w_hi);
  WavePacketParams p;
  p.t0 = spread * g.box_time * U(rng);
  p.wt = W(rng) * g.box_time;
  p.wx = W(rng) * g.box_space;
  const double kx = mod * g.space_axis().nyquist(), kt = mod * g.time_axis().nyquist();
  double xi2 = 0.0;
  for (int a = 0; a < g.n; ++a) {
    p.x0[a] = spread * g.box_space * U(rng);
    p.xi0[a] = kx * U(rng);
    xi2 += p.xi0[a] * p.xi0[a];
  }
  p.tau0 = kt * U(rng);
  if (near_char) {
    xi2 -= p.xi0[g.n - 1] * p.xi0[g.n - 1];
    p.xi0[g.n - 1] = 0.0;
    p.tau0 = std::min(xi2, kt);
  }
  return p;
}

}  // namespace cgolab
