#pragma once

#include "cgolab/grid.hpp"
#include "cgolab/quadrature.hpp"
#include "cgolab/symbols.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cgolab {

/// A frequency-diagonal operator on a fixed lattice: the tabulated multiplier on the
/// (offset) frequency lattice, with near-zero symbols dropped and counted.
struct MultiplierPlan {
  GridSpec spec;
  std::optional<NuVector> nu;
  FreqOffset offset;
  double eps_floor = 0.0;
  std::size_t dropped = 0;
  std::vector<cplx> table;
};

/// Half-spacing shift of the x_n frequencies: Im p = xi_n never vanishes.
inline FreqOffset default_offset_S(const GridSpec& g) {
  FreqOffset off;
  off.xi[static_cast<std::size_t>(g.n - 1)] = 0.5 * g.space_axis().dfreq();
  return off;
}

/// Half-spacing shift along the dominant axis of nu: for axis-aligned nu,
/// |Im p_nu| = 2 |nu . xi| >= |nu| dxi on every lattice point.
inline FreqOffset default_offset_S_nu(const GridSpec& g, const NuVector& nu) {
  FreqOffset off;
  off.xi[static_cast<std::size_t>(nu.dominant_axis())] = 0.5 * g.space_axis().dfreq();
  return off;
}

namespace mult_detail {

template <class Symbol>
MultiplierPlan build_inverse_plan(const GridSpec& g, const FreqOffset& off, double rel_floor, Symbol&& p) {
  if (!(rel_floor > 0)) throw std::invalid_argument("symbol floor must be positive");
  MultiplierPlan plan;
  plan.spec = g;
  plan.offset = off;
  plan.table.resize(g.size());
  double scale = 0.0;
  for_each_mode(g, off, [&](std::size_t i, double tau, const double* xi) {
    plan.table[i] = p(tau, xi);
    scale = std::max(scale, std::abs(plan.table[i]));
  });
  plan.eps_floor = rel_floor * scale;
  for (auto& z : plan.table) {
    if (std::abs(z) < plan.eps_floor) {
      z = 0.0;
      ++plan.dropped;
    } else {
      z = 1.0 / z;
    }
  }
  return plan;
}

}  // namespace mult_detail

/// Applies a tabulated multiplier (table indexed like the frequency field).
inline Field apply_table(const Field& f, const FreqOffset& off, const std::vector<cplx>& table) {
  if (f.rep != Rep::physical) throw std::invalid_argument("multiplier expects a physical field");
  if (table.size() != f.size()) throw std::invalid_argument("multiplier table size mismatch");
  Field g = f;
  modulate(g, off, -1.0);
  fft::transform_inplace(g.data.data(), g.spec.dims(), 1, fft::Direction::forward);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= table[i];
  fft::transform_inplace(g.data.data(), g.spec.dims(), 1, fft::Direction::inverse);
  modulate(g, off, 1.0);
  return g;
}

/// Plan for S = 1/p with p = tau - |xi|^2 + i xi_n.
inline MultiplierPlan plan_S(const GridSpec& g, double rel_floor = 1e-12,
                             std::optional<FreqOffset> off = std::nullopt) {
  const int n = g.n;
  return mult_detail::build_inverse_plan(g, off.value_or(default_offset_S(g)), rel_floor,
                                         [&](double tau, const double* xi) { return eval_p(tau, xi, n); });
}

/// Plan for S_nu = 1/p_nu with p_nu = -tau - |xi|^2 + 2 i nu . xi.
inline MultiplierPlan plan_S_nu(const GridSpec& g, const NuVector& nu, double rel_floor = 1e-12,
                                std::optional<FreqOffset> off = std::nullopt) {
  if (nu.dim() != g.n) throw std::invalid_argument("nu dimension does not match the grid");
  auto plan = mult_detail::build_inverse_plan(g, off.value_or(default_offset_S_nu(g, nu)), rel_floor,
                                              [&](double tau, const double* xi) { return eval_p_nu(tau, xi, nu); });
  plan.nu = nu;
  return plan;
}

inline Field apply(const MultiplierPlan& plan, const Field& f) {
  if (!(f.spec == plan.spec)) throw std::invalid_argument("field grid does not match the plan");
  return apply_table(f, plan.offset, plan.table);
}

/// Adjoint in L^2: the conjugate multiplier.
inline Field apply_adjoint(const MultiplierPlan& plan, const Field& f) {
  if (!(f.spec == plan.spec)) throw std::invalid_argument("field grid does not match the plan");
  std::vector<cplx> conj_table(plan.table.size());
  for (std::size_t i = 0; i < conj_table.size(); ++i) conj_table[i] = std::conj(plan.table[i]);
  return apply_table(f, plan.offset, conj_table);
}

inline Field apply_S(const Field& f) { return apply(plan_S(f.spec), f); }
inline Field apply_S_nu(const Field& f, const NuVector& nu) { return apply(plan_S_nu(f.spec, nu), f); }

/// (i d_t + Delta + 2 nu . grad) u, applied spectrally on the given frequency lattice.
inline Field apply_conjugated_operator(const Field& u, const NuVector& nu, const FreqOffset& off) {
  return apply_symbol(u, off, [&](double tau, const double* xi) { return eval_p_nu(tau, xi, nu); });
}

/// Reflection x_axis -> -x_axis on the lattice. Data twisted by a half-spacing offset along
/// that axis are antiperiodic, so the wrapped plane j = 0 picks up a sign.
inline Field reflect_axis(const Field& f, int axis, bool antiperiodic) {
  const int N = f.spec.pts_space, n = f.spec.n;
  std::size_t stride = 1;
  for (int a = n - 1; a > axis; --a) stride *= static_cast<std::size_t>(N);
  Field g = f;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const int j = static_cast<int>((i / stride) % static_cast<std::size_t>(N));
    const int jr = (N - j) % N;
    const std::size_t src = i + (static_cast<std::size_t>(jr) - static_cast<std::size_t>(j)) * stride;
    g[i] = (antiperiodic && j == 0) ? -f[src] : f[src];
  }
  return g;
}

// ---------------------------------------------------------------------------------------------
// Propagator pieces

/// Multiplier of U_s: e^{i s |xi|^2} i sign(s) 1(s xi_n < 0) e^{s xi_n}; with `cutoff` false,
/// the bare free factor e^{i s |xi|^2}.
inline cplx U_s_symbol(double s, const double* xi, int n, bool cutoff = true) {
  const cplx free = std::polar(1.0, s * norm_sq(xi, n));
  if (!cutoff) return free;
  const double xn = xi[n - 1];
  if (!(s * xn < 0)) return 0.0;
  return free * cplx(0.0, s > 0 ? 1.0 : -1.0) * std::exp(s * xn);
}

inline SpatialField apply_U_s(const SpatialField& phi, double s, bool cutoff = true,
                              const std::array<double, 3>& off = {0.0, 0.0, 0.0}) {
  if (s == 0.0) throw std::invalid_argument("U_s: s = 0 is excluded");
  const int n = phi.grid.n;
  return apply_symbol(phi, off, [&](const double* xi) { return U_s_symbol(s, xi, n, cutoff); });
}

namespace mult_detail {

/// The time kernel of S at spatial frequency xi, periodized over the time box:
/// K(s) = i sign(s) 1(s xi_n < 0) e^{c s} with c = xi_n + i|xi|^2, summed over s + mP.
/// Returned as coefficients of e^{c s} on s < 0 and s > 0.
struct PeriodicKernel {
  cplx c;
  cplx left;
  cplx right;
  cplx at(double s) const { return (s < 0 ? left : right) * std::exp(c * s); }
  /// int_a^b (coef) e^{(c - i tau) s} ds on one side of 0.
  cplx integral(double a, double b, double tau) const {
    const cplx coef = a < 0 ? left : right;
    const cplx g = c - cplx(0.0, tau);
    return coef * (std::exp(g * b) - std::exp(g * a)) / g;
  }
};

inline PeriodicKernel periodic_kernel(const double* xi, int n, double period) {
  const double xn = xi[n - 1];
  if (xn == 0.0) throw std::invalid_argument("propagator form requires xi_n != 0 on the lattice");
  PeriodicKernel k;
  k.c = cplx(xn, norm_sq(xi, n));
  const cplx eP = std::exp(k.c * period);
  if (xn < 0) {
    k.right = I / (1.0 - eP);
    k.left = k.right * eP;
  } else {
    const cplx emP = std::exp(-k.c * period);
    k.left = -I / (1.0 - emP);
    k.right = k.left * emP;
  }
  return k;
}

/// Applies a multiplier tabulated per spatial mode: fill(xi, taus, out) writes m(tau_k, xi)
/// for all time frequencies.
template <class Fill>
Field apply_per_spatial_mode(const Field& f, const FreqOffset& off, Fill&& fill) {
  const GridSpec& g = f.spec;
  const std::size_t ns = g.spatial_size();
  std::vector<double> taus(static_cast<std::size_t>(g.pts_time));
  for (int k = 0; k < g.pts_time; ++k) taus[k] = g.time_axis().freq(k) + off.tau;
  std::vector<cplx> table(g.size()), col(taus.size());
  for_each_spatial_mode(g.spatial(), off.xi, [&](std::size_t i, const double* xi) {
    fill(xi, taus, col);
    for (std::size_t k = 0; k < taus.size(); ++k) table[k * ns + i] = col[k];
  });
  return apply_table(f, off, table);
}

}  // namespace mult_detail

/// S via Sf(t) = int U_s f(t - s) ds over one period of the time box. The s-integral of the
/// periodized kernel against e^{-i tau s} is computed with composite Gauss-Legendre panels
/// (quad_pts nodes each) sized to the local oscillation.
inline Field apply_S_via_propagator(const Field& f, int quad_pts = 16) {
  if (f.rep != Rep::physical) throw std::invalid_argument("propagator form expects a physical field");
  const GridSpec& g = f.spec;
  const int n = g.n;
  const double Tb = g.box_time, P = 2.0 * Tb;
  const FreqOffset off = default_offset_S(g);
  const double tau_max = g.time_axis().nyquist();
  return mult_detail::apply_per_spatial_mode(f, off, [&](const double* xi, const std::vector<double>& taus,
                                                         std::vector<cplx>& out) {
    const auto K = mult_detail::periodic_kernel(xi, n, P);
    const double omega = tau_max + norm_sq(xi, n) + std::abs(xi[n - 1]) + 1.0;
    const int panels = std::max(1, static_cast<int>(std::ceil(Tb * omega / 4.0)));
    std::fill(out.begin(), out.end(), cplx(0.0));
    for (int side = 0; side < 2; ++side) {
      const auto rule = side == 0 ? composite_gauss_legendre(-Tb, 0.0, panels, quad_pts)
                                  : composite_gauss_legendre(0.0, Tb, panels, quad_pts);
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double s = rule.nodes[j];
        const cplx w = rule.weights[j] * K.at(s);
        for (std::size_t k = 0; k < taus.size(); ++k) out[k] += w * std::polar(1.0, -taus[k] * s);
      }
    }
  });
}

/// The dyadic piece S_j: the propagator form restricted to 2^{j-1} < |s| <= 2^j (within the
/// time box), integrated exactly per mode. Shells beyond the box have no support.
inline Field apply_S_dyadic(const Field& f, int j) {
  if (f.rep != Rep::physical) throw std::invalid_argument("dyadic piece expects a physical field");
  const GridSpec& g = f.spec;
  const int n = g.n;
  const double Tb = g.box_time, P = 2.0 * Tb;
  const double lo = std::ldexp(1.0, j - 1), hi = std::min(std::ldexp(1.0, j), Tb);
  if (lo >= Tb) return Field(g);
  const FreqOffset off = default_offset_S(g);
  return mult_detail::apply_per_spatial_mode(f, off, [&](const double* xi, const std::vector<double>& taus,
                                                         std::vector<cplx>& out) {
    const auto K = mult_detail::periodic_kernel(xi, n, P);
    for (std::size_t k = 0; k < taus.size(); ++k)
      out[k] = K.integral(lo, hi, taus[k]) + K.integral(-hi, -lo, taus[k]);
  });
}

/// Shell indices j with 2^{j-1} < T_box, from j_min upward.
inline std::vector<int> resolved_shells(const GridSpec& g, int j_min) {
  std::vector<int> out;
  for (int j = j_min; std::ldexp(1.0, j - 1) < g.box_time; ++j) out.push_back(j);
  return out;
}

}  // namespace cgolab
