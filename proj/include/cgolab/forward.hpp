#pragma once

#include "cgolab/grid.hpp"
#include "cgolab/parallel.hpp"
#include "cgolab/quadrature.hpp"
#include "cgolab/report.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgolab {

/// V(t, x) for the evolution i u_t + Delta u - V u = 0.
using PotentialFn = std::function<cplx(double, const double*)>;

/// How V enters one step: sampled at the step midpoint, or averaged over the step (for
/// potentials that are merely integrable in time).
enum class TimeSampling { midpoint, cell_average };

struct SolverSettings {
  int steps = 256;
  TimeSampling sampling = TimeSampling::midpoint;
  int record_every = 0;                  ///< 0: record only the endpoints
  std::array<double, 3> twist{0.0, 0.0, 0.0};  ///< Bloch twist: u(x + 2X e_a) = e^{i 2X twist_a} u(x)
};

struct Trajectory {
  SpatialGrid grid;
  std::vector<double> times;
  std::vector<SpatialField> slices;
  double mass0 = 0.0;
  double max_mass_drift = 0.0;       ///< max |‖u(t)‖ - ‖u(0)‖| / ‖u(0)‖ over steps
  double max_boundary_fraction = 0.0;
  bool aliasing_warning = false;     ///< boundary mass fraction above 1e-8 at some step

  const SpatialField& final_state() const { return slices.back(); }
};

namespace fwd_detail {

/// Effective potential of the step [t, t + dt] on the spatial lattice.
inline std::vector<cplx> step_potential(const PotentialFn& V, const SpatialGrid& g, double t, double dt,
                                        TimeSampling mode) {
  std::vector<cplx> out(g.size());
  if (!V) return out;
  if (mode == TimeSampling::midpoint) {
    for_each_spatial_point(g, [&](std::size_t i, const double* x) { out[i] = V(t + 0.5 * dt, x); });
  } else {
    const auto rule = composite_gauss_legendre(t, t + dt, 1, 4);
    for_each_spatial_point(g, [&](std::size_t i, const double* x) {
      cplx acc = 0.0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) acc += rule.weights[k] * V(rule.nodes[k], x);
      out[i] = acc / dt;
    });
  }
  return out;
}

/// exp(-i h v / 2) pointwise: the half potential step of signed length h.
inline std::vector<cplx> half_phase(const std::vector<cplx>& v, double h) {
  std::vector<cplx> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(cplx(0.0, -0.5 * h) * v[i]);
  return out;
}

inline double norm_sq(const double* xi, int n) {
  double s = 0.0;
  for (int a = 0; a < n; ++a) s += xi[a] * xi[a];
  return s;
}

/// exp(-i h |xi + twist|^2) on the periodic spatial lattice.
inline std::vector<cplx> free_factor(const SpatialGrid& g, double h, const std::array<double, 3>& twist) {
  std::vector<cplx> out(g.size());
  for_each_spatial_mode(g, twist, [&](std::size_t i, const double* xi) { out[i] = std::polar(1.0, -h * norm_sq(xi, g.n)); });
  return out;
}

/// One Strang step: half phase, free step (in the twisted frame), half phase. An empty phase
/// means V = 0 on the step.
/// `twist_phase` holds e^{i twist.x} (empty without a twist).
inline void strang_step(SpatialField& u, const std::vector<cplx>& phase, const std::vector<cplx>& free,
                        const std::vector<cplx>& twist_phase) {
  if (!phase.empty())
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= phase[i];
  if (!twist_phase.empty())
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= std::conj(twist_phase[i]);
  fft::transform_inplace(u.data.data(), u.grid.dims(), 1, fft::Direction::forward);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] *= free[i];
  fft::transform_inplace(u.data.data(), u.grid.dims(), 1, fft::Direction::inverse);
  if (!twist_phase.empty())
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= twist_phase[i];
  if (!phase.empty())
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= phase[i];
}

inline void check_run(double T, const SolverSettings& s) {
  if (s.steps < 1) throw std::invalid_argument("evolve: steps must be >= 1");
  if (!(T > 0)) throw std::invalid_argument("evolve: T must be positive");
}

/// Shared stepping loop; phase(k) returns the half-step phase of step k (in stepping order).
template <class PhaseOf>
Trajectory run(const SpatialField& start, double T, const SolverSettings& s, bool backward, PhaseOf&& phase) {
  const double dt = T / s.steps;
  const auto free = free_factor(start.grid, backward ? -dt : dt, s.twist);
  std::vector<cplx> twist_phase;
  if (s.twist != std::array<double, 3>{0.0, 0.0, 0.0}) {
    SpatialField ones(start.grid);
    std::fill(ones.data.begin(), ones.data.end(), cplx(1.0));
    modulate(ones, s.twist, 1.0);
    twist_phase = std::move(ones.data);
  }
  Trajectory tr;
  tr.grid = start.grid;
  SpatialField u = start;
  tr.mass0 = l2(u);
  std::vector<double> times{backward ? T : 0.0};
  std::vector<SpatialField> slices{u};
  for (int k = 0; k < s.steps; ++k) {
    strang_step(u, phase(k), free, twist_phase);
    if (tr.mass0 > 0) tr.max_mass_drift = std::max(tr.max_mass_drift, std::abs(l2(u) - tr.mass0) / tr.mass0);
    tr.max_boundary_fraction = std::max(tr.max_boundary_fraction, boundary_mass_fraction(u));
    const bool last = k + 1 == s.steps;
    if (last || (s.record_every > 0 && (k + 1) % s.record_every == 0)) {
      const double t = backward ? (s.steps - k - 1) * dt : (k + 1) * dt;
      times.push_back(last ? (backward ? 0.0 : T) : t);
      slices.push_back(u);
    }
  }
  if (backward) {
    std::reverse(times.begin(), times.end());
    std::reverse(slices.begin(), slices.end());
  }
  tr.times = std::move(times);
  tr.slices = std::move(slices);
  tr.aliasing_warning = tr.max_boundary_fraction > 1e-8;
  return tr;
}

}  // namespace fwd_detail

/// Half-step phases of every step, for repeated solves with one potential. `final_value`
/// prepares the backward solve with conj(V), in stepping order (last step first).
struct StepPhases {
  SpatialGrid grid;
  double T = 0.0;
  int steps = 0;
  bool final_value = false;
  std::vector<std::vector<cplx>> half;
};

inline StepPhases precompute_phases(const PotentialFn& V, const SpatialGrid& g, double T, const SolverSettings& s,
                                    bool final_value = false) {
  fwd_detail::check_run(T, s);
  StepPhases out{g, T, s.steps, final_value, {}};
  const double dt = T / s.steps;
  out.half.resize(static_cast<std::size_t>(s.steps));
  for (int k = 0; k < s.steps; ++k) {
    const int step = final_value ? s.steps - 1 - k : k;
    auto v = fwd_detail::step_potential(V, g, step * dt, dt, s.sampling);
    if (final_value)
      for (auto& z : v) z = std::conj(z);
    if (V) out.half[k] = fwd_detail::half_phase(v, final_value ? -dt : dt);
  }
  return out;
}

/// Strang split-step solution of i u_t + Delta u - V u = 0 on [0, T] from u(0) = f.
inline Trajectory evolve(const PotentialFn& V, const SpatialField& f, double T, const SolverSettings& s = {}) {
  fwd_detail::check_run(T, s);
  const double dt = T / s.steps;
  std::vector<cplx> ph;
  return fwd_detail::run(f, T, s, false, [&](int k) -> const std::vector<cplx>& {
    if (V) ph = fwd_detail::half_phase(fwd_detail::step_potential(V, f.grid, k * dt, dt, s.sampling), dt);
    return ph;
  });
}

/// Same as evolve with phases computed once by precompute_phases.
inline Trajectory evolve(const StepPhases& P, const SpatialField& f, const SolverSettings& s) {
  if (P.final_value || P.steps != s.steps || !(P.grid == f.grid))
    throw std::invalid_argument("evolve: phases do not match the run");
  return fwd_detail::run(f, P.T, s, false, [&](int k) -> const std::vector<cplx>& { return P.half[k]; });
}

/// Final-value problem i v_t + Delta v - conj(V) v = 0 on [0, T], v(T) = g, by stepping backward.
/// Slices are returned in increasing time order.
inline Trajectory evolve_final_value(const PotentialFn& V, const SpatialField& g, double T,
                                     const SolverSettings& s = {}) {
  fwd_detail::check_run(T, s);
  const double dt = T / s.steps;
  std::vector<cplx> ph;
  return fwd_detail::run(g, T, s, true, [&](int k) -> const std::vector<cplx>& {
    if (V) {
      auto v = fwd_detail::step_potential(V, g.grid, (s.steps - 1 - k) * dt, dt, s.sampling);
      for (auto& z : v) z = std::conj(z);
      ph = fwd_detail::half_phase(v, -dt);
    }
    return ph;
  });
}

/// Hash of V sampled at the step midpoints of [0, T] (provenance of ITF data).
inline std::string potential_hash(const PotentialFn& V, const SpatialGrid& g, double T, int steps) {
  std::string bytes;
  for (int k = 0; k < steps; ++k) {
    const auto v = fwd_detail::step_potential(V, g, k * T / steps, T / steps, TimeSampling::midpoint);
    const auto* p = reinterpret_cast<const char*>(v.data());
    bytes.append(p, p + v.size() * sizeof(cplx));
  }
  return fnv1a_hex(bytes);
}

struct ItfSample {
  SpatialField input;
  SpatialField output;
  std::string potential_hash;
  double T = 0.0;
  SolverSettings settings;
  bool aliasing_warning = false;
};

/// U_T f for each probe.
inline std::vector<ItfSample> itf_map(const PotentialFn& V, const std::vector<SpatialField>& probes, double T,
                                      const SolverSettings& s = {}, int workers = 1) {
  if (probes.empty()) throw std::invalid_argument("itf_map: no probes");
  const std::string h = potential_hash(V, probes.front().grid, T, s.steps);
  return parallel_map(probes.size(), workers, [&](std::size_t k) {
    const auto tr = evolve(V, probes[k], T, s);
    return ItfSample{probes[k], tr.final_state(), h, T, s, tr.aliasing_warning};
  });
}

struct IdentityCheck {
  cplx lhs;                   ///< i int (U_T^1 - U_T^2) f conj(g) dx
  cplx rhs;                   ///< int_0^T int (V1 - V2) u1 conj(v2) dx dt
  double residual = 0.0;      ///< |lhs - rhs|
  double scale = 0.0;         ///< max(|lhs|, ||V1 - V2||_inf T ||f||_2 ||g||_2)
  double normalized = 0.0;    ///< residual / scale
};

/// Both sides of the integral identity from independent solves: u1 (V1, forward from f), u2
/// (V2, forward from f) and v2 (conj(V2), backward from g); the time integral uses the
/// trapezoid rule on the step lattice.
inline IdentityCheck integral_identity_check(const PotentialFn& V1, const PotentialFn& V2, const SpatialField& f,
                                             const SpatialField& g, double T, int steps) {
  if (!(f.grid == g.grid)) throw std::invalid_argument("identity check: grids differ");
  SolverSettings s;
  s.steps = steps;
  s.record_every = 1;
  const auto u1 = evolve(V1, f, T, s);
  SolverSettings s_end;
  s_end.steps = steps;
  const auto u2 = evolve(V2, f, T, s_end);
  const auto v2 = evolve_final_value(V2, g, T, s);
  const double cell = f.grid.cell();
  IdentityCheck out;
  out.lhs = I * inner((u1.final_state() - u2.final_state()).data, g.data) * cell;
  const double dt = T / steps;
  double vmax = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    const double w = (k == 0 || k == steps) ? 0.5 * dt : dt;
    cplx acc = 0.0;
    for_each_spatial_point(f.grid, [&](std::size_t i, const double* x) {
      const cplx dv = (V1 ? V1(t, x) : cplx(0.0)) - (V2 ? V2(t, x) : cplx(0.0));
      vmax = std::max(vmax, std::abs(dv));
      acc += dv * u1.slices[k][i] * std::conj(v2.slices[k][i]);
    });
    out.rhs += w * acc * cell;
  }
  out.residual = std::abs(out.lhs - out.rhs);
  out.scale = std::max(std::abs(out.lhs), vmax * T * quad_l2(f) * quad_l2(g));
  out.normalized = out.scale > 0 ? out.residual / out.scale : out.residual;
  return out;
}

}  // namespace cgolab
