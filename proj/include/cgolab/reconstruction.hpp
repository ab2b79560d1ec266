#pragma once

#include "cgolab/exponent.hpp"
#include "cgolab/forward.hpp"
#include "cgolab/parallel.hpp"
#include "cgolab/quadrature.hpp"
#include "cgolab/report.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgolab {

using Vec3 = std::array<double, 3>;

// ---------------------------------------------------------------------------------------------
// Frequency parametrization

/// Direction orthogonal to xi (n >= 2), unnormalized.
template <class T>
std::array<T, 3> orthogonal_direction(const std::array<T, 3>& xi, int n) {
  if (n < 2) throw std::invalid_argument("orthogonal direction needs n >= 2");
  const T zero(0);
  if (xi[0] != zero || xi[1] != zero) return {-xi[1], xi[0], zero};
  return {zero, -xi[2], xi[1]};
}

template <class T>
struct FreqParam {
  std::array<T, 3> nu, eta, kappa;
};

/// eta = -(1/2)(1 + tau/|xi|^2) xi, kappa = (1/2)(1 - tau/|xi|^2) xi, and nu with xi . nu = 0.
/// Then |eta|^2 - |kappa|^2 = tau and kappa - eta = xi.
template <class T>
FreqParam<T> freq_parametrization(const T& tau, const std::array<T, 3>& xi, int n) {
  if (n < 2 || n > 3) throw std::invalid_argument("freq_parametrization: n must be 2 or 3");
  T xi2(0);
  for (int a = 0; a < n; ++a) xi2 += xi[a] * xi[a];
  if (xi2 == T(0)) throw std::invalid_argument("freq_parametrization: xi = 0 is excluded");
  FreqParam<T> p;
  p.nu = orthogonal_direction(xi, n);
  const T half = T(1) / T(2);
  for (int a = 0; a < 3; ++a) {
    p.eta[a] = a < n ? -half * (T(1) + tau / xi2) * xi[a] : T(0);
    p.kappa[a] = a < n ? half * (T(1) - tau / xi2) * xi[a] : T(0);
  }
  return p;
}

// ---------------------------------------------------------------------------------------------
// Born samples

/// Bloch twist of a frequency: its offset from the nearest lattice frequency.
inline Vec3 bloch_twist(const Vec3& k, const SpatialGrid& g) {
  const double dk = g.axis().dfreq();
  Vec3 th{0.0, 0.0, 0.0};
  for (int a = 0; a < g.n; ++a) th[a] = k[a] - std::round(k[a] / dk) * dk;
  return th;
}

inline SpatialField plane_wave(const SpatialGrid& g, const Vec3& k) {
  return sample(g, [&](const double* x) {
    double ph = 0.0;
    for (int a = 0; a < g.n; ++a) ph += k[a] * x[a];
    return std::polar(1.0, ph);
  });
}

inline double dot3(const Vec3& a, const Vec3& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

struct BornSettings {
  double T = 1.0;
  int steps = 128;
  TimeSampling sampling = TimeSampling::midpoint;
  double born_threshold = 0.5;  ///< Born regime: sup|V| T at or below this
};

/// Potential prepared for many probe solves.
struct PreparedPotential {
  SpatialGrid grid;
  BornSettings settings;
  StepPhases phases;
  double sup = 0.0;  ///< max |V| over the step samples
  bool born_regime = true;
};

inline PreparedPotential prepare_potential(const PotentialFn& V, const SpatialGrid& g, const BornSettings& b) {
  SolverSettings s;
  s.steps = b.steps;
  s.sampling = b.sampling;
  PreparedPotential P{g, b, precompute_phases(V, g, b.T, s), 0.0, true};
  const double dt = b.T / b.steps;
  for (int k = 0; k < b.steps && V; ++k)
    for (const cplx& v : fwd_detail::step_potential(V, g, k * dt, dt, b.sampling)) P.sup = std::max(P.sup, std::abs(v));
  P.born_regime = P.sup * b.T <= b.born_threshold;
  return P;
}

struct FreqSample {
  double tau = 0.0;
  Vec3 xi{0.0, 0.0, 0.0};
  Vec3 nu{0.0, 0.0, 0.0};
  Vec3 eta{0.0, 0.0, 0.0};
  Vec3 kappa{0.0, 0.0, 0.0};
  cplx amplitude;
  bool born_regime = true;
  bool interpolated = false;  ///< xi = 0, filled by continuity
};

/// Born estimate of V^(tau, xi) from one ITF sample with input e^{i eta.x}:
///   i e^{i|kappa|^2 T} < U_T f - U^0_T f, e^{i kappa.x} >,
/// which is the integral identity with V2 = 0 and free probes, and equals
///   int_0^T int V e^{-i(tau t + xi.x)} dx dt
/// up to O(V^2). U^0_T f = e^{-i|eta|^2 T} f holds exactly on the twisted lattice.
inline cplx born_amplitude(const ItfSample& s, const Vec3& eta, const Vec3& kappa) {
  const auto& g = s.input.grid;
  const cplx free_phase = std::polar(1.0, -dot3(eta, eta, g.n) * s.T);
  const auto probe = plane_wave(g, kappa);
  cplx acc = 0.0;
  for (std::size_t i = 0; i < s.output.size(); ++i)
    acc += (s.output[i] - free_phase * s.input[i]) * std::conj(probe[i]);
  return I * std::polar(1.0, dot3(kappa, kappa, g.n) * s.T) * acc * g.cell();
}

/// Runs the probe solve for (tau, xi) and returns the sample.
inline FreqSample born_sample(const PreparedPotential& P, double tau, const Vec3& xi) {
  const auto fp = freq_parametrization(tau, xi, P.grid.n);
  FreqSample out;
  out.tau = tau;
  out.xi = xi;
  out.nu = fp.nu;
  out.eta = fp.eta;
  out.kappa = fp.kappa;
  out.born_regime = P.born_regime;
  SolverSettings s;
  s.steps = P.settings.steps;
  s.sampling = P.settings.sampling;
  s.twist = bloch_twist(fp.eta, P.grid);
  ItfSample d;
  d.input = plane_wave(P.grid, fp.eta);
  d.output = evolve(P.phases, d.input, s).final_state();
  d.T = P.settings.T;
  d.settings = s;
  out.amplitude = born_amplitude(d, fp.eta, fp.kappa);
  return out;
}

/// Reference transform int_0^T int_box V e^{-i(tau t + xi.x)} dx dt: lattice sum in space,
/// composite Gauss-Legendre in time.
inline cplx potential_transform(const PotentialFn& V, const SpatialGrid& g, double T, double tau, const Vec3& xi,
                                int panels = 16) {
  const auto rule = composite_gauss_legendre(0.0, T, panels, 8);
  cplx acc = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double t = rule.nodes[k];
    cplx sp = 0.0;
    for_each_spatial_point(g, [&](std::size_t, const double* x) {
      double ph = tau * t;
      for (int a = 0; a < g.n; ++a) ph += xi[a] * x[a];
      sp += V(t, x) * std::polar(1.0, -ph);
    });
    acc += rule.weights[k] * sp;
  }
  return acc * g.cell();
}

/// potential_transform at every (tau_k, lattice xi): one spatial FFT per time node. Row k
/// holds tau = taus[k] over the spatial mode lattice.
inline std::vector<std::vector<cplx>> potential_transform_table(const PotentialFn& V, const SpatialGrid& g, double T,
                                                                const std::vector<double>& taus, int panels = 16) {
  const auto rule = composite_gauss_legendre(0.0, T, panels, 8);
  std::vector<std::vector<cplx>> out(taus.size(), std::vector<cplx>(g.size()));
  std::vector<cplx> shift(g.size());
  const double rootN = std::sqrt(static_cast<double>(g.size()));
  for_each_spatial_mode(g, {0.0, 0.0, 0.0}, [&](std::size_t i, const double* xi) {
    double ph = 0.0;
    for (int a = 0; a < g.n; ++a) ph += xi[a] * g.box;
    shift[i] = rootN * g.cell() * std::polar(1.0, ph);
  });
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double t = rule.nodes[k];
    SpatialField F = sample(g, [&](const double* x) { return V(t, x); });
    fft::transform_inplace(F.data.data(), g.dims(), 1, fft::Direction::forward);
    for (std::size_t m = 0; m < taus.size(); ++m) {
      const cplx w = rule.weights[k] * std::polar(1.0, -taus[m] * t);
      for (std::size_t i = 0; i < g.size(); ++i) out[m][i] += w * shift[i] * F[i];
    }
  }
  return out;
}

/// Row-major index of a lattice frequency.
inline std::size_t mode_index(const SpatialGrid& g, const Vec3& xi) {
  const double dk = g.axis().dfreq();
  std::size_t idx = 0;
  for (int a = 0; a < g.n; ++a) {
    const long k = std::lround(xi[a] / dk);
    idx = idx * g.pts + static_cast<std::size_t>((k % g.pts + g.pts) % g.pts);
  }
  return idx;
}

// ---------------------------------------------------------------------------------------------
// Reconstruction

struct ReconstructionConfig {
  SpatialGrid grid{2, 4.0, 64};
  BornSettings born;
  double freq_radius = 8.0;  ///< retained box |xi| <= radius
  int tau_modes = 2;         ///< tau = 2 pi k / T, |k| <= tau_modes
  int time_pts = 16;         ///< time samples of V_est
  int workers = 1;
};

struct ReconstructionResult {
  std::vector<FreqSample> samples;
  std::vector<cplx> truth;  ///< reference transform per sample (empty without a truth)
  double relative_error = 0.0;
  bool born_regime = true;
  double sup_V = 0.0;
  Field V_est;  ///< on [0, T] x box; time lattice shifted by T/2 (grid time t maps to t + T/2)
};

/// Lattice frequencies with |xi| <= radius, in lexicographic mode order.
inline std::vector<Vec3> frequency_box(const SpatialGrid& g, double radius) {
  std::vector<Vec3> out;
  for_each_spatial_mode(g, {0.0, 0.0, 0.0}, [&](std::size_t, const double* xi) {
    Vec3 v{0.0, 0.0, 0.0};
    for (int a = 0; a < g.n; ++a) v[a] = xi[a];
    if (std::sqrt(dot3(v, v, g.n)) <= radius + 1e-12) out.push_back(v);
  });
  return out;
}

namespace recon_detail {

/// V_est(t, x) = sum c(tau, xi) e^{i(tau t + xi.x)} / (T (2X)^n) on the shifted time lattice.
inline Field synthesize(const std::vector<FreqSample>& S, const SpatialGrid& g, double T, int time_pts) {
  GridSpec spec{g.n, 0.5 * T, g.box, time_pts, g.pts};
  Field out(spec);
  const double norm = 1.0 / (T * std::pow(2.0 * g.box, g.n));
  std::vector<double> taus;
  for (const auto& s : S)
    if (std::find(taus.begin(), taus.end(), s.tau) == taus.end()) taus.push_back(s.tau);
  const double rootN = std::sqrt(static_cast<double>(g.size()));
  for (double tau : taus) {
    SpatialField F(g);
    for (const auto& s : S) {
      if (s.tau != tau) continue;
      double ph = 0.0;
      for (int a = 0; a < g.n; ++a) ph += s.xi[a] * g.box;
      F[mode_index(g, s.xi)] = rootN * s.amplitude * std::polar(1.0, -ph);
    }
    fft::transform_inplace(F.data.data(), g.dims(), 1, fft::Direction::inverse);
    const Axis ta = spec.time_axis();
    for (int jt = 0; jt < time_pts; ++jt) {
      const cplx e = std::polar(norm, tau * (ta.coord(jt) + 0.5 * T));
      const std::size_t base = static_cast<std::size_t>(jt) * g.size();
      for (std::size_t i = 0; i < g.size(); ++i) out[base + i] += e * F[i];
    }
  }
  return out;
}

}  // namespace recon_detail

/// Born samples over {tau_k} x {|xi| <= radius}. xi = 0 is filled by continuity: the means over
/// the 2n axis neighbours at distance r dk (r = 1, 2, 3 as far as the box allows) are
/// extrapolated to r = 0 by a polynomial in r^2. With `truth`, the relative L2 error against
/// potential_transform over all retained samples is reported.
inline ReconstructionResult reconstruct_potential(const PotentialFn& V, const ReconstructionConfig& c,
                                                  const PotentialFn& truth = nullptr) {
  const auto& g = c.grid;
  if (g.n < 2) throw std::invalid_argument("reconstruct_potential: n must be 2 or 3");
  if (!(c.freq_radius > 0) || c.tau_modes < 0 || c.time_pts < 2 * c.tau_modes + 1)
    throw std::invalid_argument("reconstruct_potential: invalid frequency box");
  const auto P = prepare_potential(V, g, c.born);
  const double T = c.born.T;
  const auto box = frequency_box(g, c.freq_radius);
  struct Target {
    double tau;
    Vec3 xi;
  };
  std::vector<Target> targets;
  for (int k = -c.tau_modes; k <= c.tau_modes; ++k)
    for (const auto& xi : box) targets.push_back({2.0 * pi * k / T, xi});
  ReconstructionResult R;
  R.born_regime = P.born_regime;
  R.sup_V = P.sup;
  R.samples = parallel_map(targets.size(), c.workers, [&](std::size_t i) {
    const auto& tg = targets[i];
    if (dot3(tg.xi, tg.xi, g.n) == 0.0) {
      FreqSample s;
      s.tau = tg.tau;
      s.interpolated = true;
      s.born_regime = P.born_regime;
      return s;
    }
    return born_sample(P, tg.tau, tg.xi);
  });
  const double dk = g.axis().dfreq();
  for (auto& s : R.samples) {
    if (!s.interpolated) continue;
    auto ring = [&](double r) {
      cplx m = 0.0;
      int cnt = 0;
      for (const auto& o : R.samples) {
        if (o.tau != s.tau || o.interpolated) continue;
        for (int a = 0; a < g.n; ++a) {
          Vec3 e{0.0, 0.0, 0.0};
          e[a] = r;
          Vec3 e2 = e;
          e2[a] = -r;
          if (o.xi == e || o.xi == e2) {
            m += o.amplitude;
            ++cnt;
          }
        }
      }
      return cnt == 2 * g.n ? m / double(cnt) : cplx(NAN, NAN);
    };
    // Even-polynomial extrapolation in r^2 through the available rings r = dk, 2 dk, 3 dk.
    std::vector<cplx> m;
    for (int r = 1; r <= 3; ++r) {
      const cplx v = ring(r * dk);
      if (std::isnan(v.real())) break;
      m.push_back(v);
    }
    if (m.empty()) throw std::invalid_argument("reconstruct_potential: box too small for xi = 0");
    cplx acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      double w = 1.0;
      const double si = double((i + 1) * (i + 1));
      for (std::size_t j = 0; j < m.size(); ++j) {
        const double sj = double((j + 1) * (j + 1));
        if (j != i) w *= sj / (sj - si);
      }
      acc += w * m[i];
    }
    s.amplitude = acc;
  }
  if (truth) {
    std::vector<double> taus;
    for (int k = -c.tau_modes; k <= c.tau_modes; ++k) taus.push_back(2.0 * pi * k / T);
    const auto table = potential_transform_table(truth, g, T, taus);
    for (const auto& s : R.samples) {
      const auto k = static_cast<std::size_t>(std::lround(s.tau * T / (2.0 * pi)) + c.tau_modes);
      R.truth.push_back(table[k][mode_index(g, s.xi)]);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < R.samples.size(); ++i) {
      num += std::norm(R.samples[i].amplitude - R.truth[i]);
      den += std::norm(R.truth[i]);
    }
    R.relative_error = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  }
  R.V_est = recon_detail::synthesize(R.samples, g, T, c.time_pts);
  return R;
}

/// Born sample of the single mode eps e^{i xi0.x} at (0, xi0) divided by its exact transform
/// eps T (2X)^n: the probe calibration factor.
inline cplx single_mode_calibration(const SpatialGrid& g, const BornSettings& b, const Vec3& xi0, double eps) {
  const PotentialFn V = [&](double, const double* x) {
    double ph = 0.0;
    for (int a = 0; a < g.n; ++a) ph += xi0[a] * x[a];
    return eps * std::polar(1.0, ph);
  };
  const auto P = prepare_potential(V, g, b);
  return born_sample(P, 0.0, xi0).amplitude / (eps * b.T * std::pow(2.0 * g.box, g.n));
}

inline Json vec_json(const Vec3& v, int n) {
  Json a = Json::array();
  for (int i = 0; i < n; ++i) a.push_back(v[i]);
  return a;
}

inline Json cplx_json(cplx z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const FreqSample& s, int n) {
  Json j;
  j["tau"] = s.tau;
  j["xi"] = vec_json(s.xi, n);
  j["nu"] = vec_json(s.nu, n);
  j["eta"] = vec_json(s.eta, n);
  j["kappa"] = vec_json(s.kappa, n);
  j["amplitude"] = cplx_json(s.amplitude);
  j["born_regime"] = s.born_regime;
  j["interpolated"] = s.interpolated;
  return j;
}

}  // namespace cgolab
