#pragma once

#include "cgolab/birman_schwinger.hpp"

#include <cstring>
#include <sstream>

namespace cgolab {

struct NotContractive : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// psi on the frequency hyperplane H = {xi_axis = 0} of an axis-aligned nu, sampled on the
/// spatial frequency lattice of `grid` (axes other than `axis`, row-major, FFT order).
struct WavePacket {
  NuVector nu;
  SpatialGrid grid;
  std::vector<cplx> psi;

  int axis() const { return nu.aligned_axis(); }
  int dim() const { return grid.n - 1; }
  double dk() const { return grid.axis().dfreq(); }
  std::size_t count() const {
    std::size_t c = 1;
    for (int a = 0; a < dim(); ++a) c *= static_cast<std::size_t>(grid.pts);
    return c;
  }
  /// Frequency vector (full n components, zero along the nu axis) of hyperplane mode m.
  std::array<double, 3> mode(std::size_t m) const {
    std::array<double, 3> xi{0.0, 0.0, 0.0};
    for (int a = grid.n - 1; a >= 0; --a) {
      if (a == axis()) continue;
      xi[static_cast<std::size_t>(a)] = grid.axis().freq(static_cast<int>(m % static_cast<std::size_t>(grid.pts)));
      m /= static_cast<std::size_t>(grid.pts);
    }
    return xi;
  }
  /// ||psi||_{L^2(H)}.
  double norm() const {
    double s = 0.0;
    for (const auto& z : psi) s += std::norm(z);
    return std::sqrt(s * std::pow(dk(), dim()));
  }
};

inline void validate(const WavePacket& w) {
  if (w.axis() < 0) throw std::invalid_argument("wave packet: nu must be axis-aligned");
  if (w.nu.dim() != w.grid.n) throw std::invalid_argument("wave packet: nu dimension does not match the grid");
  if (w.psi.size() != w.count()) throw std::invalid_argument("wave packet: psi size does not match the hyperplane lattice");
  if (!(w.norm() > 0)) throw std::invalid_argument("wave packet: psi vanishes");
}

/// Gaussian psi(xi) = exp(-|xi - center|^2 / (2 width^2)) on H (the nu component of center is ignored).
inline WavePacket gaussian_wave_packet(const SpatialGrid& g, const NuVector& nu, const std::array<double, 3>& center,
                                       double width) {
  WavePacket w{nu, g, {}};
  if (w.axis() < 0) throw std::invalid_argument("wave packet: nu must be axis-aligned");
  w.psi.resize(w.count());
  for (std::size_t m = 0; m < w.psi.size(); ++m) {
    const auto xi = w.mode(m);
    double d2 = 0.0;
    for (int a = 0; a < g.n; ++a)
      if (a != w.axis()) d2 += (xi[a] - center[a]) * (xi[a] - center[a]);
    w.psi[m] = std::exp(-d2 / (2 * width * width));
  }
  return w;
}

/// u#(t, x) = (2 pi)^{-(n-1)/2} int_H e^{i x.xi - i t |xi|^2} psi(xi) d sigma, as the lattice sum.
/// Independent of the nu coordinate.
inline Field wave_packet_usharp(const WavePacket& w, const GridSpec& g) {
  validate(w);
  if (!(g.spatial() == w.grid)) throw std::invalid_argument("wave packet: grid mismatch");
  const int n = g.n, axis = w.axis(), d = w.dim();
  const double c = std::pow(w.dk(), d) / std::pow(2 * pi, 0.5 * d);
  const std::size_t M = w.count();
  std::vector<std::array<double, 3>> modes(M);
  std::vector<double> k2(M);
  for (std::size_t m = 0; m < M; ++m) {
    modes[m] = w.mode(m);
    k2[m] = norm_sq(modes[m].data(), n);
  }
  Field u(g);
  const std::size_t ns = g.spatial_size();
  std::vector<cplx> ph(M);
  for (int jt = 0; jt < g.pts_time; ++jt) {
    const double t = g.time_axis().coord(jt);
    for (std::size_t m = 0; m < M; ++m) ph[m] = w.psi[m] * std::polar(c, -t * k2[m]);
    // Sum over hyperplane points (nu coordinate fixed at its first plane), then broadcast.
    std::vector<cplx> plane(ns, cplx(0.0));
    for_each_spatial_point(g.spatial(), [&](std::size_t i, const double* x) {
      if (nearest_plane(g.space_axis(), x[axis]) != 0) return;
      cplx acc = 0.0;
      for (std::size_t m = 0; m < M; ++m) {
        double p = 0.0;
        for (int a = 0; a < n; ++a) p += modes[m][a] * x[a];
        acc += ph[m] * std::polar(1.0, p);
      }
      plane[i] = acc;
    });
    std::size_t stride = 1;
    for (int a = n - 1; a > axis; --a) stride *= static_cast<std::size_t>(g.pts_space);
    for (std::size_t i = 0; i < ns; ++i) {
      const std::size_t j = (i / stride) % static_cast<std::size_t>(g.pts_space);
      u[jt * ns + i] = plane[i - j * stride];
    }
  }
  return u;
}

struct NeumannDiagnostics {
  double rho = 0.0;             ///< op_norm estimate of M_W S_nu M_|W|
  int terms = 0;
  double residual = 0.0;        ///< ||(Id - BS) v - W u#||_2 / ||W u#||_2, by direct substitution
  double tail_bound = 0.0;      ///< rho^terms / (1 - rho)
  bool rho_converged = false;
  bool starts_agree = true;
};

struct NeumannResult {
  Field v;
  NeumannDiagnostics diag;
};

/// Solves (Id - M_W S_nu M_|W|) v = W u# by the Neumann series, summed until the geometric tail
/// bound rho^k / (1 - rho) is below tol. Throws NotContractive if rho > rho_max.
inline NeumannResult solve_v_neumann(const Field& W, const Field& usharp, const NuVector& nu, double tol,
                                     double rho_max = 0.9, int max_terms = 200) {
  if (!(tol > 0)) throw std::invalid_argument("solve_v_neumann: tol must be positive");
  const Field aW = modulus(W);
  const BSOperator A(W, aW, nu);
  NeumannResult out{Field(W.spec), {}};
  const Field b = pointwise(W, usharp);
  const double nb = l2(b);
  const auto on = op_norm_of(
      W.spec, [&](const Field& v) { return A.apply(v); }, [&](const Field& v) { return A.apply_adjoint(v); }, 1e-10,
      500);
  out.diag.rho = on.estimate;
  out.diag.rho_converged = on.converged;
  out.diag.starts_agree = on.starts_agree;
  if (nb == 0) return out;
  if (!(on.estimate <= rho_max))
    throw NotContractive("Birman-Schwinger norm " + fmt_double(on.estimate) + " exceeds " + fmt_double(rho_max) +
                         "; |nu| too small");
  const double rho = on.estimate;
  Field term = b, v = b;
  int k = 1;
  while (std::pow(rho, k) / (1 - rho) > tol) {
    if (k >= max_terms) throw NoConvergence("Neumann series did not reach tol within max_terms");
    term = A.apply(term);
    v = v + term;
    ++k;
  }
  out.v = v;
  out.diag.terms = k;
  out.diag.tail_bound = std::pow(rho, k) / (1 - rho);
  out.diag.residual = l2(v - A.apply(v) - b) / nb;
  return out;
}

/// u_flat = S_nu(|W| v).
inline Field build_uflat(const Field& W, const Field& v, const NuVector& nu) {
  return apply_S_nu(pointwise(modulus(W), v), nu);
}

struct CgoSolution {
  NuVector nu;
  WavePacket psi;
  Field usharp;
  Field v;
  Field uflat;
  NeumannDiagnostics diag;
  double equation_residual = 0.0;  ///< flat-variable residual in the linked (q,r) norm
  double tol = 0.0;
};

/// ||(i d_t + Delta + 2 nu.grad - V) u_flat - V u#||_{q,r} / ||V u#||_{q,r}, with the conjugated
/// operator applied spectrally to u_flat and the free equation of u# used exactly.
inline double uflat_equation_residual(const Field& V, const Field& usharp, const Field& uflat, const NuVector& nu,
                                      const Exponent& q, const Exponent& r) {
  const Field Pu = apply_conjugated_operator(uflat, nu, default_offset_S_nu(uflat.spec, nu));
  const Field rhs = pointwise(V, usharp);
  const Field res = Pu - pointwise(V, uflat) - rhs;
  const double den = mixed_norm(rhs, q, r);
  return den > 0 ? mixed_norm(res, q, r) / den : mixed_norm(res, q, r);
}

/// Residual of the full solution u = e^phi (u# + u_flat), phi = i|nu|^2 t + nu.x, restricted to
/// |x| <= radius: (i d_t + Delta - V) u = e^phi (P_nu - V)(u# + u_flat), evaluated in flat
/// variables and weighted by e^{nu.x} (the unimodular factor drops out of the norms).
inline double full_solution_residual(const Field& V, const Field& usharp, const Field& uflat, const NuVector& nu,
                                     double radius) {
  const Field Pu = apply_conjugated_operator(uflat, nu, default_offset_S_nu(uflat.spec, nu));
  const Field flat = Pu - pointwise(V, usharp + uflat);
  double num = 0.0, den = 0.0;
  for_each_point(V.spec, [&](std::size_t i, double, const double* x) {
    double r2 = 0.0, nx = 0.0;
    for (int a = 0; a < V.spec.n; ++a) {
      r2 += x[a] * x[a];
      nx += nu[a] * x[a];
    }
    if (r2 > radius * radius) return;
    const double e = std::exp(2 * nx);
    if (!std::isfinite(e)) throw std::overflow_error("e^{nu.x} not representable on the residual window");
    num += e * std::norm(flat[i]);
    den += e * std::norm(V[i] * (usharp[i] + uflat[i]));
  });
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Builds the CGO solution for W = build_W(V) and the packet psi.
inline CgoSolution cgo_build(const Potential& P, const WavePacket& psi, double tol, double rho_max = 0.9) {
  const Field W = build_W(P.V);
  CgoSolution s;
  s.nu = psi.nu;
  s.psi = psi;
  s.tol = tol;
  s.usharp = wave_packet_usharp(psi, P.V.spec);
  auto nr = solve_v_neumann(W, s.usharp, psi.nu, tol, rho_max);
  s.v = std::move(nr.v);
  s.diag = nr.diag;
  s.uflat = build_uflat(W, s.v, psi.nu);
  const auto linked = potential_pair_check(P.a, P.b, P.V.spec.n).linked;
  s.equation_residual = uflat_equation_residual(P.V, s.usharp, s.uflat, psi.nu, linked.q, linked.r);
  return s;
}

/// ||W u_flat||_2 / ||psi||_2 per nu (rule: last <= ceiling * first), with ||W u#||_2 / ||psi||_2,
/// rho and the Neumann diagnostics in the row parameters.
inline EstimateReport remainder_decay_sweep(const Potential& P, const WavePacket& psi0, const std::vector<double>& nus,
                                            double tol = 1e-8, double ceiling = 0.5, int workers = 1) {
  EstimateReport rep;
  rep.estimate = "cgo_remainder";
  rep.rule = VerdictRule::decay_le_ceiling;
  rep.ceiling = ceiling;
  rep.grid = Json{{"grid", grid_json(P.V.spec)}, {"axis", psi0.axis()}, {"tol", tol}};
  const Field W = build_W(P.V);
  const auto rows = parallel_map(nus.size(), workers, [&](std::size_t k) {
    WavePacket psi = psi0;
    psi.nu = NuVector::along(P.V.spec.n, psi0.axis(), nus[k]);
    const double npsi = psi.norm();
    const Field us = wave_packet_usharp(psi, P.V.spec);
    const auto nr = solve_v_neumann(W, us, psi.nu, tol);
    const Field uf = build_uflat(W, nr.v, psi.nu);
    Json params{{"nu", nus[k]},
                {"rho", nr.diag.rho},
                {"terms", nr.diag.terms},
                {"neumann_residual", nr.diag.residual},
                {"leading_ratio", quad_l2(pointwise(W, us)) / npsi}};
    return ReportRow{"remainder", "nu=" + fmt_double(nus[k]), 0, params, quad_l2(pointwise(W, uf)) / npsi};
  });
  rep.rows = rows;
  rep.finalize();
  return rep;
}

/// Smallest |nu| in `candidates` (ascending) accepted by the contraction threshold, or -1.
inline double smallest_accepted_nu(const Field& W, int axis, const std::vector<double>& candidates,
                                   double rho_max = 0.9) {
  for (double c : candidates)
    if (op_norm(W, modulus(W), NuVector::along(W.spec.n, axis, c), 1e-10, 500).estimate <= rho_max) return c;
  return -1.0;
}

/// Continuous-in-time extension of a potential living on [t0, t1]: V(t0, .) and V(t1, .) are
/// ramped linearly to zero over a quarter of the window length on either side.
inline Field endpoint_extension(const Field& V, double t0, double t1) {
  if (!(t1 > t0)) throw std::invalid_argument("endpoint_extension: t1 > t0 required");
  const GridSpec& g = V.spec;
  const double L = 0.25 * (t1 - t0);
  const std::size_t ns = g.spatial_size();
  int j0 = -1, j1 = -1;
  for (int jt = 0; jt < g.pts_time; ++jt) {
    const double t = g.time_axis().coord(jt);
    if (t >= t0 && t <= t1) {
      if (j0 < 0) j0 = jt;
      j1 = jt;
    }
  }
  if (j0 < 0) throw std::invalid_argument("endpoint_extension: window contains no time sample");
  const double ta = g.time_axis().coord(j0), tb = g.time_axis().coord(j1);
  Field E(g);
  for (int jt = 0; jt < g.pts_time; ++jt) {
    const double t = g.time_axis().coord(jt);
    int src = jt;
    double w = 1.0;
    if (jt < j0) {
      src = j0;
      w = std::max(0.0, 1.0 - (ta - t) / L);
    } else if (jt > j1) {
      src = j1;
      w = std::max(0.0, 1.0 - (t - tb) / L);
    }
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < ns; ++i) E[jt * ns + i] = w * V[src * ns + i];
  }
  return E;
}

/// Hash of the sampled values of a field (provenance).
inline std::string field_hash(const Field& f) {
  std::string bytes(f.size() * sizeof(cplx), '\0');
  std::memcpy(bytes.data(), f.data.data(), bytes.size());
  return fnv1a_hex(bytes);
}

inline Json to_json(const CgoSolution& s, const Field& V) {
  Json nu = Json::array();
  for (int a = 0; a < s.nu.dim(); ++a) nu.push_back(s.nu[a]);
  return Json{{"nu", nu},
              {"V_hash", field_hash(V)},
              {"psi_hash", fnv1a_hex(std::string(reinterpret_cast<const char*>(s.psi.psi.data()),
                                                 s.psi.psi.size() * sizeof(cplx)))},
              {"psi_norm", s.psi.norm()},
              {"tol", s.tol},
              {"rho", s.diag.rho},
              {"rho_converged", s.diag.rho_converged},
              {"neumann_terms", s.diag.terms},
              {"neumann_residual", s.diag.residual},
              {"tail_bound", s.diag.tail_bound},
              {"equation_residual", s.equation_residual},
              {"usharp_norm", quad_l2(s.usharp)},
              {"uflat_norm", quad_l2(s.uflat)},
              {"v_norm", quad_l2(s.v)}};
}

}  // namespace cgolab
