#pragma once

#include "cgolab/estimates.hpp"
#include "cgolab/forward.hpp"
#include "cgolab/parallel.hpp"
#include "cgolab/quadrature.hpp"
#include "cgolab/report.hpp"
#include "cgolab/symbols.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgolab {

// ---------------------------------------------------------------------------------------------
// Time profiles

/// Smooth radial cutoff: 1 for r <= a, 0 for r >= b, C^infinity in between.
inline double smooth_cutoff(double r, double a, double b) {
  r = std::abs(r);
  if (r <= a) return 1.0;
  if (r >= b) return 0.0;
  auto psi = [](double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; };
  const double u = psi(b - r), v = psi(r - a);
  return u / (u + v);
}

/// chi(t) log log(1/|t|) with chi = 1 on |t| <= 1/(2e) and supported in |t| < 1/e: the
/// restriction to the line of the two-dimensional log log function (continuous away from 0,
/// so its trace is the restriction). +inf at t = 0.
inline double loglog_profile(double t) {
  const double a = std::abs(t);
  if (a == 0.0) return std::numeric_limits<double>::infinity();
  const double e = std::exp(1.0);
  if (a >= 1.0 / e) return 0.0;
  return smooth_cutoff(a, 0.5 / e, 1.0 / e) * std::log(std::log(1.0 / a));
}

/// Even, real time profile g.
struct TimeProfile {
  std::string kind;  ///< loglog | gaussian
  std::function<double(double)> fn;
  double support = std::numeric_limits<double>::infinity();  ///< g = 0 for |t| >= support
  bool singular_at_zero = false;
};

inline TimeProfile loglog_time_profile() { return {"loglog", loglog_profile, 1.0 / std::exp(1.0), true}; }

/// exp(-t^2 / (2 sigma^2)), treated as supported in |t| < 12 sigma.
inline TimeProfile gaussian_time_profile(double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("gaussian profile: sigma must be positive");
  return {"gaussian", [sigma](double t) { return std::exp(-t * t / (2 * sigma * sigma)); }, 12.0 * sigma, false};
}

/// (1/w) int_{-w/2}^{w/2} g: geometric Gauss-Legendre panels toward the singular point.
inline double cell_average_at_zero(const TimeProfile& g, double w) {
  const auto& rule = gauss_legendre(12);
  double acc = 0.0;
  double hi = 0.5 * w;
  for (int k = 0; k < 80; ++k) {
    const double lo = 0.5 * hi;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[i];
      acc += 0.5 * (hi - lo) * rule.weights[i] * g.fn(t);
    }
    hi = lo;
  }
  return 2.0 * acc / w;
}

/// Lattice samples of g(scale * t) on `ax`; a singular sample at t = 0 is replaced by the
/// cell average.
inline std::vector<double> sample_profile(const TimeProfile& g, const Axis& ax, double scale = 1.0) {
  std::vector<double> out(static_cast<std::size_t>(ax.pts));
  for (int j = 0; j < ax.pts; ++j) {
    const double t = ax.coord(j);
    out[j] = (t == 0.0 && g.singular_at_zero) ? cell_average_at_zero(g, scale * ax.step()) : g.fn(scale * t);
  }
  return out;
}

/// |g^(tau_k)|^2 quadrature weights on the frequency lattice: int |g^|^2 w ~ sum weight_k w(tau_k).
struct ProfileSpectrum {
  std::vector<double> tau, weight;

  /// int |sigma + i b| |g^(sigma)|^2 d sigma.
  double G(double b) const {
    double s = 0.0;
    for (std::size_t k = 0; k < tau.size(); ++k) s += weight[k] * std::hypot(tau[k], b);
    return s;
  }
};

inline ProfileSpectrum profile_spectrum(const std::vector<double>& samples, const Axis& ax) {
  std::vector<cplx> z(samples.begin(), samples.end());
  fft::transform_inplace(z.data(), {ax.pts}, 1, fft::Direction::forward);
  ProfileSpectrum s;
  for (int k = 0; k < ax.pts; ++k) {
    s.tau.push_back(ax.freq(k));
    s.weight.push_back(ax.step() * std::norm(z[k]));
  }
  return s;
}

/// Inhomogeneous H^{1/2} norm ||<tau>^{1/2} g^||_2.
inline double h_half_norm(const ProfileSpectrum& s) { return std::sqrt(s.G(1.0)); }

struct LogLogParams {
  double box = 1.0;       ///< lattice on [-box, box)
  int pts = 1 << 14;
  double delta_min = 1e-3;
};

struct LogLogTrace {
  LogLogParams params;
  Axis axis;
  std::vector<double> g;
  ProfileSpectrum spectrum;
  double h_half = 0.0;
  /// min over delta in [delta_min, 1/(2e)] and lattice |t| < delta of g(t) - log log(1/delta).
  double lower_bound_slack = 0.0;
};

inline LogLogTrace build_loglog_trace(const LogLogParams& p) {
  const double e = std::exp(1.0);
  if (p.pts < 8 || !is_power_of_two(p.pts)) throw std::invalid_argument("loglog trace: pts must be a power of two >= 8");
  if (!(p.box >= 1.0 / e)) throw std::invalid_argument("loglog trace: box must contain the support |t| < 1/e");
  if (!(p.delta_min > 0 && p.delta_min <= 0.5 / e)) throw std::invalid_argument("loglog trace: delta_min outside (0, 1/(2e)]");
  LogLogTrace tr;
  tr.params = p;
  tr.axis = {p.pts, p.box};
  if (tr.axis.step() > 0.25 * p.delta_min)
    throw std::invalid_argument("loglog trace: lattice step " + fmt_double(tr.axis.step()) + " does not resolve delta_min");
  tr.g = sample_profile(loglog_time_profile(), tr.axis);
  tr.spectrum = profile_spectrum(tr.g, tr.axis);
  tr.h_half = h_half_norm(tr.spectrum);
  tr.lower_bound_slack = std::numeric_limits<double>::infinity();
  for (double d = p.delta_min; d <= 0.5 / e * (1 + 1e-12); d *= 1.25) {
    const double bound = std::log(std::log(1.0 / d));
    for (int j = 0; j < p.pts; ++j)
      if (std::abs(tr.axis.coord(j)) < d) tr.lower_bound_slack = std::min(tr.lower_bound_slack, tr.g[j] - bound);
  }
  return tr;
}

// ---------------------------------------------------------------------------------------------
// Dispersed spatial profiles

enum class SpatialProfile { disc, gaussian };

inline const char* to_string(SpatialProfile p) { return p == SpatialProfile::disc ? "disc" : "gaussian"; }

/// Gaussian profile exp(-|zeta|^2 / (2 a^2)) with this a.
inline constexpr double gaussian_profile_width = 0.5;

inline double profile_value(SpatialProfile p, const double* z, int n) {
  const double z2 = fwd_detail::norm_sq(z, n);
  if (p == SpatialProfile::disc) return z2 < 1.0 ? 1.0 : 0.0;
  return std::exp(-z2 / (2 * gaussian_profile_width * gaussian_profile_width));
}

/// ||profile||_2^2.
inline double profile_mass(SpatialProfile p, int n) {
  if (p == SpatialProfile::disc) return n == 1 ? 2.0 : pi;
  return std::pow(pi * gaussian_profile_width * gaussian_profile_width, 0.5 * n);
}

inline int next_smooth(int v) {
  for (;; ++v) {
    int m = v;
    for (int p : {2, 3, 5})
      while (m % p == 0) m /= p;
    if (m == 1) return v;
  }
}

/// W(s) = ||w(s)||_{L^r}, w(s, x) = (2 pi)^{-n/2} int e^{i x.zeta + i s |zeta|^2} f^(zeta) dzeta
/// for a unit profile f^ (n = 1, 2). The Gaussian profile has the closed form
/// W = (2|b|)^{-n/2} (4 pi |b|^2 / (r Re b))^{n/(2r)}, b = 1/(2a^2) - i s. The disc is computed on
/// a periodic lattice with box X = 2|s| + margin and spacing dx for |s| <= s_max, and by the
/// far-field form (2|s|)^{-n/2} |B_{2|s|}|^{1/r} beyond. Values are cached per s.
class DispersedNorm {
 public:
  DispersedNorm(int n, SpatialProfile prof, Exponent r, double s_max = 400.0, double dx = 1.25, double margin = 64.0)
      : n_(n), prof_(prof), r_(r), s_max_(s_max), dx_(dx), margin_(margin) {
    if (n < 1 || n > 2) throw std::invalid_argument("dispersed norm: n must be 1 or 2");
    if (!(dx > 0 && dx < pi / 1.05)) throw std::invalid_argument("dispersed norm: dx must resolve the unit disc");
  }

  int dim() const { return n_; }
  SpatialProfile profile() const { return prof_; }
  double s_max() const { return s_max_; }

  double operator()(double s) const {
    s = std::abs(s);
    {
      std::lock_guard lock(m_);
      auto it = cache_.find(s);
      if (it != cache_.end()) return it->second;
    }
    const double v = compute(s);
    std::lock_guard lock(m_);
    cache_.emplace(s, v);
    return v;
  }

  /// Fills the cache for `nodes` with `workers` threads (values do not depend on the order).
  void prefetch(std::vector<double> nodes, int workers) const {
    for (auto& s : nodes) s = std::abs(s);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    // Expensive (large s) nodes first for better load balance.
    std::reverse(nodes.begin(), nodes.end());
    parallel_map(nodes.size(), workers, [&](std::size_t i) { return (*this)(nodes[i]); });
  }

  /// True when W(s) comes from the far-field form.
  bool asymptotic(double s) const { return prof_ == SpatialProfile::disc && std::abs(s) > s_max_; }

 private:
  double compute(double s) const {
    const double rv = r_.value();
    if (prof_ == SpatialProfile::gaussian) {
      const cplx b(1.0 / (2 * gaussian_profile_width * gaussian_profile_width), -s);
      const double base = std::pow(2 * std::abs(b), -0.5 * n_);
      if (r_.is_infinite()) return base;
      return base * std::pow(4 * pi * std::norm(b) / (rv * b.real()), n_ / (2 * rv));
    }
    if (s > s_max_) {
      const double R = 2 * s;
      const double ball = n_ == 1 ? 2 * R : pi * R * R;
      return std::pow(R, -0.5 * n_) * (r_.is_infinite() ? 1.0 : std::pow(ball, 1.0 / rv));
    }
    const double X = 2 * s + margin_;
    const int N = next_smooth(static_cast<int>(std::ceil(2 * X / dx_)));
    const double h = 2 * X / N;
    const Axis ax{N, X};
    const double dk = ax.dfreq();
    const std::size_t M = n_ == 1 ? std::size_t(N) : std::size_t(N) * N;
    std::vector<cplx> F(M);
    for (std::size_t i = 0; i < M; ++i) {
      double z[2] = {ax.freq(static_cast<int>(n_ == 1 ? i : i / N)), n_ == 2 ? ax.freq(static_cast<int>(i % N)) : 0.0};
      F[i] = profile_value(prof_, z, n_) * std::polar(1.0, s * fwd_detail::norm_sq(z, n_));
    }
    fft::transform_inplace(F.data(), std::vector<int>(static_cast<std::size_t>(n_), N), 1, fft::Direction::inverse);
    const double c = std::pow(2 * pi, -0.5 * n_) * std::pow(dk, n_) * std::sqrt(double(M));
    if (r_.is_infinite()) {
      double m = 0.0;
      for (const auto& z : F) m = std::max(m, std::abs(z));
      return c * m;
    }
    double acc = 0.0;
    for (const auto& z : F) acc += std::pow(std::abs(z), rv);
    return c * std::pow(acc * std::pow(h, n_), 1.0 / rv);
  }

  int n_;
  SpatialProfile prof_;
  Exponent r_;
  double s_max_, dx_, margin_;
  mutable std::mutex m_;
  mutable std::map<double, double> cache_;
};

// ---------------------------------------------------------------------------------------------
// Factored norms of u^(tau, xi) = g_lambda^(tau - |xi|^2) f_rho^(xi)

struct MixedNormValue {
  double value = 0.0;
  double tail_fraction = 0.0;  ///< share of the q'-th power from the far-field range of W
};

namespace cex_detail {

/// Geometric Gauss-Legendre panels on (0, S]: [S/2, S], [S/4, S/2], ..., plus [0, S 2^-K].
inline QuadratureRule geometric_rule(double S, int K = 48, int pts = 12) {
  const auto& base = gauss_legendre(pts);
  QuadratureRule out;
  double hi = S;
  for (int k = 0; k <= K; ++k) {
    const double lo = k == K ? 0.0 : 0.5 * hi;
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      out.nodes.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * base.nodes[i]);
      out.weights.push_back(0.5 * (hi - lo) * base.weights[i]);
    }
    hi = lo;
  }
  return out;
}

inline double support_in_s(const TimeProfile& g, double lambda) { return lambda * g.support; }

}  // namespace cex_detail

/// Quadrature nodes in s used by factored_mixed_norm for this (g, lambda).
inline std::vector<double> mixed_norm_nodes(const TimeProfile& g, double lambda) {
  return cex_detail::geometric_rule(cex_detail::support_in_s(g, lambda)).nodes;
}

/// ||u||_{L^q' L^r'} for u(t, x) = g(lambda' t) w_rho(t, x), reduced by the exact scaling
/// w_rho(t, x) = rho^{n/2} w_1(rho^2 t, rho x) (the modulation 2 rho e_n only translates |w|):
///   ||u||^q' = 2 int_0^inf |g(s / lambda)|^q' W(s)^q' ds,
/// with lambda = rho for g_rho(t) = g(rho t) and lambda = rho^2 for an unscaled g. The rho
/// powers cancel because 2/q' = n/2 - n/r'.
inline MixedNormValue factored_mixed_norm(const TimeProfile& g, double lambda, const DispersedNorm& W, const Exponent& qd) {
  if (qd.is_infinite()) throw std::invalid_argument("factored mixed norm: q' = inf is infinite for unbounded g");
  const double qv = qd.value();
  const auto rule = cex_detail::geometric_rule(cex_detail::support_in_s(g, lambda));
  double total = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double s = rule.nodes[i];
    const double v = rule.weights[i] * std::pow(std::abs(g.fn(s / lambda)) * W(s), qv);
    total += v;
    if (W.asymptotic(s)) tail += v;
  }
  return {std::pow(2.0 * total, 1.0 / qv), total > 0 ? tail / total : 0.0};
}

/// sqrt(int |f_1^(zeta)|^2 G(b0 + zeta_n) dzeta) with G from the spectrum: the homogeneous
/// |p|^{1/2} norm of the shifted family (b0 = 2, f^ centered at 2 rho e_n), reduced by scaling to
/// rho = 1. b0 = 0 gives the same weight for a centered profile.
inline double factored_homogeneous_norm(const ProfileSpectrum& spec, SpatialProfile prof, int n, double b0 = 2.0) {
  const auto& rule = gauss_legendre(48);
  double acc = 0.0;
  if (prof == SpatialProfile::disc) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      if (n == 1) {
        acc += rule.weights[i] * spec.G(b0 + rule.nodes[i]);
      } else {
        // zeta_n = sin(theta): chord length 2 cos(theta), d zeta_n = cos(theta) d theta.
        const double th = 0.5 * pi * rule.nodes[i];
        acc += 0.5 * pi * rule.weights[i] * 2 * std::cos(th) * std::cos(th) * spec.G(std::abs(b0 + std::sin(th)));
      }
    }
  } else {
    const double a = gaussian_profile_width;
    const double L = 8 * a;
    const double cross = std::pow(pi * a * a, 0.5 * (n - 1));
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double y = L * rule.nodes[i];
      acc += L * rule.weights[i] * cross * std::exp(-y * y / (a * a)) * spec.G(std::abs(b0 + y));
    }
  }
  return std::sqrt(acc);
}

/// sqrt(G(1)) ||f_1^||_2: the |Re p + i rho|^{1/2} norm of the shifted family, which is also the
/// <Re p>^{1/2} norm of the centered family with unscaled g (= ||g||_{H^{1/2}} ||1_{<1}||).
inline double factored_shifted_norm(const ProfileSpectrum& spec, SpatialProfile prof, int n) {
  return std::sqrt(spec.G(1.0) * profile_mass(prof, n));
}

// ---------------------------------------------------------------------------------------------
// Field-level family members and norms

enum class RhoKind { shifted, centered };

inline const char* to_string(RhoKind k) { return k == RhoKind::shifted ? "shifted" : "centered"; }

struct RhoFamilyMember {
  double rho = 0.0;
  RhoKind kind = RhoKind::shifted;
  SpatialProfile profile = SpatialProfile::disc;
  SpatialField f_hat;  ///< f_rho^ on the spatial frequency lattice (mode order)
  double f_norm = 0.0;
  Field u;
};

/// u_rho(t, x) = g_rho(t) (2 pi)^{-n/2} int e^{i x.xi + i t |xi|^2} f_rho^(xi) d xi on `grid`, with
/// f_rho^(xi) = rho^{-n/2} profile((xi - c)/rho), c = 2 rho e_n (shifted, g_rho(t) = g(rho t)) or
/// c = 0 (centered, g_rho = g).
inline RhoFamilyMember build_u_rho(double rho, const TimeProfile& g, RhoKind kind, SpatialProfile prof,
                                   const GridSpec& grid) {
  if (!(rho > 0)) throw std::invalid_argument("build_u_rho: rho must be positive");
  const int n = grid.n;
  if (n > 3) throw std::invalid_argument("build_u_rho: n must be at most 3");
  const double reach = (kind == RhoKind::shifted ? 3.0 : 1.0) * rho;
  if (prof == SpatialProfile::disc && grid.space_axis().nyquist() <= reach)
    throw std::invalid_argument("build_u_rho: frequency lattice does not cover |xi| < " + fmt_double(reach));
  RhoFamilyMember m;
  m.rho = rho;
  m.kind = kind;
  m.profile = prof;
  const SpatialGrid sg = grid.spatial();
  m.f_hat = SpatialField(sg);
  const double c_n = kind == RhoKind::shifted ? 2.0 * rho : 0.0;
  std::vector<double> xi2(sg.size());
  for_each_spatial_mode(sg, {0.0, 0.0, 0.0}, [&](std::size_t i, const double* xi) {
    double z[3] = {xi[0] / rho, n > 1 ? xi[1] / rho : 0.0, n > 2 ? xi[2] / rho : 0.0};
    z[n - 1] -= c_n / rho;
    m.f_hat[i] = std::pow(rho, -0.5 * n) * profile_value(prof, z, n);
    xi2[i] = fwd_detail::norm_sq(xi, n);
  });
  const double dk = grid.space_axis().dfreq();
  m.f_norm = l2(m.f_hat) * std::pow(dk, 0.5 * n);
  const auto gs = sample_profile(g, grid.time_axis(), kind == RhoKind::shifted ? rho : 1.0);
  m.u = Field(grid);
  const double c = std::pow(2 * pi, -0.5 * n) * std::pow(dk, n) * std::sqrt(double(sg.size()));
  std::vector<cplx> origin(sg.size());
  for_each_spatial_mode(sg, {0.0, 0.0, 0.0}, [&](std::size_t i, const double* xi) {
    double ph = 0.0;
    for (int a = 0; a < n; ++a) ph -= xi[a] * grid.box_space;
    origin[i] = std::polar(c, ph);
  });
  const Axis ta = grid.time_axis();
  for (int jt = 0; jt < grid.pts_time; ++jt) {
    const double t = ta.coord(jt);
    SpatialField w(sg);
    for (std::size_t i = 0; i < sg.size(); ++i) w[i] = m.f_hat[i] * origin[i] * std::polar(1.0, t * xi2[i]);
    fft::transform_inplace(w.data.data(), sg.dims(), 1, fft::Direction::inverse);
    const std::size_t base = static_cast<std::size_t>(jt) * sg.size();
    for (std::size_t i = 0; i < sg.size(); ++i) m.u[base + i] = gs[jt] * w[i];
  }
  return m;
}

struct BourgainWeight {
  enum Kind { homogeneous, homogeneous_nu, shifted, inhomogeneous } kind = homogeneous;
  double s = 0.5;     ///< power of |p|, |p_nu|, |Re p + i rho|, or b for <Re p>^b
  double rho = 1.0;   ///< shifted
  NuVector nu;        ///< homogeneous_nu

  double operator()(double tau, const double* xi, int n) const {
    switch (kind) {
      case homogeneous: return std::pow(std::abs(eval_p(tau, xi, n)), s);
      case homogeneous_nu: return std::pow(std::abs(eval_p_nu(tau, xi, nu)), s);
      case shifted: return std::pow(std::hypot(tau - fwd_detail::norm_sq(xi, n), rho), s);
      case inhomogeneous: {
        const double re = tau - fwd_detail::norm_sq(xi, n);
        return std::pow(1.0 + re * re, 0.5 * s);
      }
    }
    return 0.0;
  }
};

/// ||weight u^||_{L^2} on the lattice (Plancherel with the quadrature cell).
inline double bourgain_norm(const Field& u, const BourgainWeight& w) {
  Field U = transform(u, fft::Direction::forward);
  double acc = 0.0;
  for_each_mode(u.spec, {}, [&](std::size_t i, double tau, const double* xi) {
    const double m = w(tau, xi, u.spec.n);
    acc += m * m * std::norm(U[i]);
  });
  return std::sqrt(acc * u.spec.cell());
}

/// Largest |u^| off the frequency support of the member (relative to the largest on it):
/// spatial spectra of every time slice must vanish outside |xi - c| < rho.
inline double off_support_fraction(const RhoFamilyMember& m) {
  const SpatialGrid sg = m.u.spec.spatial();
  const int n = sg.n;
  const double c_n = m.kind == RhoKind::shifted ? 2.0 * m.rho : 0.0;
  std::vector<char> inside(sg.size());
  for_each_spatial_mode(sg, {0.0, 0.0, 0.0}, [&](std::size_t i, const double* xi) {
    double z[3] = {xi[0], n > 1 ? xi[1] : 0.0, n > 2 ? xi[2] : 0.0};
    z[n - 1] -= c_n;
    inside[i] = fwd_detail::norm_sq(z, n) < m.rho * m.rho;
  });
  double on = 0.0, off = 0.0;
  for (int jt = 0; jt < m.u.spec.pts_time; ++jt) {
    auto s = time_slice(m.u, jt);
    fft::transform_inplace(s.data.data(), sg.dims(), 1, fft::Direction::forward);
    for (std::size_t i = 0; i < s.size(); ++i) (inside[i] ? on : off) = std::max(inside[i] ? on : off, std::abs(s[i]));
  }
  return on > 0 ? off / on : off;
}

/// Lower-bound constant c(rho) = min |u_rho(t, x)| / (rho^{n/2} log log(18 rho)) over |x| <= 1/(6 rho),
/// |t| <= 1/(18 rho^2) for the shifted disc family with the log log profile, sampled on a
/// 5 x 3^n point grid of the region; w_1 by Gauss-Legendre quadrature over the unit disc.
inline double pointwise_lower_bound(double rho, int n) {
  if (n < 1 || n > 2) throw std::invalid_argument("pointwise_lower_bound: n must be 1 or 2");
  if (!(18 * rho > std::exp(1.0))) throw std::invalid_argument("pointwise_lower_bound: needs 18 rho > e");
  const auto& gl = gauss_legendre(32);
  auto w1 = [&](double s, const double* y) {
    cplx acc = 0.0;
    if (n == 1) {
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double z = 2.0 + gl.nodes[i];
        acc += gl.weights[i] * std::polar(1.0, y[0] * z + s * z * z);
      }
    } else {
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double r = 0.5 * (1.0 + gl.nodes[i]);
        for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
          const double th = pi * (1.0 + gl.nodes[j]);
          const double z0 = r * std::cos(th), z1 = 2.0 + r * std::sin(th);
          acc += 0.5 * gl.weights[i] * pi * gl.weights[j] * r *
                 std::polar(1.0, y[0] * z0 + y[1] * z1 + s * (z0 * z0 + z1 * z1));
        }
      }
    }
    return std::pow(2 * pi, -0.5 * n) * acc;
  };
  const auto g = loglog_time_profile();
  double best = std::numeric_limits<double>::infinity();
  const double T = 1.0 / (18 * rho * rho), R = 1.0 / (6 * rho);
  for (double ft : {-1.0, -0.5, 0.5, 1.0, 1e-6}) {
    const double t = ft * T;
    const int cnt = n == 1 ? 3 : 9;
    for (int k = 0; k < cnt; ++k) {
      double x[2] = {R * ((k % 3) - 1), n == 2 ? R * ((k / 3) - 1) : 0.0};
      double y[2] = {rho * x[0], rho * x[1]};
      const double mod = g.fn(rho * t) * std::pow(rho, 0.5 * n) * std::abs(w1(rho * rho * t, y));
      best = std::min(best, mod);
    }
  }
  return best / (std::pow(rho, 0.5 * n) * std::log(std::log(18 * rho)));
}

// ---------------------------------------------------------------------------------------------
// Sweeps

struct CounterexampleConfig {
  int n = 2;
  Exponent qd{4}, rd{4};  ///< (q', r') with 2/q' = n/2 - n/r'
  std::vector<double> rhos{4, 16, 64, 256, 1024};
  LogLogParams trace;
  double control_sigma = 0.2;  ///< control family: Gaussian time profile width
  double growth_ceiling = 1.15;
  double control_ceiling = 2.0;
  double s_max = 400.0;        ///< W computed on the lattice up to here
  double lattice_dx = 1.25;
  double lattice_margin = 64.0;
  int workers = 1;
};

struct CounterexampleResult {
  EstimateReport divergence;  ///< log log families, strictly increasing with growth >= ceiling
  EstimateReport control;     ///< Gaussian family, spread <= ceiling
  double h_half = 0.0;        ///< ||g||_{H^{1/2}} of the sampled trace
};

/// ratio(rho) = mixed / Bourgain for
///   shifted_homogeneous: f^ = rho^{-n/2} 1_{<rho}(xi - 2 rho e_n), g_rho = g(rho t), ||.||_{X^{1/2}} = |||p|^{1/2} u^||;
///   centered_inhomogeneous: f^ = rho^{-n/2} 1_{<rho}(xi), unscaled g, <Re p>^{1/2} weight;
///   control: the shifted family with Gaussian g and Gaussian profile, homogeneous weight.
/// Both norms are evaluated in factored form (exact rescaling to rho = 1).
inline CounterexampleResult embedding_ratio_sweep(const CounterexampleConfig& c) {
  if (!satisfies_dual_relation(c.qd, c.rd, c.n) || c.qd.recip() > Rational(1, 2) || c.rd.recip() > Rational(1, 2))
    throw std::invalid_argument("counterexample: (q', r') must satisfy 2/q' = n/2 - n/r' with q', r' >= 2");
  if (c.qd.is_infinite()) throw std::invalid_argument("counterexample: q' = inf makes the log log family infinite");
  for (double r : c.rhos)
    if (!(r * 9 >= std::exp(1.0))) throw std::invalid_argument("counterexample: rho must be >= e/9");
  const auto trace = build_loglog_trace(c.trace);
  const auto gl = loglog_time_profile();
  const auto gg = gaussian_time_profile(c.control_sigma);
  const Axis gax{c.trace.pts, c.trace.box};
  const auto gspec = profile_spectrum(sample_profile(gg, gax), gax);
  const DispersedNorm Wd(c.n, SpatialProfile::disc, c.rd, c.s_max, c.lattice_dx, c.lattice_margin);
  const DispersedNorm Wg(c.n, SpatialProfile::gaussian, c.rd);
  {
    std::vector<double> nodes;
    for (double rho : c.rhos) {
      for (double s : mixed_norm_nodes(gl, rho)) nodes.push_back(s);
      for (double s : mixed_norm_nodes(gl, rho * rho))
        if (s <= c.s_max) nodes.push_back(s);
    }
    Wd.prefetch(nodes, c.workers);
  }
  const double bourgain_shifted = factored_homogeneous_norm(trace.spectrum, SpatialProfile::disc, c.n);
  const double shifted_weight = factored_shifted_norm(trace.spectrum, SpatialProfile::disc, c.n);
  const double bourgain_centered = shifted_weight;
  const double bourgain_control = factored_homogeneous_norm(gspec, SpatialProfile::gaussian, c.n);
  const std::string pair = "(" + c.qd.str() + "," + c.rd.str() + ")";
  CounterexampleResult out;
  out.h_half = trace.h_half;
  Json grid{{"n", c.n},
            {"pair", pair},
            {"rhos", c.rhos},
            {"trace_box", c.trace.box},
            {"trace_pts", c.trace.pts},
            {"s_max", c.s_max},
            {"lattice_dx", c.lattice_dx},
            {"lattice_margin", c.lattice_margin}};
  auto make = [&](const std::string& name, VerdictRule rule, double ceiling) {
    EstimateReport r;
    r.estimate = name;
    r.grid = grid;
    r.rule = rule;
    r.ceiling = ceiling;
    return r;
  };
  out.divergence = make("counterexample", VerdictRule::increasing_growth_ge, c.growth_ceiling);
  out.control = make("counterexample_control", VerdictRule::spread_le_ceiling, c.control_ceiling);
  double max_tail = 0.0;
  for (double rho : c.rhos) {
    const std::string group = "rho=" + fmt_double(rho);
    const auto ms = factored_mixed_norm(gl, rho, Wd, c.qd);
    const auto mc = factored_mixed_norm(gl, rho * rho, Wd, c.qd);
    const auto mg = factored_mixed_norm(gg, rho, Wg, c.qd);
    max_tail = std::max({max_tail, ms.tail_fraction, mc.tail_fraction});
    out.divergence.rows.push_back({"shifted_homogeneous", group, 0,
                                   Json{{"rho", rho}, {"mixed_norm", ms.value}, {"bourgain_norm", bourgain_shifted},
                                        {"shifted_weight_norm", shifted_weight}, {"tail_fraction", ms.tail_fraction}},
                                   ms.value / bourgain_shifted});
    out.divergence.rows.push_back({"centered_inhomogeneous", group, 0,
                                   Json{{"rho", rho}, {"mixed_norm", mc.value}, {"bourgain_norm", bourgain_centered},
                                        {"shifted_weight_norm", shifted_weight}, {"tail_fraction", mc.tail_fraction}},
                                   mc.value / bourgain_centered});
    out.control.rows.push_back({"gaussian_shifted_homogeneous", group, 0,
                                Json{{"rho", rho}, {"mixed_norm", mg.value}, {"bourgain_norm", bourgain_control},
                                     {"shifted_weight_norm", factored_shifted_norm(gspec, SpatialProfile::gaussian, c.n)},
                                     {"tail_fraction", mg.tail_fraction}},
                                mg.value / bourgain_control});
  }
  const double equiv = bourgain_shifted / shifted_weight;
  for (auto* r : {&out.divergence, &out.control}) {
    r->diagnostics = Json{{"h_half_norm", trace.h_half},
                          {"trace_lower_bound_slack", trace.lower_bound_slack},
                          {"homogeneous_over_shifted_weight", equiv},
                          {"max_far_field_fraction", max_tail}};
    r->finalize();
  }
  return out;
}

/// |nu|^{1/4} ||u||_{L^2((0,T) x B_R)} / (T^{1/4} R^{1/4} ||u||_{X^{1/2}_nu}) on the lattice.
inline double local_smoothing_ratio(const Field& u, const NuVector& nu, double T, double R) {
  if (!(T > 0 && R > 0)) throw std::invalid_argument("local smoothing: T and R must be positive");
  double acc = 0.0;
  for_each_point(u.spec, [&](std::size_t i, double t, const double* x) {
    if (t >= 0.0 && t < T && fwd_detail::norm_sq(x, u.spec.n) < R * R) acc += std::norm(u[i]);
  });
  const double local = std::sqrt(acc * u.spec.cell());
  BourgainWeight w;
  w.kind = BourgainWeight::homogeneous_nu;
  w.nu = nu;
  const double b = bourgain_norm(u, w);
  if (!(b > 0)) throw std::invalid_argument("local smoothing: u has zero Bourgain norm");
  return std::pow(nu.norm(), 0.25) * local / (std::pow(T, 0.25) * std::pow(R, 0.25) * b);
}

/// Local smoothing sweep over the standard family (natural units per nu, as the Strichartz
/// sweep), T = box_time, R = box_space / 2 on each grid. Rule and ceiling from the config.
inline EstimateReport local_smoothing_check(const SweepConfig& c) {
  if (c.nu.empty()) throw std::invalid_argument("local smoothing: empty nu list");
  c.grid.validate(c.max_points);
  EstimateReport rep;
  rep.estimate = "local_smoothing";
  rep.grid = grid_json(c.grid);
  rep.grid["natural_units"] = c.natural_units;
  rep.grid["samples"] = c.samples;
  rep.grid["hard_cases"] = c.hard_cases;
  rep.grid["seed"] = c.seed;
  rep.grid["nu"] = c.nu;
  rep.rule = c.rule;
  rep.ceiling = c.ceiling;
  const int axis = c.nu_axis < 0 ? c.grid.n - 1 : c.nu_axis;
  auto rows = parallel_map(c.nu.size(), c.workers, [&](std::size_t k) {
    const double nv = c.nu[k];
    const GridSpec g = sweep_grid(c, nv);
    const NuVector nu = NuVector::along(g.n, axis, nv);
    std::vector<ReportRow> out;
    for (int m = 0; m < c.samples + c.hard_cases; ++m) {
      const auto seed = derive_seed(c.seed, k + 1, static_cast<std::uint64_t>(m));
      const auto mem = family_member(g, nu, c.family, seed, m >= c.samples);
      const double r = local_smoothing_ratio(mem.f, nu, g.box_time, 0.5 * g.box_space);
      out.push_back({"local_smoothing", est_detail::nu_label(nv), seed, Json{{"nu", nv}, {"hard", mem.hard}}, r});
    }
    return out;
  });
  for (auto& v : rows)
    for (auto& r : v) rep.rows.push_back(std::move(r));
  rep.finalize();
  return rep;
}

}  // namespace cgolab
