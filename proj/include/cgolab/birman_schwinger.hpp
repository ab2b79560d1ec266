#pragma once

#include "cgolab/estimates.hpp"
#include "cgolab/multipliers.hpp"
#include "cgolab/report.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace cgolab {

/// Sampled potential with its support data and Lebesgue pair (a, b).
struct Potential {
  Field V;
  double R = 1.0;             ///< spatial support radius used by the splitting
  double t_lo = -1.0;         ///< time support window
  double t_hi = 1.0;
  Exponent a = Exponent(2);
  Exponent b = Exponent(2);
};

/// Checks the pair and that V vanishes outside the time window.
inline void validate(const Potential& P) {
  const auto v = potential_pair_check(P.a, P.b, P.V.spec.n);
  if (!v.admissible) throw std::invalid_argument("potential pair (a,b): " + v.reason);
  if (!(P.R > 0)) throw std::invalid_argument("R: must be positive");
  double outside = 0.0;
  for_each_point(P.V.spec, [&](std::size_t i, double t, const double*) {
    if (t < P.t_lo || t > P.t_hi) outside = std::max(outside, std::abs(P.V[i]));
  });
  if (outside > 0) throw std::invalid_argument("V: nonzero outside the time support window");
}

/// sup over axes of sum_s ||1_{|x|>R} V||_{L^inf(R x {x_axis = s})} ds.
inline double decay_diagnostic(const Potential& P) {
  const GridSpec& g = P.V.spec;
  const int N = g.pts_space;
  double best = 0.0;
  for (int axis = 0; axis < g.n; ++axis) {
    std::vector<double> mx(static_cast<std::size_t>(N), 0.0);
    for_each_point(g, [&](std::size_t i, double, const double* x) {
      double r2 = 0.0;
      for (int a = 0; a < g.n; ++a) r2 += x[a] * x[a];
      if (r2 <= P.R * P.R) return;
      const int j = nearest_plane(g.space_axis(), x[axis]);
      mx[static_cast<std::size_t>(j)] = std::max(mx[static_cast<std::size_t>(j)], std::abs(P.V[i]));
    });
    double s = 0.0;
    for (double v : mx) s += v;
    best = std::max(best, s * g.dx());
  }
  return best;
}

/// W = V / |V|^{1/2}, zero where V = 0; |W| W = V.
inline Field build_W(const Field& V) {
  Field W = V;
  for (auto& z : W.data) {
    const double m = std::abs(z);
    z = m > 0 ? z / std::sqrt(m) : cplx(0.0);
  }
  return W;
}

inline Field modulus(const Field& W) {
  Field A = W;
  for (auto& z : A.data) z = std::abs(z);
  return A;
}

inline Field conj(const Field& W) {
  Field A = W;
  for (auto& z : A.data) z = std::conj(z);
  return A;
}

inline Field pointwise(const Field& a, const Field& b) {
  if (!(a.spec == b.spec)) throw std::invalid_argument("pointwise product: grids differ");
  Field c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
  return c;
}

/// A = M_{W1} S_nu M_{W2} on a fixed lattice, with its L^2 adjoint M_{conj W2} S_nu^* M_{conj W1}.
struct BSOperator {
  MultiplierPlan plan;
  Field W1;
  Field W2;

  BSOperator(const Field& w1, const Field& w2, const NuVector& nu, double rel_floor = 1e-12)
      : plan(plan_S_nu(w1.spec, nu, rel_floor)), W1(w1), W2(w2) {
    if (!(w1.spec == w2.spec)) throw std::invalid_argument("BS operator: weight grids differ");
  }
  Field apply(const Field& v) const { return pointwise(W1, cgolab::apply(plan, pointwise(W2, v))); }
  Field apply_adjoint(const Field& v) const {
    return pointwise(conj(W2), cgolab::apply_adjoint(plan, pointwise(conj(W1), v)));
  }
};

inline Field apply_BS(const Field& v, const Field& W1, const Field& W2, const NuVector& nu) {
  if (!(v.spec == W1.spec)) throw std::invalid_argument("apply_BS: grids differ");
  return BSOperator(W1, W2, nu).apply(v);
}

struct OpNormResult {
  double estimate = 0.0;
  int iterations = 0;
  bool converged = false;
  double second_estimate = 0.0;  ///< from an independent start
  bool starts_agree = true;      ///< within 2%
};

namespace bs_detail {

inline Field random_start(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  Field x(g);
  for (auto& z : x.data) z = {N(rng), N(rng)};
  return x;
}

/// Power iteration on A^* A from x; returns sqrt of the Rayleigh quotient.
template <class Apply, class ApplyAdj>
OpNormResult power(Apply&& A, ApplyAdj&& Astar, Field x, double tol, int max_iter) {
  OpNormResult r;
  double nx = l2(x);
  if (nx == 0) return r;
  x = scaled(x, cplx(1.0 / nx));
  double prev = -1.0;
  for (int k = 1; k <= max_iter; ++k) {
    const Field Ax = A(x);
    const double lam = std::pow(l2(Ax), 2);  // Rayleigh quotient of A^*A at unit x
    r.estimate = std::sqrt(lam);
    r.iterations = k;
    if (lam == 0) {
      r.converged = true;
      return r;
    }
    if (prev >= 0 && std::abs(lam - prev) <= tol * lam) {
      r.converged = true;
      return r;
    }
    prev = lam;
    Field y = Astar(Ax);
    const double ny = l2(y);
    if (ny == 0) {
      r.converged = true;
      return r;
    }
    x = scaled(y, cplx(1.0 / ny));
  }
  return r;
}

}  // namespace bs_detail

/// ||A|| by power iteration on A^*A, stopped when the relative Rayleigh-quotient change is below
/// tol or after max_iter steps; a second fixed-seed start is run and compared.
template <class Apply, class ApplyAdj>
OpNormResult op_norm_of(const GridSpec& g, Apply&& A, ApplyAdj&& Astar, double tol = 1e-8, int max_iter = 200,
                        std::uint64_t seed = 12345) {
  if (!(tol > 0)) throw std::invalid_argument("op_norm: tol must be positive");
  auto r = bs_detail::power(A, Astar, bs_detail::random_start(g, seed), tol, max_iter);
  const auto r2 = bs_detail::power(A, Astar, bs_detail::random_start(g, derive_seed(seed, 1)), tol, max_iter);
  r.second_estimate = r2.estimate;
  const double hi = std::max(r.estimate, r2.estimate);
  r.starts_agree = hi == 0 || std::abs(r.estimate - r2.estimate) <= 0.02 * hi;
  r.estimate = hi;
  r.converged = r.converged && r2.converged;
  return r;
}

inline OpNormResult op_norm(const Field& W1, const Field& W2, const NuVector& nu, double tol = 1e-8,
                            int max_iter = 200) {
  const BSOperator A(W1, W2, nu);
  return op_norm_of(
      W1.spec, [&](const Field& v) { return A.apply(v); }, [&](const Field& v) { return A.apply_adjoint(v); }, tol,
      max_iter);
}

/// Norm of the adjoint configuration, computed by iterating on A A^*.
inline OpNormResult op_norm_adjoint(const Field& W1, const Field& W2, const NuVector& nu, double tol = 1e-8,
                                    int max_iter = 200) {
  const BSOperator A(W1, W2, nu);
  return op_norm_of(
      W1.spec, [&](const Field& v) { return A.apply_adjoint(v); }, [&](const Field& v) { return A.apply(v); }, tol,
      max_iter);
}

/// W = W_sharp + W_flat with W_sharp = 1_{|x|<=R} 1_{|W|<=lambda} W + 1_{|x|>R} W.
struct SplitW {
  Field sharp;
  Field flat;
};

inline SplitW split_W(const Field& W, double lambda, double R) {
  if (!(lambda >= 0) || !(R > 0)) throw std::invalid_argument("split_W: lambda >= 0 and R > 0 required");
  SplitW s{W, Field(W.spec)};
  for_each_point(W.spec, [&](std::size_t i, double, const double* x) {
    double r2 = 0.0;
    for (int a = 0; a < W.spec.n; ++a) r2 += x[a] * x[a];
    if (r2 <= R * R && std::abs(W[i]) > lambda) {
      s.flat[i] = W[i];
      s.sharp[i] = 0.0;
    }
  });
  return s;
}

/// (sum_s ||1_{|x|>R} |W|^2||_{L^inf(R x H_s)} ds)^{1/2} along `axis`; R <= 0 gives the full field.
inline double line_sup_norm(const Field& W, int axis, double R = 0.0) {
  const GridSpec& g = W.spec;
  std::vector<double> mx(static_cast<std::size_t>(g.pts_space), 0.0);
  for_each_point(g, [&](std::size_t i, double, const double* x) {
    double r2 = 0.0;
    for (int a = 0; a < g.n; ++a) r2 += x[a] * x[a];
    if (R > 0 && r2 <= R * R) return;
    const auto j = static_cast<std::size_t>(nearest_plane(g.space_axis(), x[axis]));
    mx[j] = std::max(mx[j], std::norm(W[i]));
  });
  double s = 0.0;
  for (double v : mx) s += v;
  return std::sqrt(s * g.dx());
}

/// The splitting bound lambda (2R)^{1/2} + (int ||1_{>R} |W|^2||_{L^inf(slice)} ds)^{1/2}.
inline double split_sharp_bound(const Field& W, double lambda, double R, int axis) {
  return lambda * std::sqrt(2 * R) + line_sup_norm(W, axis, R);
}

/// Piecewise-constant-in-time approximant of W on m uniform blocks of [t_lo, t_hi] (block means),
/// zero outside the window.
inline Field piecewise_constant_in_time(const Field& W, double t_lo, double t_hi, int m) {
  if (m < 1 || !(t_hi > t_lo)) throw std::invalid_argument("partition: m >= 1 and t_hi > t_lo required");
  const GridSpec& g = W.spec;
  const std::size_t ns = g.spatial_size();
  const auto block = [&](double t) {
    if (t < t_lo || t > t_hi) return -1;
    return std::min(m - 1, static_cast<int>((t - t_lo) / (t_hi - t_lo) * m));
  };
  std::vector<std::vector<cplx>> sum(static_cast<std::size_t>(m), std::vector<cplx>(ns));
  std::vector<int> cnt(static_cast<std::size_t>(m), 0);
  for (int jt = 0; jt < g.pts_time; ++jt) {
    const int b = block(g.time_axis().coord(jt));
    if (b < 0) continue;
    ++cnt[b];
    for (std::size_t i = 0; i < ns; ++i) sum[b][i] += W[jt * ns + i];
  }
  Field out(g);
  for (int jt = 0; jt < g.pts_time; ++jt) {
    const int b = block(g.time_axis().coord(jt));
    if (b < 0 || cnt[b] == 0) continue;
    for (std::size_t i = 0; i < ns; ++i) out[jt * ns + i] = sum[b][i] / static_cast<double>(cnt[b]);
  }
  return out;
}

struct TimePartition {
  int m = 0;
  double error = 0.0;  ///< sup_t ||W(t) - W_m(t)||_{L^n}
  Field approximant;
};

/// Smallest m (doubling from 1) with sup_t ||W(t) - W_m(t)||_{L^n} <= eps, capped by the number
/// of time samples in the window.
inline TimePartition time_partition_for(const Field& W, double t_lo, double t_hi, double eps) {
  const GridSpec& g = W.spec;
  TimePartition tp;
  for (int m = 1;; m *= 2) {
    tp.m = m;
    tp.approximant = piecewise_constant_in_time(W, t_lo, t_hi, m);
    const Field d = W - tp.approximant;
    tp.error = mixed_norm(d, Exponent::infinity(), Exponent(g.n));
    if (tp.error <= eps || m >= g.pts_time) return tp;
  }
}

/// Per-nu norm estimates of M_W S_nu M_|W| with the splitting annotation lambda^2 = |nu|^{1/2}:
/// the two terms (lambda^2 + 1)/|nu| and ||1_{|W|>lambda} |W|^2||_{a,b}^{1/2}.
inline EstimateReport bs_decay_sweep(const Potential& P, const std::vector<double>& nus, double tol = 1e-8,
                                     int max_iter = 200, int workers = 1, double ceiling = 0.5) {
  EstimateReport rep;
  rep.estimate = "bs_decay";
  rep.rule = VerdictRule::decay_le_ceiling;
  rep.ceiling = ceiling;
  rep.grid = Json{{"grid", grid_json(P.V.spec)}, {"R", P.R}, {"a", P.a.str()}, {"b", P.b.str()}};
  if (nus.empty()) {
    rep.finalize();
    return rep;
  }
  const Field W = build_W(P.V);
  const Field aW = modulus(W);
  const int axis = P.V.spec.n - 1;
  const auto rows = parallel_map(nus.size(), workers, [&](std::size_t k) {
    const double nu = nus[k];
    const auto r = op_norm(W, aW, NuVector::along(P.V.spec.n, axis, nu), tol, max_iter);
    const double lambda = std::pow(nu, 0.25);
    const auto sp = split_W(W, lambda, P.R);
    const double flat = std::sqrt(mixed_norm(pointwise(modulus(sp.flat), modulus(sp.flat)), P.a, P.b));
    Json params{{"nu", nu},
                {"lambda", lambda},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"starts_agree", r.starts_agree},
                {"bound_small_part", (lambda * lambda + 1) / nu},
                {"bound_large_part", flat}};
    return ReportRow{"bs", "nu=" + fmt_double(nu), 0, params, r.estimate};
  });
  rep.rows = rows;
  rep.finalize();
  return rep;
}

}  // namespace cgolab
