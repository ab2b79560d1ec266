#pragma once

#include "cgolab/families.hpp"
#include "cgolab/multipliers.hpp"
#include "cgolab/parallel.hpp"
#include "cgolab/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgolab {

struct ResourceBudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// splitmix64 finalizer over (base, a, b): independent per-sample seeds.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0x632be59bd9b4e019ull));
}

// ---------------------------------------------------------------------------------------------
// Ratios

/// |nu| sup_s ||S_nu f||_{L^2(R x H_s)} / int ||f||_{L^2(R x H_s)} ds, given Sf = S_nu f.
inline double gain_ratio_from(const Field& f, const Field& Sf, const NuVector& nu) {
  const int axis = nu.aligned_axis();
  if (axis < 0) throw std::invalid_argument("gain_ratio: nu must be axis-aligned");
  const auto hs = hyperplane_norms(Sf, axis);
  const auto hf = hyperplane_norms(f, axis);
  const double den = std::accumulate(hf.begin(), hf.end(), 0.0) * f.spec.dx();
  if (!(den > 0)) throw std::invalid_argument("gain_ratio: f vanishes");
  return nu.norm() * *std::max_element(hs.begin(), hs.end()) / den;
}

inline double gain_ratio(const Field& f, const NuVector& nu) { return gain_ratio_from(f, apply_S_nu(f, nu), nu); }

/// ||S_nu f||_{L^q' L^r'} / ||f||_{L^q L^r}, given Sf = S_nu f.
inline double strichartz_ratio_from(const Field& f, const Field& Sf, const ExponentPair& pair) {
  const auto adm = check_admissible(pair.q, pair.r, pair.n);
  if (!adm.admissible) throw std::invalid_argument("strichartz_ratio: pair not admissible (" + adm.reason + ")");
  if (pair.n != f.spec.n) throw std::invalid_argument("strichartz_ratio: pair dimension does not match the grid");
  const double den = mixed_norm(f, pair.q, pair.r);
  if (!(den > 0)) throw std::invalid_argument("strichartz_ratio: f vanishes");
  return mixed_norm(Sf, adm.dual.q, adm.dual.r) / den;
}

inline double strichartz_ratio(const Field& f, const ExponentPair& pair, const NuVector& nu) {
  return strichartz_ratio_from(f, apply_S_nu(f, nu), pair);
}

/// The same quotient for the adjoint problem on the reflected input: S_nu^* = R S_nu R with R
/// the reflection of the nu axis, so this equals strichartz_ratio(f, pair, nu).
inline double strichartz_ratio_adjoint(const Field& f, const ExponentPair& pair, const NuVector& nu) {
  const int axis = nu.aligned_axis();
  if (axis < 0) throw std::invalid_argument("adjoint check: nu must be axis-aligned");
  const auto plan = plan_S_nu(f.spec, nu);
  const Field Rf = reflect_axis(f, axis + 1, true);
  return strichartz_ratio_from(Rf, apply_adjoint(plan, Rf), pair);
}

/// |s|^{n/2} ||U_s phi||_inf / ||phi||_1.
inline double dispersive_ratio(const SpatialField& phi, double s, bool cutoff = true) {
  if (s == 0.0) throw std::invalid_argument("dispersive_ratio: s = 0 is excluded");
  const double l1 = lebesgue_norm(phi, Exponent(1));
  if (!(l1 > 0)) throw std::invalid_argument("dispersive_ratio: phi vanishes");
  const auto u = apply_U_s(phi, s, cutoff);
  return std::pow(std::abs(s), 0.5 * phi.grid.n) * lebesgue_norm(u, Exponent::infinity()) / l1;
}

// ---------------------------------------------------------------------------------------------
// Test family

struct FamilyParams {
  double spread = 0.2;  ///< centers within spread * box
  double w_lo = 0.06;   ///< widths in [w_lo, w_hi] * box
  double w_hi = 0.15;
  double mod = 0.25;    ///< modulation up to mod * Nyquist
};

struct FamilyMember {
  Field f;
  std::uint64_t seed = 0;
  bool hard = false;
};

/// Gaussian packets with random center, widths and modulation. Hard cases sit near the
/// characteristic set of p_nu: zero frequency along nu and tau = -|xi|^2.
inline FamilyMember family_member(const GridSpec& g, const NuVector& nu, const FamilyParams& fp, std::uint64_t seed,
                                  bool hard) {
  std::mt19937_64 rng(seed);
  auto p = draw_packet(g, rng, fp.spread, fp.w_lo, fp.w_hi, fp.mod, false);
  if (hard) {
    const int axis = nu.dominant_axis();
    p.xi0[static_cast<std::size_t>(axis)] = 0.0;
    double xi2 = 0.0;
    for (int a = 0; a < g.n; ++a) xi2 += p.xi0[a] * p.xi0[a];
    const double cap = 0.5 * g.time_axis().nyquist();
    if (xi2 > cap) {
      const double shrink = std::sqrt(cap / xi2);
      for (int a = 0; a < g.n; ++a) p.xi0[a] *= shrink;
      xi2 = cap;
    }
    p.tau0 = -xi2;
  }
  return {gaussian_packet(g, p), seed, hard};
}

// ---------------------------------------------------------------------------------------------
// Sweeps

struct SweepConfig {
  std::string estimate = "strichartz";  ///< strichartz | gain | dispersive
  GridSpec grid{2, 8.0, 8.0, 64, 64};
  /// Strichartz: grid is in units of length 1/(2|nu|) and time 1/(4|nu|^2) per nu.
  bool natural_units = true;
  std::vector<double> nu{2, 4, 8, 16, 32, 64};
  int nu_axis = -1;  ///< -1: last spatial axis
  std::vector<ExponentPair> pairs;
  int samples = 8;
  int hard_cases = 2;
  FamilyParams family;
  std::vector<double> s_values;  ///< dispersive
  double packet_width = 1.0;     ///< dispersive
  bool cutoff = true;            ///< dispersive
  VerdictRule rule = VerdictRule::spread_le_ceiling;
  double ceiling = 10.0;
  std::uint64_t seed = 1;
  int workers = 1;
  std::size_t max_points = std::size_t(1) << 24;
  double max_runtime_s = 3600.0;
};

/// Grid on which nu-dependent sweeps run.
inline GridSpec sweep_grid(const SweepConfig& c, double nu) {
  GridSpec g = c.grid;
  if (c.natural_units) {
    g.box_time = c.grid.box_time / (4 * nu * nu);
    g.box_space = c.grid.box_space / (2 * nu);
  }
  return g;
}

inline std::string pair_label(const ExponentPair& p) { return "(" + p.q.str() + "," + p.r.str() + ")"; }

inline Json grid_json(const GridSpec& g) {
  return Json{{"n", g.n}, {"box_time", g.box_time}, {"box_space", g.box_space}, {"pts_time", g.pts_time},
              {"pts_space", g.pts_space}};
}

namespace est_detail {

struct Item {
  std::vector<ReportRow> rows;
  double boundary = 0.0;
  std::size_t dropped = 0;
};

inline void check_budget(const SweepConfig& c, std::chrono::steady_clock::time_point start) {
  const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (el > c.max_runtime_s) throw ResourceBudgetExceeded("sweep exceeded max_runtime_s");
}

inline std::string nu_label(double nu) { return "nu=" + fmt_double(nu); }

}  // namespace est_detail

/// Runs a sweep; deterministic in the config (per-sample seeds derive from `seed`).
inline EstimateReport run_sweep(const SweepConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  EstimateReport rep;
  rep.estimate = c.estimate;
  rep.rule = c.rule;
  rep.ceiling = c.ceiling;
  c.grid.validate(c.max_points);
  const int axis = c.nu_axis < 0 ? c.grid.n - 1 : c.nu_axis;
  if (axis >= c.grid.n) throw std::invalid_argument("nu_axis out of range");
  rep.grid = Json{{"base", grid_json(c.grid)}, {"natural_units", c.natural_units}, {"nu_axis", axis},
                  {"samples", c.samples}, {"hard_cases", c.hard_cases}, {"seed", c.seed}};
  Json nus = Json::array();
  for (double v : c.nu) nus.push_back(v);
  rep.grid["nu"] = nus;

  std::vector<est_detail::Item> items;
  if (c.estimate == "strichartz" || c.estimate == "gain") {
    const bool gain = c.estimate == "gain";
    if (!gain) {
      Json ps = Json::array();
      for (const auto& p : c.pairs) {
        if (p.n != c.grid.n) throw std::invalid_argument("pairs: dimension does not match grid.n");
        if (!check_admissible(p.q, p.r, p.n).admissible)
          throw std::invalid_argument("pairs: " + pair_label(p) + " is not admissible");
        ps.push_back(pair_label(p));
      }
      rep.grid["pairs"] = ps;
    }
    if (!gain && c.pairs.empty()) {
      rep.finalize();
      return rep;
    }
    const int per = c.samples + c.hard_cases;
    items = parallel_map(c.nu.size(), c.workers, [&](std::size_t k) {
      est_detail::Item it;
      const double nu_mag = c.nu[k];
      const NuVector nu = NuVector::along(c.grid.n, axis, nu_mag);
      const GridSpec g = sweep_grid(c, nu_mag);
      const auto plan = plan_S_nu(g, nu);
      it.dropped = plan.dropped;
      for (int m = 0; m < per; ++m) {
        est_detail::check_budget(c, start);
        // Gain uses one fixed family for every nu; Strichartz draws per (nu, sample).
        const std::uint64_t seed = gain ? derive_seed(c.seed, 0, m) : derive_seed(c.seed, k + 1, m);
        const auto mem = family_member(g, nu, c.family, seed, m >= c.samples);
        it.boundary = std::max(it.boundary, boundary_mass_fraction(mem.f));
        const Field Sf = apply(plan, mem.f);
        Json params{{"nu", nu_mag}, {"hard", mem.hard}};
        if (gain) {
          it.rows.push_back({"gain", est_detail::nu_label(nu_mag), seed, params, gain_ratio_from(mem.f, Sf, nu)});
        } else {
          for (const auto& p : c.pairs)
            it.rows.push_back({pair_label(p), est_detail::nu_label(nu_mag), seed, params,
                               strichartz_ratio_from(mem.f, Sf, p)});
        }
      }
      return it;
    });
  } else if (c.estimate == "dispersive") {
    const SpatialGrid sg = c.grid.spatial();
    const double w = c.packet_width;
    const SpatialField phi = sample(sg, [&](const double* x) {
      double r2 = 0.0;
      for (int a = 0; a < sg.n; ++a) r2 += x[a] * x[a];
      return cplx(std::exp(-r2 / (2 * w * w)));
    });
    Json ss = Json::array();
    for (double s : c.s_values) ss.push_back(s);
    rep.grid["s"] = ss;
    rep.grid["packet_width"] = w;
    rep.grid["cutoff"] = c.cutoff;
    items = parallel_map(c.s_values.size(), c.workers, [&](std::size_t k) {
      est_detail::check_budget(c, start);
      est_detail::Item it;
      const double s = c.s_values[k];
      it.boundary = boundary_mass_fraction(phi);
      it.rows.push_back({"dispersive", "s=" + fmt_double(s), 0, Json{{"s", s}}, dispersive_ratio(phi, s, c.cutoff)});
      return it;
    });
  } else {
    throw std::invalid_argument("unknown estimate '" + c.estimate + "'");
  }
  double boundary = 0.0;
  std::size_t dropped = 0;
  // Series-major row order, matching the group order of the sweep.
  std::vector<std::string> series_order;
  for (const auto& it : items)
    for (const auto& r : it.rows)
      if (std::find(series_order.begin(), series_order.end(), r.series) == series_order.end())
        series_order.push_back(r.series);
  for (const auto& s : series_order)
    for (const auto& it : items)
      for (const auto& r : it.rows)
        if (r.series == s) rep.rows.push_back(r);
  for (const auto& it : items) {
    boundary = std::max(boundary, it.boundary);
    dropped += it.dropped;
  }
  rep.diagnostics = Json{{"max_boundary_mass_fraction", boundary}, {"dropped_modes", dropped}};
  rep.finalize();
  rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace cgolab
