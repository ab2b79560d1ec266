#include "config.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace cgolab;
using namespace cgolab::cli;

namespace {

enum Exit { exit_pass = 0, exit_verdict = 1, exit_usage = 2, exit_numerical = 3 };

/// Artifacts of one run, written by a single writer after all computation has finished.
struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;
  bool pass = true;

  void text(const std::string& name, std::string content) { files.emplace_back(name, std::move(content)); }
  void json(const std::string& name, const Json& j) { text(name, dump_stable(j)); }
  void report(const std::string& name, const EstimateReport& r, const std::string& hash) {
    json(name + ".json", to_json(r, hash));
    text(name + ".csv", report_csv(r));
    pass = pass && r.pass;
  }
  void field(const std::string& name, const Field& f) {
    std::ostringstream os(std::ios::binary);
    write_field(os, f);
    text(name, os.str());
  }
};

void write_all(const std::filesystem::path& dir, const Artifacts& a) {
  for (const auto& [name, content] : a.files) write_text(dir / name, content);
}

std::string num(double v) { return fmt_double(v); }

SpatialField packet(const SpatialGrid& g, const PacketConfig& p) {
  return sample(g, [&](const double* x) {
    double e = 0.0, ph = 0.0;
    for (int a = 0; a < g.n; ++a) {
      e -= (x[a] - p.x0[a]) * (x[a] - p.x0[a]) / (2 * p.width * p.width);
      ph += p.k0[a] * x[a];
    }
    return std::exp(e) * std::polar(1.0, ph);
  });
}

PotentialFn bump(int n, const BumpConfig& b) {
  if (b.eps == 0.0) return nullptr;
  return gaussian_bump(n, b.eps, b.width, b.t0, b.sigma);
}

TimeSampling sampling(const std::string& s) { return s == "cell_average" ? TimeSampling::cell_average : TimeSampling::midpoint; }

// ---------------------------------------------------------------------------------------------
// Commands

Artifacts verify_strichartz(const ExperimentConfig& c, const std::string& hash) {
  Artifacts a;
  const auto rep = c.strichartz.estimate == "local_smoothing" ? local_smoothing_check(c.strichartz) : run_sweep(c.strichartz);
  a.report("report", rep, hash);
  return a;
}

Artifacts kernel_table(const ExperimentConfig& c, const std::string& hash) {
  const auto& k = c.kernel_table;
  Artifacts a;
  EstimateReport rep;
  rep.estimate = "kernel_sigma";
  rep.rule = VerdictRule::max_le_ceiling;
  rep.ceiling = k.ceiling;
  rep.grid = Json{{"sigma", k.sigma}, {"x_min", k.x_min}, {"x_max", k.x_max}, {"points", k.points}, {"tol", k.tol}};
  std::vector<std::vector<std::string>> rows;
  auto xs = [&](int pts) {
    std::vector<double> v;
    for (int i = 0; i < pts; ++i) v.push_back(pts == 1 ? k.x_min : k.x_min + (k.x_max - k.x_min) * i / (pts - 1));
    return v;
  };
  auto sup = [&](int pts) {
    double m = 0.0;
    for (double s : k.sigma)
      for (double x : xs(pts)) m = std::max(m, std::abs(eval_K_sigma(s, x).value));
    return m;
  };
  const auto per_sigma = parallel_map(k.sigma.size(), c.workers, [&](std::size_t i) {
    std::vector<std::pair<KernelSample, KernelSample>> out;
    for (double x : xs(k.points)) out.emplace_back(eval_K_sigma(k.sigma[i], x), eval_K_sigma_quadrature(k.sigma[i], x, k.tol));
    return out;
  });
  for (std::size_t i = 0; i < k.sigma.size(); ++i) {
    const auto x = xs(k.points);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto& [cf, qd] = per_sigma[i][j];
      for (const auto* s : {&cf, &qd})
        rows.push_back({num(k.sigma[i]), num(x[j]), num(s->value.real()), num(s->value.imag()), to_string(s->method),
                        num(s->err_est)});
      rep.rows.push_back({"K_sigma", "sigma=" + num(k.sigma[i]), 0,
                          Json{{"x", x[j]}, {"case", cf.label}, {"quadrature_err_est", qd.err_est}},
                          std::abs(cf.value - qd.value)});
    }
  }
  const double s1 = sup(k.points), s2 = sup(2 * k.points);
  rep.diagnostics = Json{{"sup_abs", s1}, {"sup_abs_refined", s2}, {"sup_refinement_ratio", s1 / s2}};
  rep.finalize();
  a.text("kernel_table.csv", to_csv({"parameter", "argument", "re", "im", "method", "err_est"}, rows));
  a.report("report", rep, hash);
  return a;
}

Artifacts bs_norm_sweep(const ExperimentConfig& c, const std::string& hash, bool& non_converged) {
  const auto& s = c.bs_sweep;
  s.grid.validate(c.max_points);
  const Potential P = make_potential(s.potential, s.grid);
  auto rep = bs_decay_sweep(P, s.nu, s.tol, s.max_iter, c.workers, s.ceiling);
  rep.diagnostics = Json{{"potential", s.potential.kind}, {"decay_diagnostic", decay_diagnostic(P)},
                         {"V_hash", field_hash(P.V)}};
  Artifacts a;
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : rep.rows) {
    const bool conv = r.params.at("converged").get<bool>();
    non_converged = non_converged || !conv;
    rows.push_back({num(r.params.at("nu").get<double>()), num(r.params.at("lambda").get<double>()), num(r.ratio),
                    std::to_string(r.params.at("iterations").get<int>()), conv ? "true" : "false"});
  }
  a.text("bs_norm.csv", to_csv({"nu", "lambda", "norm_estimate", "iterations", "converged"}, rows));
  a.field("V.cglf", P.V);
  a.report("report", rep, hash);
  return a;
}

Artifacts cgo_build_cmd(const ExperimentConfig& c, const std::string& hash) {
  const auto& s = c.cgo;
  s.grid.validate(c.max_points);
  const Potential P = make_potential(s.potential, s.grid);
  const int axis = s.grid.n - 1;
  const auto psi0 = gaussian_wave_packet(s.grid.spatial(), NuVector::along(s.grid.n, axis, s.nu.front()),
                                         s.packet_center, s.packet_width);
  auto rep = remainder_decay_sweep(P, psi0, s.nu, s.tol, s.ceiling, c.workers);
  const Field W = build_W(P.V);
  rep.diagnostics = Json{{"smallest_accepted_nu", smallest_accepted_nu(W, axis, s.nu_candidates, s.rho_max)},
                         {"nu_candidates", s.nu_candidates},
                         {"rho_max", s.rho_max}};
  Artifacts a;
  Json sols = Json::array();
  for (double nu : s.nu) {
    WavePacket psi = psi0;
    psi.nu = NuVector::along(s.grid.n, axis, nu);
    const auto sol = cgo_build(P, psi, s.tol, s.rho_max);
    sols.push_back(to_json(sol, P.V));
    a.field("uflat_nu=" + num(nu) + ".cglf", sol.uflat);
    a.field("v_nu=" + num(nu) + ".cglf", sol.v);
  }
  a.json("solutions.json", Json{{"config_hash", hash}, {"grid", grid_json(s.grid)}, {"solutions", sols}});
  a.report("report", rep, hash);
  return a;
}

Artifacts forward_evolve(const ExperimentConfig& c, const std::string& hash) {
  const auto& s = c.forward;
  SolverSettings st;
  st.steps = s.steps;
  st.sampling = sampling(s.sampling);
  st.record_every = s.record_every;
  const auto V = bump(s.grid.n, s.potential);
  const auto f = packet(s.grid, s.initial);
  const auto tr = evolve(V, f, s.T, st);
  // Slices at t_j = j T / (S - 1) stored on the shifted lattice: t = coord(j) + box_time.
  const int S = static_cast<int>(tr.slices.size());
  const double dt_rec = S > 1 ? s.T / (S - 1) : s.T;
  GridSpec g{s.grid.n, 0.5 * S * dt_rec, s.grid.box, S, s.grid.pts};
  Field traj(g);
  for (int j = 0; j < S; ++j) set_time_slice(traj, j, tr.slices[j]);
  Artifacts a;
  a.field("trajectory.cglf", traj);
  std::ostringstream csv;
  write_slice_csv(csv, tr.final_state());
  a.text("final_state.csv", csv.str());
  a.json("trajectory.json", Json{{"config_hash", hash},
                                 {"potential_hash", V ? potential_hash(V, s.grid, s.T, s.steps) : "zero"},
                                 {"times", tr.times},
                                 {"mass0", tr.mass0},
                                 {"max_mass_drift", tr.max_mass_drift},
                                 {"max_boundary_fraction", tr.max_boundary_fraction},
                                 {"aliasing_warning", tr.aliasing_warning},
                                 {"final_norm", quad_l2(tr.final_state())}});
  return a;
}

Artifacts identity_check(const ExperimentConfig& c, const std::string& hash) {
  const auto& s = c.identity;
  const auto V1 = bump(s.grid.n, s.potential1), V2 = bump(s.grid.n, s.potential2);
  const auto f = packet(s.grid, s.f), g = packet(s.grid, s.g);
  EstimateReport rep;
  rep.estimate = "integral_identity";
  rep.rule = VerdictRule::max_le_ceiling;
  rep.ceiling = s.ceiling;
  rep.grid = Json{{"n", s.grid.n}, {"box", s.grid.box}, {"pts", s.grid.pts}, {"T", s.T}, {"steps", s.steps}};
  const auto res = parallel_map(s.steps.size(), c.workers, [&](std::size_t i) {
    return integral_identity_check(V1, V2, f, g, s.T, static_cast<int>(s.steps[i]));
  });
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < res.size(); ++i) {
    const auto& r = res[i];
    rep.rows.push_back({"identity", "steps=" + num(s.steps[i]), 0,
                        Json{{"steps", static_cast<int>(s.steps[i])}, {"lhs_re", r.lhs.real()}, {"lhs_im", r.lhs.imag()},
                             {"rhs_re", r.rhs.real()}, {"rhs_im", r.rhs.imag()}, {"residual", r.residual},
                             {"scale", r.scale}},
                        r.normalized});
    rows.push_back({num(s.steps[i]), num(r.lhs.real()), num(r.lhs.imag()), num(r.rhs.real()), num(r.rhs.imag()),
                    num(r.residual), num(r.normalized)});
  }
  Json diag = Json::object();
  if (res.size() >= 2 && res.back().residual > 0) {
    const double ratio = res[res.size() - 2].residual / res.back().residual;
    const double step_ratio = s.steps.back() / s.steps[s.steps.size() - 2];
    diag["residual_ratio"] = ratio;
    diag["observed_order"] = std::log(ratio) / std::log(step_ratio);
  }
  rep.diagnostics = diag;
  rep.finalize();
  Artifacts a;
  a.text("identity.csv", to_csv({"steps", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "residual", "normalized"}, rows));
  a.report("report", rep, hash);
  return a;
}

Artifacts reconstruct_cmd(const ExperimentConfig& c, const std::string& hash) {
  const auto& s = c.reconstruct;
  ReconstructionConfig rc;
  rc.grid = s.grid;
  rc.born.T = s.T;
  rc.born.steps = s.steps;
  rc.born.sampling = sampling(s.sampling);
  rc.born.born_threshold = s.born_threshold;
  rc.freq_radius = s.freq_radius;
  rc.tau_modes = s.tau_modes;
  rc.time_pts = s.time_pts;
  rc.workers = c.workers;
  Json grid{{"n", s.grid.n}, {"box", s.grid.box}, {"pts", s.grid.pts}, {"T", s.T}, {"steps", s.steps},
            {"freq_radius", s.freq_radius}, {"tau_modes", s.tau_modes}};
  EstimateReport err, trend;
  err.estimate = "reconstruction_error";
  err.rule = VerdictRule::max_le_ceiling;
  err.ceiling = s.ceiling;
  trend.estimate = "reconstruction_trend";
  trend.rule = VerdictRule::increasing_growth_ge;  // error strictly increasing with eps
  trend.ceiling = 1.0;
  err.grid = trend.grid = grid;
  std::vector<double> eps = s.eps;
  std::sort(eps.begin(), eps.end());
  Artifacts a;
  Vec3 xi0{0.0, 0.0, 0.0};
  xi0[0] = 2 * s.grid.axis().dfreq();
  const cplx calib = single_mode_calibration(s.grid, rc.born, xi0, eps.front());
  for (double e : eps) {
    const auto V = gaussian_bump(s.grid.n, e, s.width, 0.5 * s.T, s.sigma);
    const auto R = reconstruct_potential(V, rc, V);
    Json params{{"eps", e}, {"born_regime", R.born_regime}, {"sup_V", R.sup_V}, {"samples", R.samples.size()}};
    err.rows.push_back({"relative_error", "eps=" + num(e), 0, params, R.relative_error});
    trend.rows.push_back({"relative_error", "eps=" + num(e), 0, params, R.relative_error});
    Json samples = Json::array();
    for (std::size_t i = 0; i < R.samples.size(); ++i) {
      Json j = to_json(R.samples[i], s.grid.n);
      j["truth"] = cplx_json(R.truth[i]);
      samples.push_back(j);
    }
    a.json("samples_eps=" + num(e) + ".json", Json{{"config_hash", hash}, {"eps", e}, {"samples", samples}});
    a.field("V_est_eps=" + num(e) + ".cglf", R.V_est);
  }
  const Json diag{{"calibration_xi", vec_json(xi0, s.grid.n)}, {"calibration", cplx_json(calib)}};
  err.diagnostics = trend.diagnostics = diag;
  err.finalize();
  trend.finalize();
  a.report("report", err, hash);
  a.report("trend", trend, hash);
  return a;
}

Artifacts counterexample_sweep(const ExperimentConfig& c, const std::string& hash) {
  const auto r = embedding_ratio_sweep(c.counterexample);
  Artifacts a;
  a.report("report", r.divergence, hash);
  a.report("control", r.control, hash);
  Json plot = Json::object();
  for (const auto* rep : {&r.divergence, &r.control}) {
    std::map<std::string, std::vector<std::vector<std::string>>> per;
    for (const auto& row : rep->rows) {
      per[row.series].push_back({num(row.params.at("rho").get<double>()), num(row.params.at("mixed_norm").get<double>()),
                                 num(row.params.at("bourgain_norm").get<double>()), num(row.ratio)});
      auto& p = plot[row.series];
      const double rho = row.params.at("rho").get<double>();
      p["rho"].push_back(rho);
      p["ratio"].push_back(row.ratio);
      p["loglog_18rho"].push_back(std::log(std::log(18 * rho)));
    }
    for (const auto& [series, rows] : per)
      a.text("counterexample_" + series + ".csv", to_csv({"rho", "mixed_norm", "bourgain_norm", "ratio"}, rows));
  }
  a.json("plot_data.json", plot);
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cgolab: numerical laboratory for conjugated Schrodinger multipliers, CGO solutions and Born reconstruction"};
  app.require_subcommand(1);
  std::string config_path;
  bool dry_run = false;
  const std::vector<std::string> commands{"verify-strichartz", "kernel-table",    "bs-norm-sweep", "cgo-build",
                                          "forward-evolve",    "identity-check", "reconstruct",   "counterexample-sweep"};
  for (const auto& name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("config", config_path, "YAML experiment config")->required();
    sub->add_flag("--dry-run", dry_run, "print the resolved config and exit without writing files");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_pass : exit_usage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig c;
  try {
    c = load_config(config_path);
  } catch (const ConfigError& e) {
    for (const auto& item : e.items) std::cerr << "config error: " << item << "\n";
    return exit_usage;
  }
  if (const char* env = std::getenv("CGOLAB_OUT_DIR"); env && *env) {
    c.output_dir = env;
    c.resolved["output_dir"] = c.output_dir;
  }
  const std::string hash = config_hash(c);
  if (dry_run) {
    std::cout << dump_stable(Json{{"command", command}, {"config_hash", hash}, {"config", c.resolved}});
    return exit_pass;
  }

  const auto start = std::chrono::steady_clock::now();
  Artifacts a;
  bool non_converged = false;
  try {
    if (command == "verify-strichartz") a = verify_strichartz(c, hash);
    else if (command == "kernel-table") a = kernel_table(c, hash);
    else if (command == "bs-norm-sweep") a = bs_norm_sweep(c, hash, non_converged);
    else if (command == "cgo-build") a = cgo_build_cmd(c, hash);
    else if (command == "forward-evolve") a = forward_evolve(c, hash);
    else if (command == "identity-check") a = identity_check(c, hash);
    else if (command == "reconstruct") a = reconstruct_cmd(c, hash);
    else a = counterexample_sweep(c, hash);
  } catch (const NotContractive& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const NoConvergence& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const ResourceBudgetExceeded& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_usage;
  }
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::filesystem::path dir = std::filesystem::path(c.output_dir) / command;
  // The output location is not part of the experiment; leaving it out keeps reruns into other directories identical.
  Json recorded = c.resolved;
  recorded.erase("output_dir");
  a.json("config.resolved.json", Json{{"command", command}, {"config_hash", hash}, {"config", recorded}});
  try {
    write_all(dir, a);
    // Wall time lives in a sidecar so that reports stay byte-identical across reruns.
    write_json(dir / "timing.json", Json{{"command", command}, {"runtime_s", runtime}, {"workers", c.workers}});
  } catch (const std::exception& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_verdict;
  }
  std::cout << command << ": " << (a.pass ? "pass" : "fail") << " (" << dir.string() << ")\n";
  if (non_converged) {
    std::cerr << "numerical failure: power iteration did not converge for every nu\n";
    return exit_numerical;
  }
  return a.pass ? exit_pass : exit_verdict;
}
