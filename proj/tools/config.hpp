#pragma once

#include "cgolab/cgolab.hpp"

#include <yaml-cpp/yaml.h>

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cgolab::cli {

/// Every schema violation, each prefixed by its key path.
struct ConfigError : std::runtime_error {
  std::vector<std::string> items;
  explicit ConfigError(std::vector<std::string> v) : std::runtime_error(join(v)), items(std::move(v)) {}
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += x + "\n";
    return s;
  }
};

using Check = std::function<std::string(double)>;  ///< empty string when valid

inline Check positive() {
  return [](double v) { return v > 0 ? "" : "must be positive"; };
}
inline Check nonnegative() {
  return [](double v) { return v >= 0 ? "" : "must be non-negative"; };
}
inline Check at_least(double lo) {
  return [lo](double v) { return v >= lo ? std::string() : "must be >= " + fmt_double(lo); };
}
inline Check power_of_two_ge(int lo) {
  return [lo](double v) {
    const int i = static_cast<int>(v);
    return (i == v && i >= lo && is_power_of_two(i)) ? std::string() : "must be a power of two >= " + std::to_string(lo);
  };
}

/// Typed view of one YAML mapping. Reads record the resolved value (default or given) into
/// `out`; `finish` reports keys that were never read.
class Block {
 public:
  Block(YAML::Node node, std::string path, std::vector<std::string>& errors, Json& out)
      : node_(std::move(node)), path_(std::move(path)), errors_(errors), out_(out) {
    const bool given = node_.IsDefined() && !node_.IsNull();
    if (given && !node_.IsMap()) error("", "must be a mapping");
    present_ = given && node_.IsMap();
  }

  double num(const std::string& key, double def, const Check& check = {}) {
    double v = def;
    if (auto n = get(key)) {
      try {
        v = n->as<double>();
      } catch (const YAML::Exception&) {
        error(key, "must be a number");
      }
    }
    if (check)
      if (auto m = check(v); !m.empty()) error(key, m);
    out_[key] = v;
    return v;
  }

  int integer(const std::string& key, int def, const Check& check = {}) {
    int v = def;
    if (auto n = get(key)) {
      try {
        v = n->as<int>();
      } catch (const YAML::Exception&) {
        error(key, "must be an integer");
      }
    }
    if (check)
      if (auto m = check(v); !m.empty()) error(key, m);
    out_[key] = v;
    return v;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t def) {
    std::uint64_t v = def;
    if (auto n = get(key)) {
      try {
        v = n->as<std::uint64_t>();
      } catch (const YAML::Exception&) {
        error(key, "must be a non-negative integer");
      }
    }
    out_[key] = v;
    return v;
  }

  bool flag(const std::string& key, bool def) {
    bool v = def;
    if (auto n = get(key)) {
      try {
        v = n->as<bool>();
      } catch (const YAML::Exception&) {
        error(key, "must be true or false");
      }
    }
    out_[key] = v;
    return v;
  }

  std::string str(const std::string& key, const std::string& def, const std::vector<std::string>& allowed = {}) {
    std::string v = def;
    if (auto n = get(key)) {
      if (!n->IsScalar()) {
        error(key, "must be a string");
      } else {
        v = n->as<std::string>();
      }
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
      error(key, "must be one of " + opts);
    }
    out_[key] = v;
    return v;
  }

  Exponent exponent(const std::string& key, const Exponent& def) {
    Exponent v = def;
    if (auto n = get(key)) {
      try {
        v = Exponent::parse(n->as<std::string>());
        if (!(v.recip() >= Rational(0) && v.recip() <= Rational(1))) error(key, "exponent must lie in [1, inf]");
      } catch (const std::exception&) {
        error(key, "must be an exponent such as 2, 6/5 or inf");
      }
    }
    out_[key] = v.str();
    return v;
  }

  std::vector<double> nums(const std::string& key, const std::vector<double>& def, const Check& check = {},
                           bool nonempty = false) {
    std::vector<double> v = def;
    if (auto n = get(key)) {
      if (!n->IsSequence()) {
        error(key, "must be a list of numbers");
      } else {
        v.clear();
        for (std::size_t i = 0; i < n->size(); ++i) {
          try {
            v.push_back((*n)[i].as<double>());
          } catch (const YAML::Exception&) {
            error(key + "[" + std::to_string(i) + "]", "must be a number");
          }
        }
      }
    }
    for (std::size_t i = 0; i < v.size() && check; ++i)
      if (auto m = check(v[i]); !m.empty()) error(key + "[" + std::to_string(i) + "]", m);
    if (nonempty && v.empty()) error(key, "must not be empty");
    out_[key] = v;
    return v;
  }

  std::array<double, 3> vec3(const std::string& key, int n) {
    std::array<double, 3> v{0.0, 0.0, 0.0};
    const auto l = nums(key, std::vector<double>(static_cast<std::size_t>(n), 0.0));
    if (static_cast<int>(l.size()) != n) error(key, "must have " + std::to_string(n) + " components");
    for (int a = 0; a < n && a < static_cast<int>(l.size()); ++a) v[a] = l[a];
    return v;
  }

  Block sub(const std::string& key) {
    used_.insert(key);
    out_[key] = Json::object();
    return Block(lookup(key), join(key), errors_, out_[key]);
  }

  /// List of mappings; `each` is called with a block per element.
  void list(const std::string& key, const std::function<void(Block&)>& each, std::size_t default_count,
            const std::function<void(Block&, std::size_t)>& fill_default) {
    used_.insert(key);
    out_[key] = Json::array();
    const YAML::Node n = lookup(key);
    if (!n.IsNull() && !n.IsSequence()) {
      error(key, "must be a list");
      return;
    }
    const bool given = n.IsSequence();
    const std::size_t count = given ? n.size() : default_count;
    for (std::size_t i = 0; i < count; ++i) {
      out_[key].push_back(Json::object());
      Block b(given ? n[i] : YAML::Node(), join(key) + "[" + std::to_string(i) + "]", errors_, out_[key].back());
      if (given)
        each(b);
      else
        fill_default(b, i);
      b.finish();
    }
  }

  void error(const std::string& key, const std::string& msg) {
    errors_.push_back((key.empty() ? path_ : join(key)) + ": " + msg);
  }

  void finish() {
    if (!present_) return;
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (!used_.count(k)) errors_.push_back(join(k) + ": unknown key");
    }
  }

 private:
  /// Child node, or a null node when absent (const lookup never inserts).
  YAML::Node lookup(const std::string& key) const {
    if (!present_) return YAML::Node();
    const YAML::Node& c = node_;
    const YAML::Node n = c[key];
    return n.IsDefined() ? n : YAML::Node();
  }
  std::optional<YAML::Node> get(const std::string& key) {
    used_.insert(key);
    YAML::Node n = lookup(key);
    if (n.IsNull()) return std::nullopt;
    return n;
  }
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node node_;
  bool present_ = false;
  std::string path_;
  std::vector<std::string>& errors_;
  Json& out_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------------------------
// Per-command blocks

struct KernelTableConfig {
  std::vector<double> sigma{-5, -1, -0.1, 0.1, 0.3, 0.5, 2, 10};
  double x_min = -20.0, x_max = 20.0;
  int points = 200;
  double tol = 1e-10;
  double ceiling = 1e-6;
};

struct BsSweepConfig {
  GridSpec grid{2, 4.0, 8.0, 16, 32};
  PotentialSpec potential;
  std::vector<double> nu{4, 8, 16, 32, 64};
  double tol = 1e-8;
  int max_iter = 200;
  double ceiling = 0.5;
};

struct CgoConfig {
  GridSpec grid{2, 4.0, 8.0, 16, 32};
  PotentialSpec potential;
  std::array<double, 3> packet_center{0.0, 0.0, 0.0};
  double packet_width = 1.0;
  std::vector<double> nu{16, 32, 64};
  double tol = 1e-8;
  double rho_max = 0.9;
  double ceiling = 0.5;
  std::vector<double> nu_candidates{2, 4, 8, 16, 32, 64};
};

struct BumpConfig {
  double eps = 0.5, width = 1.0, t0 = 0.5, sigma = 0.5;
};

struct PacketConfig {
  std::array<double, 3> x0{0.0, 0.0, 0.0}, k0{0.0, 0.0, 0.0};
  double width = 1.0;
};

struct ForwardConfig {
  SpatialGrid grid{2, 8.0, 64};
  BumpConfig potential;
  PacketConfig initial;
  double T = 1.0;
  int steps = 256;
  std::string sampling = "midpoint";
  int record_every = 16;
};

struct IdentityConfig {
  SpatialGrid grid{2, 8.0, 64};
  BumpConfig potential1{0.5, 1.0, 0.5, 0.5};
  BumpConfig potential2{0.0, 1.0, 0.5, 0.5};
  PacketConfig f, g;
  double T = 1.0;
  std::vector<double> steps{128, 256};
  double ceiling = 1e-4;
};

struct ReconstructConfig {
  SpatialGrid grid{2, 4.0, 64};
  double T = 2.0;
  int steps = 64;
  std::string sampling = "midpoint";
  double born_threshold = 0.5;
  double freq_radius = 8.0;
  int tau_modes = 2;
  int time_pts = 16;
  double width = 1.0;
  double sigma = 0.333;
  std::vector<double> eps{0.1, 0.05, 0.025};
  double ceiling = 0.2;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output_dir = "out";
  std::size_t max_points = std::size_t(1) << 24;
  double max_runtime_s = 3600.0;
  SweepConfig strichartz;
  KernelTableConfig kernel_table;
  BsSweepConfig bs_sweep;
  CgoConfig cgo;
  ForwardConfig forward;
  IdentityConfig identity;
  ReconstructConfig reconstruct;
  CounterexampleConfig counterexample;
  Json resolved;  ///< every key with the value in effect
};

namespace cfg_detail {

inline GridSpec read_grid(Block b, const GridSpec& def) {
  GridSpec g;
  g.n = b.integer("n", def.n, [](double v) { return v >= 1 && v <= 3 ? "" : "must be 1, 2 or 3"; });
  g.box_time = b.num("box_time", def.box_time, positive());
  g.box_space = b.num("box_space", def.box_space, positive());
  g.pts_time = b.integer("pts_time", def.pts_time, power_of_two_ge(8));
  g.pts_space = b.integer("pts_space", def.pts_space, power_of_two_ge(8));
  b.finish();
  return g;
}

inline SpatialGrid read_spatial(Block b, const SpatialGrid& def) {
  SpatialGrid g;
  g.n = b.integer("n", def.n, [](double v) { return v >= 1 && v <= 3 ? "" : "must be 1, 2 or 3"; });
  g.box = b.num("box", def.box, positive());
  g.pts = b.integer("pts", def.pts, power_of_two_ge(8));
  b.finish();
  return g;
}

inline PotentialSpec read_potential(Block b, const PotentialSpec& def) {
  PotentialSpec p;
  p.kind = b.str("kind", def.kind, {"gaussian", "cusp"});
  p.amp = b.num("amp", def.amp);
  p.width = b.num("width", def.width, positive());
  p.alpha = b.num("alpha", def.alpha, nonnegative());
  p.time_window = b.num("time_window", def.time_window, positive());
  p.R = b.num("R", def.R, positive());
  p.a = b.exponent("a", def.a);
  p.b = b.exponent("b", def.b);
  b.finish();
  return p;
}

inline BumpConfig read_bump(Block b, const BumpConfig& def) {
  BumpConfig p;
  p.eps = b.num("eps", def.eps);
  p.width = b.num("width", def.width, positive());
  p.t0 = b.num("t0", def.t0);
  p.sigma = b.num("sigma", def.sigma, positive());
  b.finish();
  return p;
}

inline PacketConfig read_packet(Block b, int n, const PacketConfig& def) {
  PacketConfig p = def;
  {
    auto l = b.nums("x0", std::vector<double>(def.x0.begin(), def.x0.begin() + n));
    if (static_cast<int>(l.size()) != n) b.error("x0", "must have " + std::to_string(n) + " components");
    for (int a = 0; a < n && a < static_cast<int>(l.size()); ++a) p.x0[a] = l[a];
  }
  {
    auto l = b.nums("k0", std::vector<double>(def.k0.begin(), def.k0.begin() + n));
    if (static_cast<int>(l.size()) != n) b.error("k0", "must have " + std::to_string(n) + " components");
    for (int a = 0; a < n && a < static_cast<int>(l.size()); ++a) p.k0[a] = l[a];
  }
  p.width = b.num("width", def.width, positive());
  b.finish();
  return p;
}

}  // namespace cfg_detail

/// Parses and validates a YAML document; throws ConfigError listing every offending key path.
inline ExperimentConfig parse_config(const YAML::Node& root) {
  using namespace cfg_detail;
  std::vector<std::string> errors;
  ExperimentConfig c;
  c.resolved = Json::object();
  Block top(root, "", errors, c.resolved);
  c.seed = top.seed("seed", c.seed);
  c.workers = top.integer("workers", c.workers, at_least(1));
  c.output_dir = top.str("output_dir", c.output_dir);
  c.max_points = static_cast<std::size_t>(top.num("max_points", double(c.max_points), at_least(1)));
  c.max_runtime_s = top.num("max_runtime_s", c.max_runtime_s, positive());

  {
    auto b = top.sub("strichartz");
    auto& s = c.strichartz;
    s.estimate = b.str("estimate", "strichartz", {"strichartz", "gain", "dispersive", "local_smoothing"});
    s.grid = read_grid(b.sub("grid"), s.grid);
    s.natural_units = b.flag("natural_units", s.natural_units);
    s.nu = b.nums("nu", s.nu, positive());
    s.nu_axis = b.integer("nu_axis", s.nu_axis, at_least(-1));
    if (s.nu_axis >= s.grid.n) b.error("nu_axis", "must be -1 or a spatial axis below n");
    std::vector<ExponentPair> def_pairs;
    if (s.grid.n == 2) def_pairs = {{Exponent(1), Exponent(2), 2}, {Exponent(4, 3), Exponent(4, 3), 2}};
    if (s.grid.n == 3)
      def_pairs = {{Exponent(1), Exponent(2), 3}, {Exponent(4, 3), Exponent(3, 2), 3}, {Exponent(2), Exponent(6, 5), 3}};
    if (s.grid.n == 1) def_pairs = {{Exponent(1), Exponent(2), 1}, {Exponent(4, 3), Exponent(1), 1}};
    s.pairs.clear();
    b.list(
        "pairs",
        [&](Block& p) {
          const auto q = p.exponent("q", Exponent(1)), r = p.exponent("r", Exponent(2));
          const auto ad = check_admissible(q, r, s.grid.n);
          if (!ad.admissible) p.error("", "pair (" + q.str() + "," + r.str() + ") not admissible: " + ad.reason);
          s.pairs.push_back({q, r, s.grid.n});
        },
        def_pairs.size(),
        [&](Block& p, std::size_t i) {
          p.exponent("q", def_pairs[i].q);
          p.exponent("r", def_pairs[i].r);
          s.pairs.push_back(def_pairs[i]);
        });
    s.samples = b.integer("samples", s.samples, nonnegative());
    s.hard_cases = b.integer("hard_cases", s.hard_cases, nonnegative());
    {
      auto f = b.sub("family");
      s.family.spread = f.num("spread", s.family.spread, nonnegative());
      s.family.w_lo = f.num("w_lo", s.family.w_lo, positive());
      s.family.w_hi = f.num("w_hi", s.family.w_hi, positive());
      s.family.mod = f.num("mod", s.family.mod, nonnegative());
      if (s.family.w_hi < s.family.w_lo) f.error("w_hi", "must be >= w_lo");
      f.finish();
    }
    s.s_values = b.nums("s_values", {0.25, 0.5, 1.0, 2.0});
    s.packet_width = b.num("packet_width", s.packet_width, positive());
    s.cutoff = b.flag("cutoff", s.cutoff);
    const std::string rule = b.str("rule", to_string(s.rule),
                                   {"max_le_ceiling", "spread_le_ceiling", "decay_le_ceiling", "increasing_growth_ge"});
    try {
      s.rule = verdict_rule_from_string(rule);
    } catch (const std::exception&) {
    }
    s.ceiling = b.num("ceiling", s.ceiling, positive());
    b.finish();
  }
  {
    auto b = top.sub("kernel_table");
    auto& k = c.kernel_table;
    k.sigma = b.nums("sigma", k.sigma, [](double v) { return v != 0 ? "" : "sigma = 0 is excluded"; }, true);
    k.x_min = b.num("x_min", k.x_min);
    k.x_max = b.num("x_max", k.x_max);
    if (!(k.x_max > k.x_min)) b.error("x_max", "must exceed x_min");
    k.points = b.integer("points", k.points, at_least(1));
    k.tol = b.num("tol", k.tol, positive());
    k.ceiling = b.num("ceiling", k.ceiling, positive());
    b.finish();
  }
  {
    auto b = top.sub("bs_sweep");
    auto& s = c.bs_sweep;
    s.grid = read_grid(b.sub("grid"), s.grid);
    s.potential = read_potential(b.sub("potential"), s.potential);
    s.nu = b.nums("nu", s.nu, positive(), true);
    s.tol = b.num("tol", s.tol, positive());
    s.max_iter = b.integer("max_iter", s.max_iter, at_least(1));
    s.ceiling = b.num("ceiling", s.ceiling, positive());
    b.finish();
  }
  {
    auto b = top.sub("cgo");
    auto& s = c.cgo;
    s.grid = read_grid(b.sub("grid"), s.grid);
    s.potential = read_potential(b.sub("potential"), s.potential);
    s.packet_center = b.vec3("packet_center", s.grid.n);
    s.packet_width = b.num("packet_width", s.packet_width, positive());
    s.nu = b.nums("nu", s.nu, positive(), true);
    s.tol = b.num("tol", s.tol, positive());
    s.rho_max = b.num("rho_max", s.rho_max, [](double v) { return v > 0 && v < 1 ? "" : "must lie in (0, 1)"; });
    s.ceiling = b.num("ceiling", s.ceiling, positive());
    s.nu_candidates = b.nums("nu_candidates", s.nu_candidates, positive());
    b.finish();
  }
  {
    auto b = top.sub("forward");
    auto& s = c.forward;
    s.grid = read_spatial(b.sub("grid"), s.grid);
    s.potential = read_bump(b.sub("potential"), s.potential);
    s.initial = read_packet(b.sub("initial"), s.grid.n, s.initial);
    s.T = b.num("T", s.T, positive());
    s.steps = b.integer("steps", s.steps, at_least(1));
    s.sampling = b.str("sampling", s.sampling, {"midpoint", "cell_average"});
    s.record_every = b.integer("record_every", s.record_every, nonnegative());
    b.finish();
  }
  {
    auto b = top.sub("identity");
    auto& s = c.identity;
    s.grid = read_spatial(b.sub("grid"), s.grid);
    s.potential1 = read_bump(b.sub("potential1"), s.potential1);
    s.potential2 = read_bump(b.sub("potential2"), s.potential2);
    s.f = read_packet(b.sub("f"), s.grid.n, PacketConfig{{0.5, 0.0, 0.0}, {1.0, 0.0, 0.0}, 1.0});
    s.g = read_packet(b.sub("g"), s.grid.n, PacketConfig{{0.0, 0.0, 0.0}, {0.0, 0.5, 0.0}, 1.0});
    s.T = b.num("T", s.T, positive());
    s.steps = b.nums("steps", s.steps, [](double v) { return v >= 1 && v == std::floor(v) ? "" : "must be a positive integer"; }, true);
    s.ceiling = b.num("ceiling", s.ceiling, positive());
    b.finish();
  }
  {
    auto b = top.sub("reconstruct");
    auto& s = c.reconstruct;
    s.grid = read_spatial(b.sub("grid"), s.grid);
    if (s.grid.n < 2) b.error("grid.n", "reconstruction needs n = 2 or 3");
    s.T = b.num("T", s.T, positive());
    s.steps = b.integer("steps", s.steps, at_least(1));
    s.sampling = b.str("sampling", s.sampling, {"midpoint", "cell_average"});
    s.born_threshold = b.num("born_threshold", s.born_threshold, positive());
    s.freq_radius = b.num("freq_radius", s.freq_radius, positive());
    s.tau_modes = b.integer("tau_modes", s.tau_modes, nonnegative());
    s.time_pts = b.integer("time_pts", s.time_pts, power_of_two_ge(8));
    if (s.time_pts < 2 * s.tau_modes + 1) b.error("time_pts", "must be >= 2 tau_modes + 1");
    s.width = b.num("width", s.width, positive());
    s.sigma = b.num("sigma", s.sigma, positive());
    s.eps = b.nums("eps", s.eps, positive(), true);
    s.ceiling = b.num("ceiling", s.ceiling, positive());
    b.finish();
  }
  {
    auto b = top.sub("counterexample");
    auto& s = c.counterexample;
    s.n = b.integer("n", s.n, [](double v) { return v == 1 || v == 2 ? "" : "must be 1 or 2"; });
    s.qd = b.exponent("q_dual", s.qd);
    s.rd = b.exponent("r_dual", s.rd);
    if (!satisfies_dual_relation(s.qd, s.rd, s.n)) b.error("q_dual", "(q', r') must satisfy 2/q' = n/2 - n/r'");
    s.rhos = b.nums("rho", s.rhos, at_least(std::exp(1.0) / 9.0), true);
    {
      auto t = b.sub("trace");
      s.trace.box = t.num("box", s.trace.box, at_least(1.0 / std::exp(1.0)));
      s.trace.pts = t.integer("pts", s.trace.pts, power_of_two_ge(8));
      s.trace.delta_min = t.num("delta_min", s.trace.delta_min, positive());
      t.finish();
    }
    s.control_sigma = b.num("control_sigma", s.control_sigma, positive());
    s.growth_ceiling = b.num("growth_ceiling", s.growth_ceiling, positive());
    s.control_ceiling = b.num("control_ceiling", s.control_ceiling, positive());
    s.s_max = b.num("s_max", s.s_max, nonnegative());
    s.lattice_dx = b.num("lattice_dx", s.lattice_dx, positive());
    s.lattice_margin = b.num("lattice_margin", s.lattice_margin, positive());
    b.finish();
  }
  top.finish();
  if (!errors.empty()) throw ConfigError(errors);
  c.strichartz.seed = c.seed;
  c.strichartz.workers = c.workers;
  c.strichartz.max_points = c.max_points;
  c.strichartz.max_runtime_s = c.max_runtime_s;
  c.counterexample.workers = c.workers;
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError({path + ": cannot read file"});
  } catch (const YAML::ParserException& e) {
    throw ConfigError({path + ": " + e.what()});
  }
  if (root && !root.IsNull() && !root.IsMap()) throw ConfigError({"(root): must be a mapping"});
  return parse_config(root);
}

/// Hash of the resolved config without the keys that cannot affect results (output location
/// and worker count).
inline std::string config_hash(const ExperimentConfig& c) {
  Json j = c.resolved;
  j.erase("output_dir");
  j.erase("workers");
  return fnv1a_hex(j.dump());
}

}  // namespace cgolab::cli
