#include "config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace cgolab;
using namespace cgolab::cli;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& yaml) { return parse_config(YAML::Load(yaml)); }

std::vector<std::string> errors_of(const std::string& yaml) {
  try {
    parse(yaml);
  } catch (const ConfigError& e) {
    return e.items;
  }
  return {};
}

bool has(const std::vector<std::string>& v, const std::string& prefix) {
  for (const auto& s : v)
    if (s.rfind(prefix, 0) == 0) return true;
  return false;
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("cgolab_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args, const fs::path& out_dir) {
  const fs::path log = out_dir.parent_path() / (out_dir.filename().string() + ".log");
  const std::string cmd = "CGOLAB_OUT_DIR='" + out_dir.string() + "' '" + CGOLAB_CLI + "' " + args + " > '" +
                          log.string() + "' 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, ss.str()};
}

}  // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  const auto c = parse("");
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.workers, 1);
  EXPECT_EQ(c.output_dir, "out");
  EXPECT_EQ(c.strichartz.estimate, "strichartz");
  EXPECT_EQ(c.strichartz.pairs.size(), 2u);
  EXPECT_EQ(c.cgo.rho_max, 0.9);
  EXPECT_EQ(c.counterexample.rhos.size(), 5u);
  EXPECT_TRUE(c.resolved.contains("reconstruct"));
  EXPECT_EQ(c.resolved["reconstruct"]["freq_radius"], 8.0);
}

TEST(Config, ValuesAndNestedBlocks) {
  const auto c = parse(R"(
seed: 9
workers: 3
strichartz:
  grid: {n: 3, box_time: 4, box_space: 6, pts_time: 16, pts_space: 32}
  pairs: [{q: 2, r: 6/5}]
bs_sweep:
  potential: {kind: cusp, alpha: 0.25}
  nu: [4, 64]
)");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.strichartz.seed, 9u);
  EXPECT_EQ(c.strichartz.workers, 3);
  EXPECT_EQ(c.strichartz.grid.n, 3);
  EXPECT_EQ(c.strichartz.grid.pts_space, 32);
  ASSERT_EQ(c.strichartz.pairs.size(), 1u);
  EXPECT_EQ(c.strichartz.pairs[0].r.str(), "6/5");
  EXPECT_EQ(c.bs_sweep.potential.kind, "cusp");
  EXPECT_EQ(c.bs_sweep.nu, (std::vector<double>{4, 64}));
}

TEST(Config, DefaultPairsFollowDimension) {
  const auto c = parse("strichartz: {grid: {n: 3}}");
  ASSERT_EQ(c.strichartz.pairs.size(), 3u);
  EXPECT_EQ(c.strichartz.pairs[2].q.str(), "2");
  EXPECT_EQ(c.strichartz.pairs[2].r.str(), "6/5");
}

TEST(Config, EveryOffendingKeyIsListed) {
  const auto e = errors_of(R"(
workers: 0
bs_sweep:
  grid: {box_space: -1, pts_time: 12}
  bogus: 1
strichartz:
  pairs: [{q: 2, r: 2}]
counterexample: {q_dual: abc}
kernel_table: {sigma: [0.5, 0]}
)");
  EXPECT_TRUE(has(e, "workers:"));
  EXPECT_TRUE(has(e, "bs_sweep.grid.box_space: must be positive"));
  EXPECT_TRUE(has(e, "bs_sweep.grid.pts_time:"));
  EXPECT_TRUE(has(e, "bs_sweep.bogus: unknown key"));
  EXPECT_TRUE(has(e, "strichartz.pairs[0]:"));
  EXPECT_TRUE(has(e, "counterexample.q_dual:"));
  EXPECT_TRUE(has(e, "kernel_table.sigma[1]:"));
  EXPECT_EQ(e.size(), 7u);
}

TEST(Config, TypeErrors) {
  EXPECT_TRUE(has(errors_of("seed: -3"), "seed:"));
  EXPECT_TRUE(has(errors_of("cgo: [1, 2]"), "cgo: must be a mapping"));
  EXPECT_TRUE(has(errors_of("cgo: {nu: 5}"), "cgo.nu: must be a list"));
  EXPECT_TRUE(has(errors_of("cgo: {nu: []}"), "cgo.nu: must not be empty"));
  EXPECT_TRUE(has(errors_of("forward: {sampling: euler}"), "forward.sampling: must be one of"));
  EXPECT_TRUE(has(errors_of("cgo: {packet_center: [1, 2, 3]}"), "cgo.packet_center: must have 2 components"));
}

TEST(Config, HashIgnoresOutputAndWorkers) {
  const auto a = parse("seed: 1");
  const auto b = parse("seed: 1\nworkers: 4\noutput_dir: elsewhere");
  const auto c = parse("seed: 2");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a), config_hash(parse("seed: 1\nstrichartz: {ceiling: 10}")));
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& e : fs::directory_iterator(CGOLAB_CONFIG_DIR))
    if (e.path().extension() == ".yaml") EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
  EXPECT_THROW(load_config("/nonexistent/config.yaml"), ConfigError);
}

TEST(Cli, MalformedConfigExitsTwoWithKeyPath) {
  const auto d = scratch("malformed");
  std::ofstream(d / "bad.yaml") << "bs_sweep:\n  grid:\n    box_space: -2\n";
  const auto r = run("bs-norm-sweep '" + (d / "bad.yaml").string() + "'", d / "out");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("bs_sweep.grid.box_space"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(d / "out"));
}

TEST(Cli, UsageErrorsExitTwo) {
  const auto d = scratch("usage");
  EXPECT_EQ(run("", d / "out").code, 2);
  EXPECT_EQ(run("no-such-command x.yaml", d / "out").code, 2);
  EXPECT_EQ(run("kernel-table", d / "out").code, 2);
  EXPECT_EQ(run("kernel-table '" + (d / "missing.yaml").string() + "'", d / "out").code, 2);
}

TEST(Cli, DryRunPrintsResolvedConfigAndWritesNothing) {
  const auto d = scratch("dry");
  std::ofstream(d / "c.yaml") << "seed: 4\n";
  const auto r = run("forward-evolve '" + (d / "c.yaml").string() + "' --dry-run", d / "out");
  EXPECT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["command"], "forward-evolve");
  EXPECT_EQ(j["config"]["seed"], 4);
  EXPECT_EQ(j["config"]["forward"]["steps"], 256);
  EXPECT_FALSE(fs::exists(d / "out"));
}

TEST(Cli, ReportsRerunByteIdentically) {
  const auto d = scratch("rerun");
  std::ofstream(d / "c.yaml") << "identity: {steps: [64, 128]}\n";
  const auto a = run("identity-check '" + (d / "c.yaml").string() + "'", d / "a");
  const auto b = run("identity-check '" + (d / "c.yaml").string() + "'", d / "b");
  ASSERT_EQ(a.code, 0) << a.out;
  ASSERT_EQ(b.code, 0) << b.out;
  for (const char* f : {"report.json", "report.csv", "identity.csv", "config.resolved.json"}) {
    std::ifstream fa(d / "a" / "identity-check" / f, std::ios::binary), fb(d / "b" / "identity-check" / f, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_FALSE(sa.str().empty()) << f;
    EXPECT_EQ(sa.str(), sb.str()) << f;
  }
  EXPECT_TRUE(fs::exists(d / "a" / "identity-check" / "timing.json"));
}

TEST(Cli, VerdictFailureExitsOne) {
  const auto d = scratch("verdict");
  std::ofstream(d / "c.yaml") << "identity: {steps: [64, 128], ceiling: 1.0e-12}\n";
  const auto r = run("identity-check '" + (d / "c.yaml").string() + "'", d / "out");
  EXPECT_EQ(r.code, 1) << r.out;
  const Json j = Json::parse(std::ifstream(d / "out" / "identity-check" / "report.json"));
  EXPECT_EQ(j["verdict"], "fail");
}

TEST(Cli, NonContractiveExitsThree) {
  const auto d = scratch("numerical");
  std::ofstream(d / "c.yaml") << "cgo:\n  grid: {pts_time: 8, pts_space: 16}\n  nu: [0.5]\n  potential: {amp: -40}\n";
  const auto r = run("cgo-build '" + (d / "c.yaml").string() + "'", d / "out");
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_NE(r.out.find("numerical failure"), std::string::npos);
}

TEST(Cli, TrajectoryContainerHoldsRecordedSlices) {
  const auto d = scratch("trajectory");
  std::ofstream(d / "c.yaml") << "forward:\n  grid: {n: 1, box: 8, pts: 64}\n  initial: {x0: [0], k0: [1], width: 1}\n"
                                 "  T: 1\n  steps: 32\n  record_every: 8\n";
  const auto r = run("forward-evolve '" + (d / "c.yaml").string() + "'", d / "out");
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream is(d / "out" / "forward-evolve" / "trajectory.cglf", std::ios::binary);
  const Field traj = read_field(is);
  ASSERT_EQ(traj.spec.pts_time, 5);
  EXPECT_EQ(traj.spec.pts_space, 64);
  // Lattice time of slice j plus box_time is j T / (S - 1).
  EXPECT_DOUBLE_EQ(traj.spec.time_axis().coord(4) + traj.spec.box_time, 1.0);
  const SpatialGrid sg{1, 8.0, 64};
  double err = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double x = sg.axis().coord(i);
    err = std::max(err, std::abs(traj[i] - std::exp(-0.5 * x * x) * std::polar(1.0, x)));
  }
  EXPECT_LT(err, 1e-14);
  const Json j = Json::parse(std::ifstream(d / "out" / "forward-evolve" / "trajectory.json"));
  EXPECT_EQ(j["times"].size(), 5u);
  EXPECT_LT(j["max_mass_drift"].get<double>(), 1e-12);
}
