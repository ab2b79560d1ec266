#include "cgolab/parallel.hpp"
#include "cgolab/report.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cgolab;

namespace {

EstimateReport sample_report() {
  EstimateReport r;
  r.estimate = "strichartz";
  r.grid = Json{{"n", 2}, {"pts", 32}};
  r.rule = VerdictRule::spread_le_ceiling;
  r.ceiling = 10.0;
  r.rows = {{"(1,2)", "nu=2", 7, Json{{"nu", 2.0}}, 0.1 + 1e-17},
            {"(1,2)", "nu=2", 8, Json{{"nu", 2.0}}, 0.3},
            {"(1,2)", "nu=4", 9, Json{{"nu", 4.0}}, 1.0 / 3.0},
            {"(4/3,4/3)", "nu=2", 7, Json{{"nu", 2.0}}, 0.02},
            {"(4/3,4/3)", "nu=4", 9, Json{{"nu", 4.0}}, 0.19}};
  r.finalize();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Report, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Report, FinalizeAppliesRulePerSeries) {
  auto r = sample_report();
  ASSERT_EQ(r.series.size(), 2u);
  EXPECT_DOUBLE_EQ(r.series[0].group_max[0], 0.3);
  EXPECT_NEAR(r.series[0].statistic, (1.0 / 3.0) / 0.3, 1e-15);
  EXPECT_NEAR(r.series[1].statistic, 9.5, 1e-12);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.statistic, 9.5, 1e-12);
  r.ceiling = 5.0;
  r.finalize();
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.verdict, "fail");
  EXPECT_TRUE(r.series[0].pass);
}

TEST(Report, OtherRules) {
  EstimateReport r;
  r.rows = {{"", "a", 0, {}, 4.0}, {"", "b", 0, {}, 3.0}, {"", "c", 0, {}, 1.5}};
  r.rule = VerdictRule::decay_le_ceiling;
  r.ceiling = 0.5;
  r.finalize();
  EXPECT_TRUE(r.pass);
  r.rule = VerdictRule::max_le_ceiling;
  r.ceiling = 3.9;
  r.finalize();
  EXPECT_FALSE(r.pass);
  r.rule = VerdictRule::increasing_growth_ge;
  r.ceiling = 1.0;
  r.finalize();
  EXPECT_FALSE(r.pass);
  r.rows = {{"", "a", 0, {}, 1.0}, {"", "b", 0, {}, 1.1}, {"", "c", 0, {}, 1.2}};
  r.ceiling = 1.15;
  r.finalize();
  EXPECT_TRUE(r.pass);
  r.ceiling = 1.25;
  r.finalize();
  EXPECT_FALSE(r.pass);
  r.rows.resize(1);
  r.finalize();
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.verdict, "vacuous-pass");
}

TEST(Report, EmptyReportIsValidAndVacuous) {
  EstimateReport r;
  r.estimate = "gain";
  r.finalize();
  EXPECT_EQ(r.verdict, "vacuous-pass");
  const Json j = to_json(r, "0");
  EXPECT_TRUE(j.at("ratios").empty());
  EXPECT_EQ(report_from_json(Json::parse(dump_stable(j))).verdict, "vacuous-pass");
}

TEST(Report, RoundTripThroughText) {
  const auto r = sample_report();
  const Json j = to_json(r, fnv1a_hex("cfg"));
  const auto back = report_from_json(Json::parse(dump_stable(j)));
  EXPECT_EQ(back.rows, r.rows);
  EXPECT_EQ(back.estimate, r.estimate);
  EXPECT_EQ(back.grid, r.grid);
  EXPECT_EQ(back.ceiling, r.ceiling);
  EXPECT_EQ(back.rule, r.rule);
  EXPECT_EQ(back.verdict, r.verdict);
  EXPECT_EQ(dump_stable(to_json(back, fnv1a_hex("cfg"))), dump_stable(j));
}

TEST(Report, FieldOrderAndProvenance) {
  const Json j = to_json(sample_report(), "abc");
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  const std::vector<std::string> expected{"estimate", "version", "modules", "config_hash", "grid",    "ratios", "series",
                                          "max",      "min",     "rule",    "ceiling",     "statistic", "verdict",
                                          "diagnostics"};
  EXPECT_EQ(keys, expected);
  EXPECT_EQ(j.at("config_hash"), "abc");
  EXPECT_EQ(j.at("version"), version);
}

TEST(Report, WritesAreByteIdentical) {
  const auto dir = std::filesystem::temp_directory_path() / "cgolab_report_test";
  std::filesystem::remove_all(dir);
  const Json j = to_json(sample_report(), "h");
  write_json(dir / "a.json", j);
  write_json(dir / "b.json", j);
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  write_text(dir / "a.csv", report_csv(sample_report()));
  const auto csv = slurp(dir / "a.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "series,group,seed,ratio,nu");
  std::filesystem::remove_all(dir);
}

TEST(Report, NonFiniteCeilingSerializes) {
  auto r = sample_report();
  r.rule = VerdictRule::max_le_ceiling;
  r.ceiling = std::numeric_limits<double>::infinity();
  r.finalize();
  const Json j = to_json(r, "h");
  EXPECT_EQ(j.at("ceiling"), "inf");
  EXPECT_TRUE(std::isinf(report_from_json(j).ceiling));
}

TEST(Report, FmtDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e17})
    EXPECT_EQ(std::strtod(fmt_double(v).c_str(), nullptr), v);
  EXPECT_EQ(fmt_double(0.5), "0.5");
}

TEST(Parallel, MapIsOrderedAndDeterministic) {
  auto sq = [](std::size_t i) { return static_cast<double>(i * i); };
  const auto a = parallel_map(100, 1, sq);
  const auto b = parallel_map(100, 4, sq);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[7], 49.0);
  EXPECT_TRUE(parallel_map(0, 3, sq).empty());
  EXPECT_THROW(parallel_map(10, 3,
                            [](std::size_t i) -> int {
                              if (i == 5) throw std::runtime_error("x");
                              return 0;
                            }),
               std::runtime_error);
}
