// Published artifact formats against the golden files in tests/golden.
// Set CGOLAB_UPDATE_GOLDEN=1 to rewrite them after an intentional format change.
#include "cgolab/grid.hpp"
#include "cgolab/report.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cgolab;

namespace {

const std::filesystem::path golden_dir = CGOLAB_GOLDEN_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void check_golden(const std::string& name, const std::string& content) {
  const auto path = golden_dir / name;
  if (const char* u = std::getenv("CGOLAB_UPDATE_GOLDEN"); u && std::string(u) == "1") write_text(path, content);
  ASSERT_TRUE(std::filesystem::exists(path)) << path;
  EXPECT_EQ(slurp(path), content) << name;
}

EstimateReport golden_report() {
  EstimateReport r;
  r.estimate = "strichartz";
  r.grid = Json{{"n", 2}, {"box_time", 8.0}, {"box_space", 8.0}, {"pts_time", 16}, {"pts_space", 16}};
  r.rule = VerdictRule::spread_le_ceiling;
  r.ceiling = 10.0;
  r.rows = {{"(1,2)", "nu=2", 11, Json{{"nu", 2.0}, {"hard", false}}, 0.25},
            {"(1,2)", "nu=4", 12, Json{{"nu", 4.0}, {"hard", true}}, 0.5},
            {"(4/3,4/3)", "nu=2", 11, Json{{"nu", 2.0}, {"hard", false}}, 0.125},
            {"(4/3,4/3)", "nu=4", 12, Json{{"nu", 4.0}, {"hard", true}}, 1.0 / 3.0}};
  r.diagnostics = Json{{"max_boundary_mass_fraction", 1e-12}, {"dropped_modes", 0}};
  r.finalize();
  return r;
}

Field golden_field() {
  Field f(GridSpec{1, 1.0, 2.0, 8, 8});
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = {0.5 * static_cast<double>(i), -0.25 * static_cast<double>(i)};
  return f;
}

}  // namespace

TEST(Golden, ReportJson) { check_golden("report.json", dump_stable(to_json(golden_report(), fnv1a_hex("golden")))); }

TEST(Golden, ReportCsv) { check_golden("report.csv", report_csv(golden_report())); }

TEST(Golden, ReportJsonParsesBack) {
  const auto back = report_from_json(Json::parse(slurp(golden_dir / "report.json")));
  EXPECT_EQ(back.rows, golden_report().rows);
  EXPECT_EQ(back.verdict, "pass");
}

TEST(Golden, FieldContainer) {
  std::ostringstream os(std::ios::binary);
  write_field(os, golden_field());
  check_golden("field.cglf", os.str());
  std::istringstream is(slurp(golden_dir / "field.cglf"), std::ios::binary);
  const Field back = read_field(is);
  EXPECT_EQ(back.data, golden_field().data);
}

TEST(Golden, SliceCsv) {
  SpatialField s(SpatialGrid{2, 1.0, 8});
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = {1.0 / (1.0 + static_cast<double>(i)), 0.0};
  std::ostringstream os;
  write_slice_csv(os, s);
  check_golden("slice.csv", os.str());
}
