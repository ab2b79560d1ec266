#pragma once

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cgolab {

using Json = nlohmann::ordered_json;

inline constexpr const char* version = "0.1.0";

/// Versions of the modules whose numerics enter a report.
inline Json module_versions() {
  return Json{{"grid", "1"},       {"symbols", "1"},    {"kernels", "1"},      {"multipliers", "1"},
              {"estimates", "1"},  {"birman_schwinger", "1"}, {"cgo", "1"}, {"forward", "1"},
              {"reconstruction", "1"}, {"counterexample", "1"}, {"cli", "1"}};
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Shortest round-trip decimal for a double.
inline std::string fmt_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

enum class VerdictRule {
  max_le_ceiling,         ///< max ratio <= ceiling
  spread_le_ceiling,      ///< max / min over group maxima <= ceiling
  decay_le_ceiling,       ///< last group max <= ceiling * first group max
  increasing_growth_ge,   ///< group maxima strictly increasing and last / first >= ceiling
};

inline const char* to_string(VerdictRule r) {
  switch (r) {
    case VerdictRule::max_le_ceiling: return "max_le_ceiling";
    case VerdictRule::spread_le_ceiling: return "spread_le_ceiling";
    case VerdictRule::decay_le_ceiling: return "decay_le_ceiling";
    case VerdictRule::increasing_growth_ge: return "increasing_growth_ge";
  }
  return "?";
}

inline VerdictRule verdict_rule_from_string(const std::string& s) {
  for (auto r : {VerdictRule::max_le_ceiling, VerdictRule::spread_le_ceiling, VerdictRule::decay_le_ceiling,
                 VerdictRule::increasing_growth_ge})
    if (s == to_string(r)) return r;
  throw std::invalid_argument("unknown verdict rule '" + s + "'");
}

/// One measured sample. Samples sharing `group` (e.g. one nu) are reduced to their maximum;
/// the verdict rule is applied to the group maxima of each `series` (e.g. one exponent pair)
/// separately, and the report passes iff every series passes.
struct ReportRow {
  std::string series;
  std::string group;
  std::uint64_t seed = 0;
  Json params = Json::object();
  double ratio = 0.0;
  bool operator==(const ReportRow&) const = default;
};

struct SeriesSummary {
  std::string series;
  std::vector<std::string> groups;
  std::vector<double> group_max;
  double statistic = 0.0;
  bool pass = true;
};

struct EstimateReport {
  std::string estimate;
  Json grid = Json::object();
  std::vector<ReportRow> rows;
  VerdictRule rule = VerdictRule::max_le_ceiling;
  double ceiling = std::numeric_limits<double>::infinity();
  Json diagnostics = Json::object();

  // Filled by finalize().
  std::vector<SeriesSummary> series;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  /// Worst statistic over series (largest, or smallest for increasing_growth_ge).
  double statistic = 0.0;
  bool pass = true;
  std::string verdict = "vacuous-pass";

  /// Wall time; kept out of the serialized report so replays are byte-identical.
  double runtime_s = 0.0;

  void finalize() {
    series.clear();
    std::map<std::string, std::size_t> sidx;
    std::vector<std::map<std::string, std::size_t>> gidx;
    for (const auto& r : rows) {
      if (!std::isfinite(r.ratio)) throw std::runtime_error(estimate + ": non-finite ratio");
      auto [it, fresh] = sidx.try_emplace(r.series, series.size());
      if (fresh) {
        series.push_back({r.series, {}, {}, 0.0, true});
        gidx.emplace_back();
      }
      auto& S = series[it->second];
      auto [gt, gfresh] = gidx[it->second].try_emplace(r.group, S.groups.size());
      if (gfresh) {
        S.groups.push_back(r.group);
        S.group_max.push_back(r.ratio);
      } else {
        S.group_max[gt->second] = std::max(S.group_max[gt->second], r.ratio);
      }
    }
    max_ratio = min_ratio = statistic = 0.0;
    pass = true;
    verdict = "vacuous-pass";
    if (series.empty()) return;
    const double inf = std::numeric_limits<double>::infinity();
    max_ratio = -inf;
    min_ratio = inf;
    bool vacuous = true;
    statistic = rule == VerdictRule::increasing_growth_ge ? inf : -inf;
    for (auto& S : series) {
      const auto& m = S.group_max;
      const double mx = *std::max_element(m.begin(), m.end()), mn = *std::min_element(m.begin(), m.end());
      max_ratio = std::max(max_ratio, mx);
      min_ratio = std::min(min_ratio, mn);
      switch (rule) {
        case VerdictRule::max_le_ceiling:
          S.statistic = mx;
          S.pass = mx <= ceiling;
          break;
        case VerdictRule::spread_le_ceiling:
          S.statistic = mn > 0 ? mx / mn : inf;
          S.pass = S.statistic <= ceiling;
          break;
        case VerdictRule::decay_le_ceiling:
          S.statistic = m.front() > 0 ? m.back() / m.front() : (m.back() > 0 ? inf : 0.0);
          S.pass = m.back() <= ceiling * m.front();
          break;
        case VerdictRule::increasing_growth_ge: {
          if (m.size() < 2) {
            S.statistic = inf;
            S.pass = true;
            continue;
          }
          bool inc = true;
          for (std::size_t i = 1; i < m.size(); ++i) inc = inc && m[i] > m[i - 1];
          S.statistic = m.front() > 0 ? m.back() / m.front() : inf;
          S.pass = inc && S.statistic >= ceiling;
          break;
        }
      }
      vacuous = false;
      statistic = rule == VerdictRule::increasing_growth_ge ? std::min(statistic, S.statistic)
                                                            : std::max(statistic, S.statistic);
      pass = pass && S.pass;
    }
    if (vacuous) {
      statistic = 0.0;
      return;
    }
    verdict = pass ? "pass" : "fail";
  }
};

inline Json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

inline double number_or_string(const Json& j) {
  if (!j.is_string()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

inline Json row_to_json(const ReportRow& r) {
  return Json{{"series", r.series}, {"group", r.group}, {"seed", r.seed}, {"params", r.params}, {"ratio", r.ratio}};
}

/// Stable-order JSON: estimate, grid, ratios[], max, ceiling, verdict, plus provenance.
inline Json to_json(const EstimateReport& rep, const std::string& config_hash) {
  Json rows = Json::array();
  for (const auto& r : rep.rows) rows.push_back(row_to_json(r));
  Json ser = Json::array();
  for (const auto& S : rep.series) {
    Json g = Json::array();
    for (std::size_t i = 0; i < S.groups.size(); ++i) g.push_back(Json{{"group", S.groups[i]}, {"max", S.group_max[i]}});
    ser.push_back(Json{{"series", S.series}, {"groups", g}, {"statistic", finite_or_string(S.statistic)},
                       {"pass", S.pass}});
  }
  Json j;
  j["estimate"] = rep.estimate;
  j["version"] = version;
  j["modules"] = module_versions();
  j["config_hash"] = config_hash;
  j["grid"] = rep.grid;
  j["ratios"] = rows;
  j["series"] = ser;
  j["max"] = rep.max_ratio;
  j["min"] = rep.min_ratio;
  j["rule"] = to_string(rep.rule);
  j["ceiling"] = finite_or_string(rep.ceiling);
  j["statistic"] = finite_or_string(rep.statistic);
  j["verdict"] = rep.verdict;
  j["diagnostics"] = rep.diagnostics;
  return j;
}

/// Inverse of to_json (derived fields are recomputed and must agree).
inline EstimateReport report_from_json(const Json& j) {
  EstimateReport rep;
  rep.estimate = j.at("estimate").get<std::string>();
  rep.grid = j.at("grid");
  for (const auto& r : j.at("ratios"))
    rep.rows.push_back({r.at("series").get<std::string>(), r.at("group").get<std::string>(),
                        r.at("seed").get<std::uint64_t>(), r.at("params"), r.at("ratio").get<double>()});
  rep.rule = verdict_rule_from_string(j.at("rule").get<std::string>());
  rep.ceiling = number_or_string(j.at("ceiling"));
  rep.diagnostics = j.at("diagnostics");
  rep.finalize();
  if (rep.verdict != j.at("verdict").get<std::string>()) throw std::runtime_error("report verdict inconsistent with rows");
  return rep;
}

inline std::string dump_stable(const Json& j) { return j.dump(2) + "\n"; }

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, dump_stable(j)); }

/// CSV with a header row; numeric cells should be pre-formatted with fmt_double.
inline std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

/// Report rows as CSV: series, group, seed, ratio, then the params of the first row in order.
inline std::string report_csv(const EstimateReport& rep) {
  std::vector<std::string> header{"series", "group", "seed", "ratio"};
  std::vector<std::string> keys;
  if (!rep.rows.empty())
    for (auto it = rep.rows.front().params.begin(); it != rep.rows.front().params.end(); ++it) keys.push_back(it.key());
  header.insert(header.end(), keys.begin(), keys.end());
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rep.rows) {
    std::vector<std::string> cells{r.series, r.group, std::to_string(r.seed), fmt_double(r.ratio)};
    for (const auto& k : keys) {
      const auto& v = r.params.contains(k) ? r.params.at(k) : Json();
      cells.push_back(v.is_number_float() ? fmt_double(v.get<double>()) : (v.is_string() ? v.get<std::string>() : v.dump()));
    }
    body.push_back(cells);
  }
  return to_csv(header, body);
}

}  // namespace cgolab
