// Copyright 2026 The subq Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "subq/calib_stats.hpp"
#include "subq/mpq_engine.hpp"
#include "subq/quantizer.hpp"
#include "subq/subspace_solver.hpp"
#include "subq/synthetic.hpp"
#include "subq/tensor_io.hpp"

namespace subq {

namespace detail {

inline const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw Error(ErrorCode::kSchema, path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::kSchema, path + "." + key + ": missing");
  return *it;
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kSchema, path + "." + key + ": wrong type");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, const std::string& path, T fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return get_as<T>(obj, key, path);
}

/// Rethrows parse failures of enum-like strings as schema errors at `path`.
template <typename F>
auto parse_field(const json& obj, const char* key, const std::string& path, F&& parse) {
  const auto s = get_as<std::string>(obj, key, path);
  try {
    return parse(s);
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchema, path + "." + key + ": " + e.what());
  }
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Quantizer specs and schemes

inline json to_json(const QuantSpec& s) {
  return {{"bits", s.bits}, {"symmetric", s.symmetric}, {"granularity", to_string(s.granularity)},
          {"head_dim", s.head_dim}, {"bypass", s.bypass}};
}

inline QuantSpec quant_spec_from_json(const json& j, const std::string& path) {
  QuantSpec s;
  s.bits = detail::get_as<int>(j, "bits", path);
  s.symmetric = detail::get_as<bool>(j, "symmetric", path);
  s.granularity = detail::parse_field(j, "granularity", path, parse_granularity);
  s.head_dim = detail::get_or<std::size_t>(j, "head_dim", path, 0);
  s.bypass = detail::get_or<bool>(j, "bypass", path, false);
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchema, path + ": " + e.what());
  }
  return s;
}

inline json to_json(const SideScheme& s) {
  return {{"symmetric", s.symmetric}, {"granularity", to_string(s.granularity)}, {"head_dim", s.head_dim}};
}

inline SideScheme side_scheme_from_json(const json& j, const std::string& path, SideScheme fallback) {
  if (j.is_null()) return fallback;
  SideScheme s = fallback;
  s.symmetric = detail::get_or<bool>(j, "symmetric", path, fallback.symmetric);
  if (j.contains("granularity")) s.granularity = detail::parse_field(j, "granularity", path, parse_granularity);
  s.head_dim = detail::get_or<std::size_t>(j, "head_dim", path, fallback.head_dim);
  return s;
}

inline json to_json(const QuantScheme& q) {
  return {{"activation", to_json(q.activation)}, {"weight", to_json(q.weight)}, {"kv", to_json(q.kv)}};
}

inline QuantScheme quant_scheme_from_json(const json& j, const std::string& path) {
  QuantScheme q;
  if (j.is_null()) return q;
  if (!j.is_object()) throw Error(ErrorCode::kSchema, path + ": expected an object");
  q.activation = side_scheme_from_json(j.value("activation", json()), path + ".activation", q.activation);
  q.weight = side_scheme_from_json(j.value("weight", json()), path + ".weight", q.weight);
  q.kv = side_scheme_from_json(j.value("kv", json()), path + ".kv", q.kv);
  return q;
}

// ---------------------------------------------------------------------------
// Run configuration

struct GroupConfig {
  std::string name;
  GroupKind kind = GroupKind::kLinear;
  std::vector<std::string> activations;  // n x d tensors (K or V tokens for KV groups)
  std::vector<std::string> weights;      // d x m tensors (W_O head slice for kv-value)
  std::vector<std::string> queries;      // kv-key only: post-RoPE queries, n' x head_dim
  std::size_t head_index = 0;

  bool operator==(const GroupConfig&) const = default;
};

struct RunConfig {
  std::vector<GroupConfig> groups;
  double rank_ratio = 0.125;
  int bits_low = 4;
  int bits_high = 8;
  ObjectiveKind objective = ObjectiveKind::kJoint;
  std::uint64_t seed = 0;
  RotationKind rotation = RotationKind::kRandom;
  QuantScheme quant;
  bool bypass = false;

  void validate() const {
    if (!(rank_ratio > 0.0 && rank_ratio < 1.0)) {
      throw Error(ErrorCode::kSchema, "config.rank_ratio: must lie in (0, 1)");
    }
    for (int b : {bits_low, bits_high}) {
      if (b < 2 || b > 16) throw Error(ErrorCode::kSchema, "config.bits: must lie in [2, 16]");
    }
    if (bits_high < bits_low) throw Error(ErrorCode::kSchema, "config.bits_high: must be >= bits_low");
  }

  bool operator==(const RunConfig&) const = default;
};

inline json to_json(const GroupConfig& g) {
  json j = {{"name", g.name}, {"kind", to_string(g.kind)}, {"activations", g.activations},
            {"weights", g.weights}};
  if (is_kv(g.kind)) j["head_index"] = g.head_index;
  if (!g.queries.empty()) j["queries"] = g.queries;
  return j;
}

inline json to_json(const RunConfig& c) {
  json groups = json::array();
  for (const auto& g : c.groups) groups.push_back(to_json(g));
  return {{"groups", groups},
          {"rank_ratio", c.rank_ratio},
          {"bits_low", c.bits_low},
          {"bits_high", c.bits_high},
          {"objective", to_string(c.objective)},
          {"seed", c.seed},
          {"rotation", to_string(c.rotation)},
          {"quant", to_json(c.quant)},
          {"bypass", c.bypass}};
}

inline RunConfig run_config_from_json(const json& j) {
  const std::string root = "config";
  if (!j.is_object()) throw Error(ErrorCode::kSchema, root + ": expected an object");
  RunConfig c;
  c.rank_ratio = detail::get_or<double>(j, "rank_ratio", root, c.rank_ratio);
  c.bits_low = detail::get_or<int>(j, "bits_low", root, c.bits_low);
  c.bits_high = detail::get_or<int>(j, "bits_high", root, c.bits_high);
  if (j.contains("objective")) c.objective = detail::parse_field(j, "objective", root, parse_objective);
  c.seed = detail::get_or<std::uint64_t>(j, "seed", root, c.seed);
  if (j.contains("rotation")) c.rotation = detail::parse_field(j, "rotation", root, parse_rotation);
  c.quant = quant_scheme_from_json(j.value("quant", json()), root + ".quant");
  c.bypass = detail::get_or<bool>(j, "bypass", root, false);
  if (j.contains("groups")) {
    const json& groups = j["groups"];
    if (!groups.is_array()) throw Error(ErrorCode::kSchema, root + ".groups: expected an array");
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const std::string path = root + ".groups[" + std::to_string(i) + "]";
      const json& gj = groups[i];
      GroupConfig g;
      g.name = detail::get_as<std::string>(gj, "name", path);
      g.kind = gj.contains("kind") ? detail::parse_field(gj, "kind", path, parse_group_kind) : GroupKind::kLinear;
      g.activations = detail::get_or<std::vector<std::string>>(gj, "activations", path, {});
      g.weights = detail::get_or<std::vector<std::string>>(gj, "weights", path, {});
      g.queries = detail::get_or<std::vector<std::string>>(gj, "queries", path, {});
      g.head_index = detail::get_or<std::size_t>(gj, "head_index", path, 0);
      c.groups.push_back(std::move(g));
    }
  }
  c.validate();
  return c;
}

inline RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchema, path.string() + ": invalid JSON (" + e.what() + ")");
  }
  return run_config_from_json(j);
}

inline SyntheticInstanceSpec synthetic_spec_from_json(const json& j) {
  const std::string root = "synthetic";
  SyntheticInstanceSpec s;
  s.d = detail::get_as<std::size_t>(j, "d", root);
  s.n = detail::get_as<std::size_t>(j, "n", root);
  s.m = detail::get_as<std::size_t>(j, "m", root);
  s.activation_spectrum = detail::get_as<std::vector<double>>(j, "activation_spectrum", root);
  s.weight_spectrum = detail::get_as<std::vector<double>>(j, "weight_spectrum", root);
  s.misalignment = detail::get_or<double>(j, "misalignment", root, 0.0);
  s.seed = detail::get_or<std::uint64_t>(j, "seed", root, 0);
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchema, root + ": " + e.what());
  }
  return s;
}

inline json to_json(const SyntheticInstanceSpec& s) {
  return {{"d", s.d}, {"n", s.n}, {"m", s.m}, {"activation_spectrum", s.activation_spectrum},
          {"weight_spectrum", s.weight_spectrum}, {"misalignment", s.misalignment}, {"seed", s.seed}};
}

// ---------------------------------------------------------------------------
// Projection groups, stats and plans

inline json to_json(const ProjectionGroup& g) {
  json shapes = json::array();
  for (const auto& [d, m] : g.member_shapes) shapes.push_back({d, m});
  return {{"name", g.name}, {"kind", to_string(g.kind)}, {"dim", g.dim}, {"member_shapes", shapes},
          {"head_dim", g.head_dim}, {"head_index", g.head_index}};
}

inline ProjectionGroup projection_group_from_json(const json& j, const std::string& path) {
  ProjectionGroup g;
  g.name = detail::get_as<std::string>(j, "name", path);
  g.kind = detail::parse_field(j, "kind", path, parse_group_kind);
  g.dim = detail::get_as<std::size_t>(j, "dim", path);
  for (const json& s : detail::require(j, "member_shapes", path)) {
    if (!s.is_array() || s.size() != 2) throw Error(ErrorCode::kSchema, path + ".member_shapes: expected [d, m]");
    g.member_shapes.emplace_back(s[0].get<std::size_t>(), s[1].get<std::size_t>());
  }
  g.head_dim = detail::get_or<std::size_t>(j, "head_dim", path, 0);
  g.head_index = detail::get_or<std::size_t>(j, "head_index", path, 0);
  return g;
}

inline constexpr const char* kStatsFormat = "subq-stats";
inline constexpr const char* kPlanFormat = "subq-plan";

struct StatsFile {
  std::vector<CalibStats> stats;
  json config = json::object();
};

inline Bundle stats_bundle(const StatsFile& file) {
  Bundle b;
  b.format = kStatsFormat;
  json groups = json::array();
  for (const CalibStats& s : file.stats) {
    groups.push_back({{"group", to_json(s.group)},
                      {"energy_x", s.energy_x},
                      {"energy_w", s.energy_w},
                      {"tokens_seen", s.tokens_seen}});
    b.add(s.group.name + "/sigma_x", s.sigma_x);
    b.add(s.group.name + "/sigma_w", s.sigma_w);
  }
  b.meta = {{"groups", groups}, {"config", file.config}};
  return b;
}

inline StatsFile stats_from_bundle(const Bundle& b) {
  if (b.format != kStatsFormat) throw Error(ErrorCode::kSchema, "format: expected '" + std::string(kStatsFormat) + "'");
  StatsFile file;
  file.config = b.meta.value("config", json::object());
  const json& groups = detail::require(b.meta, "groups", "meta");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::string path = "meta.groups[" + std::to_string(i) + "]";
    CalibStats s;
    s.group = projection_group_from_json(detail::require(groups[i], "group", path), path + ".group");
    s.energy_x = detail::get_as<double>(groups[i], "energy_x", path);
    s.energy_w = detail::get_as<double>(groups[i], "energy_w", path);
    s.tokens_seen = detail::get_as<std::uint64_t>(groups[i], "tokens_seen", path);
    s.sigma_x = b.get(s.group.name + "/sigma_x");
    s.sigma_w = b.get(s.group.name + "/sigma_w");
    if (s.sigma_x.rows() != s.group.dim || s.sigma_x.cols() != s.group.dim || s.sigma_w.rows() != s.group.dim ||
        s.sigma_w.cols() != s.group.dim) {
      throw Error(ErrorCode::kSchema, path + ": sigma shapes do not match group dim");
    }
    file.stats.push_back(std::move(s));
  }
  return file;
}

inline void write_stats(const std::filesystem::path& path, const StatsFile& file) {
  write_bundle(path, stats_bundle(file));
}

inline StatsFile read_stats(const std::filesystem::path& path, const ReadOptions& opts = {}) {
  return stats_from_bundle(read_bundle(path, opts));
}

struct PlanFile {
  std::vector<MixedPrecisionPlan> plans;
  json config = json::object();
};

inline Bundle plan_bundle(const PlanFile& file) {
  Bundle b;
  b.format = kPlanFormat;
  json plans = json::array();
  for (const MixedPrecisionPlan& p : file.plans) {
    const SubspacePartition& part = p.partition;
    plans.push_back({{"group", to_json(p.group)},
                     {"rank", part.rank()},
                     {"dim", part.dim()},
                     {"lambda_x", part.lambda_x},
                     {"lambda_w", part.lambda_w},
                     {"eigenvalues", part.eigenvalues},
                     {"objective", to_string(part.objective)},
                     {"rotation", to_string(part.rotation)},
                     {"seed", part.seed},
                     {"act_low", to_json(p.act_low)},
                     {"weight_low", to_json(p.weight_low)},
                     {"act_high", to_json(p.act_high)},
                     {"weight_high", to_json(p.weight_high)}});
    const std::string& n = p.group.name;
    b.add(n + "/p_h", part.p_h);
    b.add(n + "/p_l", part.p_l);
    b.add(n + "/r_h", part.r_h);
    b.add(n + "/r_l", part.r_l);
    b.add(n + "/u", part.u);
  }
  b.meta = {{"plans", plans}, {"config", file.config}};
  return b;
}

inline PlanFile plans_from_bundle(const Bundle& b) {
  if (b.format != kPlanFormat) throw Error(ErrorCode::kSchema, "format: expected '" + std::string(kPlanFormat) + "'");
  PlanFile file;
  file.config = b.meta.value("config", json::object());
  const json& plans = detail::require(b.meta, "plans", "meta");
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const std::string path = "meta.plans[" + std::to_string(i) + "]";
    const json& pj = plans[i];
    MixedPrecisionPlan p;
    p.group = projection_group_from_json(detail::require(pj, "group", path), path + ".group");
    SubspacePartition& part = p.partition;
    part.lambda_x = detail::get_as<double>(pj, "lambda_x", path);
    part.lambda_w = detail::get_as<double>(pj, "lambda_w", path);
    part.eigenvalues = detail::get_as<std::vector<double>>(pj, "eigenvalues", path);
    part.objective = detail::parse_field(pj, "objective", path, parse_objective);
    part.rotation = detail::parse_field(pj, "rotation", path, parse_rotation);
    part.seed = detail::get_as<std::uint64_t>(pj, "seed", path);
    p.act_low = quant_spec_from_json(detail::require(pj, "act_low", path), path + ".act_low");
    p.weight_low = quant_spec_from_json(detail::require(pj, "weight_low", path), path + ".weight_low");
    p.act_high = quant_spec_from_json(detail::require(pj, "act_high", path), path + ".act_high");
    p.weight_high = quant_spec_from_json(detail::require(pj, "weight_high", path), path + ".weight_high");
    const std::string& n = p.group.name;
    part.p_h = b.get(n + "/p_h");
    part.p_l = b.get(n + "/p_l");
    part.r_h = b.get(n + "/r_h");
    part.r_l = b.get(n + "/r_l");
    part.u = b.get(n + "/u");
    const auto rank = detail::get_as<std::size_t>(pj, "rank", path);
    const auto dim = detail::get_as<std::size_t>(pj, "dim", path);
    if (part.rank() != rank || part.dim() != dim || part.p_l.cols() != dim - rank) {
      throw Error(ErrorCode::kSchema, path + ": tensor shapes disagree with rank/dim");
    }
    try {
      validate_plan(p);
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchema, path + ": " + e.what());
    }
    file.plans.push_back(std::move(p));
  }
  return file;
}

inline void write_plans(const std::filesystem::path& path, const PlanFile& file) {
  write_bundle(path, plan_bundle(file));
}

inline PlanFile read_plans(const std::filesystem::path& path, const ReadOptions& opts = {}) {
  return plans_from_bundle(read_bundle(path, opts));
}

// ---------------------------------------------------------------------------
// Reports

/// CSV column order of error reports. Stable; append new columns at the end.
inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "group",          "objective",       "exact_error",   "exact_error_fro", "predicted_error",
      "relative_reduction", "energy_x_low", "energy_x_high", "energy_w_low",    "energy_w_high",
      "bits_low",       "bits_high",       "rank",          "seed"};
  return cols;
}

inline json to_json(const ErrorReport& r) {
  return {{"group", r.group},
          {"objective", to_string(r.objective)},
          {"exact_error", r.exact_error},
          {"exact_error_fro", r.exact_error_fro},
          {"predicted_error", r.predicted_error},
          {"relative_reduction", r.relative_reduction},
          {"energy_x_low", r.energies.x_low},
          {"energy_x_high", r.energies.x_high},
          {"energy_w_low", r.energies.w_low},
          {"energy_w_high", r.energies.w_high},
          {"bits_low", r.bits_low},
          {"bits_high", r.bits_high},
          {"rank", r.rank},
          {"seed", r.seed}};
}

inline ErrorReport report_from_json(const json& j, const std::string& path) {
  ErrorReport r;
  r.group = detail::get_as<std::string>(j, "group", path);
  r.objective = detail::parse_field(j, "objective", path, parse_objective);
  r.exact_error = detail::get_as<double>(j, "exact_error", path);
  r.exact_error_fro = detail::get_as<double>(j, "exact_error_fro", path);
  r.predicted_error = detail::get_as<double>(j, "predicted_error", path);
  r.relative_reduction = detail::get_as<double>(j, "relative_reduction", path);
  r.energies.x_low = detail::get_as<double>(j, "energy_x_low", path);
  r.energies.x_high = detail::get_as<double>(j, "energy_x_high", path);
  r.energies.w_low = detail::get_as<double>(j, "energy_w_low", path);
  r.energies.w_high = detail::get_as<double>(j, "energy_w_high", path);
  r.bits_low = detail::get_as<int>(j, "bits_low", path);
  r.bits_high = detail::get_as<int>(j, "bits_high", path);
  r.rank = detail::get_as<std::size_t>(j, "rank", path);
  r.seed = detail::get_as<std::uint64_t>(j, "seed", path);
  return r;
}

/// One JSON object per line.
inline std::string reports_to_jsonl(const std::vector<ErrorReport>& reports) {
  std::string out;
  for (const auto& r : reports) out += to_json(r).dump() + "\n";
  return out;
}

inline std::string reports_to_csv(const std::vector<ErrorReport>& reports) {
  std::string out;
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  for (const auto& r : reports) {
    const json j = to_json(r);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out += ",";
      const json& v = j[cols[i]];
      if (v.is_string()) {
        out += v.get<std::string>();
      } else if (v.is_number_float()) {
        out += detail::format_double(v.get<double>());
      } else {
        out += v.dump();
      }
    }
    out += "\n";
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Report files carry the effective run config as their first record and,
/// for sweeps, a trailing summary. JSON-lines writes them as {"config": ...}
/// and {"summary": ...} objects; CSV as lines starting with '#'.
inline bool is_report_metadata(const json& j) {
  return j.is_object() && !j.contains("group") && (j.contains("config") || j.contains("summary"));
}

inline std::string format_reports(const std::vector<ErrorReport>& reports, const std::string& format,
                                  const json& config, const json& summary = nullptr) {
  std::string out;
  if (format == "csv") {
    out += "# config=" + config.dump() + "\n";
    out += reports_to_csv(reports);
    if (!summary.is_null()) out += "# summary=" + summary.dump() + "\n";
  } else if (format == "json") {
    out += json{{"config", config}}.dump() + "\n";
    out += reports_to_jsonl(reports);
    if (!summary.is_null()) out += json{{"summary", summary}}.dump() + "\n";
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown report format '" + format + "'");
  }
  return out;
}

/// Parses either CSV (header row first) or JSON-lines report text.
inline std::vector<ErrorReport> parse_reports(const std::string& text, const std::string& where) {
  std::vector<ErrorReport> out;
  std::istringstream in(text);
  std::string line;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error&) {
        throw Error(ErrorCode::kSchema, where + ":" + std::to_string(lineno) + ": invalid JSON");
      }
      if (is_report_metadata(j)) continue;
      out.push_back(report_from_json(j, where + ":" + std::to_string(lineno)));
    }
    return out;
  }

  std::size_t lineno = 0;
  auto next_row = [&]() {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line.front() != '#') return true;
    }
    return false;
  };
  if (!next_row()) return out;
  const std::vector<std::string> header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
  for (const auto& col : report_columns()) {
    if (!index.contains(col)) throw Error(ErrorCode::kSchema, where + ": missing column '" + col + "'");
  }
  while (next_row()) {
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kSchema, where + ":" + std::to_string(lineno) + ": expected " +
                                          std::to_string(header.size()) + " cells");
    }
    json j;
    for (const auto& col : report_columns()) {
      const std::string& cell = cells[index[col]];
      if (col == "group" || col == "objective") {
        j[col] = cell;
      } else {
        try {
          j[col] = json::parse(cell);
        } catch (const json::parse_error&) {
          throw Error(ErrorCode::kSchema, where + ":" + std::to_string(lineno) + "." + col + ": not a number");
        }
      }
    }
    // Integers in float columns parse as integers; report_from_json accepts both.
    out.push_back(report_from_json(j, where + ":" + std::to_string(lineno)));
  }
  return out;
}

inline std::vector<ErrorReport> read_reports(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open report '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_reports(ss.str(), path.string());
}

}  // namespace subq
