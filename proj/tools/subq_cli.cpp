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

// subq: calibrate -> solve -> simulate -> analyze -> compare.
//
// Exit codes: 0 success, 1 numerical failure (no convergence / no signal),
// 2 usage, schema or I/O error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subq/subq.hpp"

namespace fs = std::filesystem;
using subq::Error;
using subq::ErrorCode;
using subq::json;
using subq::Matrix;

namespace {

// Flags shared by the planning commands. Unset optionals leave the config
// file value in place.
struct Overrides {
  std::string config_path;
  std::optional<double> rank_ratio;
  std::optional<int> bits_low;
  std::optional<int> bits_high;
  std::optional<std::string> objective;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> rotation;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Run configuration JSON")->check(CLI::ExistingFile);
  cmd->add_option("--rank-ratio", o.rank_ratio, "Fraction of channels kept at high precision (0, 1)");
  cmd->add_option("--bits-low", o.bits_low, "Bit width of the low-precision subspace")->check(CLI::Range(2, 16));
  cmd->add_option("--bits-high", o.bits_high, "Bit width of the high-precision subspace")->check(CLI::Range(2, 16));
  cmd->add_option("--objective", o.objective, "Subspace objective")
      ->check(CLI::IsMember({"joint", "activation", "weight"}));
  cmd->add_option("--seed", o.seed, "Seed of the in-subspace rotations");
  cmd->add_option("--rotation", o.rotation, "In-subspace rotation")->check(CLI::IsMember({"random", "hadamard"}));
}

subq::RunConfig effective_config(const Overrides& o) {
  subq::RunConfig c = o.config_path.empty() ? subq::RunConfig{} : subq::read_run_config(o.config_path);
  if (o.rank_ratio) c.rank_ratio = *o.rank_ratio;
  if (o.bits_low) c.bits_low = *o.bits_low;
  if (o.bits_high) c.bits_high = *o.bits_high;
  if (o.objective) c.objective = subq::parse_objective(*o.objective);
  if (o.seed) c.seed = *o.seed;
  if (o.rotation) c.rotation = subq::parse_rotation(*o.rotation);
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidArgument, e.what());
  }
  return c;
}

Matrix load_tensor(const fs::path& path) { return subq::read_tensor(path).value; }

std::vector<Matrix> load_all(const std::vector<std::string>& paths, const fs::path& base) {
  std::vector<Matrix> out;
  for (const auto& p : paths) {
    const fs::path full = fs::path(p).is_absolute() ? fs::path(p) : base / p;
    out.push_back(load_tensor(full));
  }
  return out;
}

void write_text_atomic(const fs::path& path, const std::string& text) { subq::write_file_atomic(path, text); }

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
  Overrides overrides;
  std::vector<std::string> act;
  std::vector<std::string> weight;
  std::vector<std::string> query;
  std::string name = "layer";
  std::string kind = "linear";
  std::size_t head_index = 0;
  std::string out;
};

int run_calibrate(const CalibrateArgs& a) {
  subq::RunConfig cfg = effective_config(a.overrides);
  fs::path base = a.overrides.config_path.empty() ? fs::path(".") : fs::path(a.overrides.config_path).parent_path();
  if (base.empty()) base = ".";

  if (!a.act.empty()) {
    subq::GroupConfig g;
    g.name = a.name;
    g.kind = subq::parse_group_kind(a.kind);
    g.activations = a.act;
    g.weights = a.weight;
    g.queries = a.query;
    g.head_index = a.head_index;
    cfg.groups = {g};
    base = ".";
  }
  if (cfg.groups.empty()) throw Error(ErrorCode::kInvalidArgument, "calibrate: no groups (use --config or --act)");

  subq::StatsFile file;
  for (const subq::GroupConfig& g : cfg.groups) {
    if (g.activations.empty()) {
      throw Error(ErrorCode::kSchema, "group '" + g.name + "': missing activation files");
    }
    if (g.kind == subq::GroupKind::kKvKey ? g.queries.empty() : g.weights.empty()) {
      throw Error(ErrorCode::kSchema, "group '" + g.name + "': missing " +
                                          std::string(g.kind == subq::GroupKind::kKvKey ? "query" : "weight") +
                                          " files");
    }
    std::vector<Matrix> acts, weights, queries;
    try {
      acts = load_all(g.activations, base);
      weights = load_all(g.weights, base);
      queries = load_all(g.queries, base);
    } catch (const Error& e) {
      throw Error(e.code(), "group '" + g.name + "': " + e.what());
    }
    subq::ProjectionGroup pg;
    pg.name = g.name;
    pg.kind = g.kind;
    pg.head_index = g.head_index;
    file.stats.push_back(subq::calibrate_group(pg, acts, weights, queries));
  }
  file.config = subq::to_json(cfg);
  subq::write_stats(a.out, file);
  return 0;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  Overrides overrides;
  std::string stats;
  std::string out;
};

int run_solve(const SolveArgs& a) {
  const subq::RunConfig cfg = effective_config(a.overrides);
  const subq::StatsFile stats = subq::read_stats(a.stats);
  if (stats.stats.empty()) throw Error(ErrorCode::kSchema, a.stats + ": no groups");

  std::vector<subq::CalibStats> kv;
  for (const auto& s : stats.stats)
    if (subq::is_kv(s.group.kind)) kv.push_back(s);
  std::map<std::string, subq::MixedPrecisionPlan> kv_plans;
  if (!kv.empty()) {
    subq::KvPlanConfig kc{cfg.rank_ratio, cfg.bits_low, cfg.bits_high, cfg.objective,
                             cfg.seed,       cfg.rotation, cfg.quant};
    for (auto& p : subq::build_kv_plans(kv, kc)) kv_plans.emplace(p.group.name, std::move(p));
  }

  subq::PlanFile file;
  for (const auto& s : stats.stats) {
    subq::MixedPrecisionPlan plan;
    if (subq::is_kv(s.group.kind)) {
      plan = kv_plans.at(s.group.name);
    } else {
      const std::size_t rank = subq::default_rank(s.group.dim, cfg.rank_ratio);
      auto part = subq::solve_partition_for_bits(s, rank, cfg.objective, cfg.bits_low, cfg.seed, cfg.rotation);
      plan = subq::make_plan(s.group, std::move(part), cfg.bits_low, cfg.bits_high, cfg.quant);
    }
    if (cfg.bypass) plan = subq::bypass_plan(std::move(plan));
    file.plans.push_back(std::move(plan));
  }
  file.config = subq::to_json(cfg);
  file.config["stats"] = a.stats;
  subq::write_plans(a.out, file);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string plan;
  std::string x;
  std::string w;
  std::string group;
  std::optional<int> bits_low;
  std::optional<int> bits_high;
  bool bypass = false;
  std::string out;
  std::string format = "json";
};

int run_simulate(const SimulateArgs& a) {
  const subq::PlanFile plans = subq::read_plans(a.plan);
  const subq::MixedPrecisionPlan* chosen = nullptr;
  if (a.group.empty()) {
    if (plans.plans.size() != 1) {
      throw Error(ErrorCode::kInvalidArgument, a.plan + " holds " + std::to_string(plans.plans.size()) +
                                                   " plans; pick one with --group");
    }
    chosen = &plans.plans.front();
  } else {
    for (const auto& p : plans.plans)
      if (p.group.name == a.group) chosen = &p;
    if (!chosen) throw Error(ErrorCode::kInvalidArgument, a.plan + ": no plan for group '" + a.group + "'");
  }
  subq::MixedPrecisionPlan plan = *chosen;
  if (a.bits_low) plan.act_low.bits = plan.weight_low.bits = *a.bits_low;
  if (a.bits_high) plan.act_high.bits = plan.weight_high.bits = *a.bits_high;
  if (a.bypass) plan = subq::bypass_plan(std::move(plan));
  subq::validate_plan(plan);

  const Matrix x = load_tensor(a.x);
  const Matrix w = load_tensor(a.w);
  const subq::ExecutionResult res = subq::execute_plan(x, w, plan);

  json config = plans.config;
  config["plan"] = a.plan;
  config["group"] = plan.group.name;
  config["x"] = a.x;
  config["w"] = a.w;
  config["act_low"] = subq::to_json(plan.act_low);
  config["weight_low"] = subq::to_json(plan.weight_low);
  config["act_high"] = subq::to_json(plan.act_high);
  config["weight_high"] = subq::to_json(plan.weight_high);
  const std::string text = subq::format_reports({res.report}, a.format, config);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text_atomic(a.out, text);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  Overrides overrides;
  std::string synthetic;
  std::string preset;
  std::string x;
  std::string w;
  std::size_t d = 32;
  std::size_t n = 256;
  std::size_t m = 32;
  std::size_t sweep = 0;
  std::string out;
  std::string format = "json";
};

int run_analyze(const AnalyzeArgs& a) {
  const subq::RunConfig cfg = effective_config(a.overrides);
  const int sources = int(!a.synthetic.empty()) + int(!a.preset.empty()) + int(!a.x.empty() || !a.w.empty());
  if (sources != 1) {
    throw Error(ErrorCode::kInvalidArgument, "analyze: give exactly one of --synthetic, --preset, or --x/--w");
  }
  if (a.x.empty() != a.w.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "analyze: --x and --w go together");
  }

  subq::AnalyzeOptions opts;
  opts.rotation = cfg.rotation;
  opts.scheme = cfg.quant;

  json config = subq::to_json(cfg);
  std::vector<subq::ErrorReport> reports;
  json summary = nullptr;

  if (!a.x.empty()) {
    const Matrix x = load_tensor(a.x);
    const Matrix w = load_tensor(a.w);
    config["x"] = a.x;
    config["w"] = a.w;
    reports = subq::analyze_layer(x, w, subq::default_rank(x.cols(), cfg.rank_ratio), cfg.bits_low,
                                     cfg.bits_high, cfg.seed, opts);
  } else {
    subq::SyntheticInstanceSpec base;
    if (!a.synthetic.empty()) {
      std::ifstream in(a.synthetic);
      if (!in) throw Error(ErrorCode::kIo, "cannot open synthetic spec '" + a.synthetic + "'");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kSchema, a.synthetic + ": invalid JSON");
      }
      try {
        base = subq::synthetic_spec_from_json(j);
      } catch (const Error& e) {
        throw Error(e.code(), a.synthetic + ": " + e.what());
      }
      config["synthetic"] = subq::to_json(base);
    } else {
      base = subq::synthetic_preset(a.preset, a.d, a.n, a.m, cfg.seed);
      config["preset"] = {{"name", a.preset}, {"d", a.d}, {"n", a.n}, {"m", a.m}};
    }
    const std::size_t count = a.sweep == 0 ? 1 : a.sweep;
    const std::uint64_t first = a.synthetic.empty() ? cfg.seed : base.seed;
    std::size_t wins = 0;
    double total_reduction = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      subq::SyntheticInstanceSpec spec = base;
      spec.seed = first + i;
      const subq::SyntheticInstance inst = subq::generate_instance(spec);
      opts.group = "instance-" + std::to_string(spec.seed);
      auto reps = subq::analyze_layer(inst.x, inst.w, subq::default_rank(spec.d, cfg.rank_ratio),
                                         cfg.bits_low, cfg.bits_high, cfg.seed, opts);
      if (reps[0].exact_error <= reps[1].exact_error) ++wins;
      total_reduction += reps[0].relative_reduction;
      reports.insert(reports.end(), reps.begin(), reps.end());
    }
    if (a.sweep > 0) {
      summary = {{"instances", count},
                 {"joint_wins", wins},
                 {"win_rate", static_cast<double>(wins) / static_cast<double>(count)},
                 {"mean_reduction", total_reduction / static_cast<double>(count)}};
      config["sweep"] = a.sweep;
    }
  }

  const std::string text = subq::format_reports(reports, a.format, config, summary);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text_atomic(a.out, text);
    if (!summary.is_null()) std::cout << "summary " << summary.dump() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
  std::string a;
  std::string b;
  std::string out;
  std::string format = "json";
};

int run_compare(const CompareArgs& args) {
  const auto ra = subq::read_reports(args.a);
  const auto rb = subq::read_reports(args.b);
  using Key = std::pair<std::string, std::string>;
  auto key = [](const subq::ErrorReport& r) { return Key{r.group, std::string(subq::to_string(r.objective))}; };
  std::map<Key, const subq::ErrorReport*> in_b;
  for (const auto& r : rb) in_b[key(r)] = &r;

  json rows = json::array();
  std::size_t only_a = 0;
  double max_delta = 0.0;
  std::map<Key, bool> matched;
  for (const auto& r : ra) {
    auto it = in_b.find(key(r));
    if (it == in_b.end()) {
      ++only_a;
      continue;
    }
    matched[key(r)] = true;
    const subq::ErrorReport& o = *it->second;
    const double de = o.exact_error - r.exact_error;
    max_delta = std::max(max_delta, std::abs(de));
    rows.push_back({{"group", r.group},
                    {"objective", key(r).second},
                    {"exact_error_a", r.exact_error},
                    {"exact_error_b", o.exact_error},
                    {"delta_exact_error", de},
                    {"delta_predicted_error", o.predicted_error - r.predicted_error},
                    {"delta_relative_reduction", o.relative_reduction - r.relative_reduction},
                    {"bits_low_a", r.bits_low},
                    {"bits_low_b", o.bits_low},
                    {"bits_high_a", r.bits_high},
                    {"bits_high_b", o.bits_high}});
  }
  const std::size_t only_b = rb.size() - matched.size();
  const json summary = {{"matched", rows.size()},
                        {"only_in_a", only_a},
                        {"only_in_b", only_b},
                        {"max_abs_delta_exact_error", max_delta},
                        {"identical", only_a == 0 && only_b == 0 && max_delta == 0.0}};

  std::string text;
  if (args.format == "csv") {
    static const std::vector<std::string> cols = {"group",       "objective",   "exact_error_a",
                                                  "exact_error_b", "delta_exact_error", "delta_predicted_error",
                                                  "delta_relative_reduction", "bits_low_a", "bits_low_b",
                                                  "bits_high_a", "bits_high_b"};
    for (std::size_t i = 0; i < cols.size(); ++i) text += (i ? "," : "") + cols[i];
    text += "\n";
    for (const json& row : rows) {
      for (std::size_t i = 0; i < cols.size(); ++i) {
        const json& v = row[cols[i]];
        text += i ? "," : "";
        text += v.is_string() ? v.get<std::string>() : v.dump();
      }
      text += "\n";
    }
    text += "# summary=" + summary.dump() + "\n";
  } else {
    text = json{{"rows", rows}, {"summary", summary}}.dump(2) + "\n";
  }
  if (args.out.empty()) {
    std::cout << text;
  } else {
    write_text_atomic(args.out, text);
    std::cout << "summary " << summary.dump() << "\n";
  }
  return 0;
}

int report_error(const Error& e) {
  std::cerr << "subq: " << e.what() << "\n";
  return subq::is_numerical(e.code()) ? 1 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subq: joint weight/activation subspace mixed-precision quantization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("subq 1.0 (") + subq::Rng::kVersion + ")");

  const std::vector<std::string> formats = {"json", "csv"};

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate", "Accumulate per-group second-moment statistics");
  add_override_flags(c_cal, cal.overrides);
  c_cal->add_option("--act", cal.act, "Activation tensor(s) for a single group (n x d), repeatable");
  c_cal->add_option("--weight", cal.weight, "Weight tensor(s) sharing that input (d x m), repeatable");
  c_cal->add_option("--query", cal.query, "Query tensor(s) for a kv-key group, repeatable");
  c_cal->add_option("--name", cal.name, "Group name in single-group mode");
  c_cal->add_option("--kind", cal.kind, "Group kind in single-group mode")
      ->check(CLI::IsMember({"attn-input", "mlp-input", "kv-value", "kv-key", "linear"}));
  c_cal->add_option("--head-index", cal.head_index, "KV head index in single-group mode");
  c_cal->add_option("--out", cal.out, "Stats file to write")->required();

  SolveArgs sol;
  auto* c_sol = app.add_subcommand("solve", "Choose the high-precision subspace for each group");
  add_override_flags(c_sol, sol.overrides);
  c_sol->add_option("--stats", sol.stats, "Stats file from calibrate")->required()->check(CLI::ExistingFile);
  c_sol->add_option("--out", sol.out, "Plan file to write")->required();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run a plan on (X, W) and report the output error");
  c_sim->add_option("--plan", sim.plan, "Plan file from solve")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--x", sim.x, "Input tensor (n x d)")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--w", sim.w, "Weight tensor (d x m)")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--group", sim.group, "Plan to run when the file holds several");
  c_sim->add_option("--bits-low", sim.bits_low, "Override the plan's low bit width")->check(CLI::Range(2, 16));
  c_sim->add_option("--bits-high", sim.bits_high, "Override the plan's high bit width")->check(CLI::Range(2, 16));
  c_sim->add_flag("--bypass", sim.bypass, "Disable all quantizers");
  c_sim->add_option("--out", sim.out, "Report file (stdout if omitted)");
  c_sim->add_option("--format", sim.format, "Report format")->check(CLI::IsMember(formats));

  AnalyzeArgs ana;
  auto* c_ana = app.add_subcommand("analyze", "Compare joint, activation-only and weight-only subspaces");
  add_override_flags(c_ana, ana.overrides);
  c_ana->add_option("--synthetic", ana.synthetic, "Synthetic instance spec JSON")->check(CLI::ExistingFile);
  c_ana->add_option("--preset", ana.preset, "Built-in synthetic instance")
      ->check(CLI::IsMember({"aligned", "weight-dominant"}));
  c_ana->add_option("--d", ana.d, "Preset input dimension")->check(CLI::PositiveNumber);
  c_ana->add_option("--n", ana.n, "Preset token count")->check(CLI::PositiveNumber);
  c_ana->add_option("--m", ana.m, "Preset output dimension")->check(CLI::PositiveNumber);
  c_ana->add_option("--x", ana.x, "Input tensor (n x d)")->check(CLI::ExistingFile);
  c_ana->add_option("--w", ana.w, "Weight tensor (d x m)")->check(CLI::ExistingFile);
  c_ana->add_option("--sweep", ana.sweep, "Run N consecutive instance seeds and add a summary row");
  c_ana->add_option("--out", ana.out, "Report file (stdout if omitted)");
  c_ana->add_option("--format", ana.format, "Report format")->check(CLI::IsMember(formats));

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Diff two reports row by row");
  c_cmp->add_option("a", cmp.a, "First report")->required()->check(CLI::ExistingFile);
  c_cmp->add_option("b", cmp.b, "Second report")->required()->check(CLI::ExistingFile);
  c_cmp->add_option("--out", cmp.out, "Diff file (stdout if omitted)");
  c_cmp->add_option("--format", cmp.format, "Diff format")->check(CLI::IsMember(formats));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_cal) return run_calibrate(cal);
    if (*c_sol) return run_solve(sol);
    if (*c_sim) return run_simulate(sim);
    if (*c_ana) return run_analyze(ana);
    if (*c_cmp) return run_compare(cmp);
  } catch (const Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "subq: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
