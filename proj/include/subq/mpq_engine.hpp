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

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "subq/calib_stats.hpp"
#include "subq/matrix.hpp"
#include "subq/quantizer.hpp"
#include "subq/subspace_solver.hpp"

namespace subq {

/// Symmetry and granularity of one operand family; bits come from the plan.
struct SideScheme {
  bool symmetric = false;
  Granularity granularity = Granularity::kPerToken;
  std::size_t head_dim = 0;

  bool operator==(const SideScheme&) const = default;
};

/// Defaults: per-token asymmetric activations, per-channel symmetric weights,
/// per-head asymmetric KV cache.
struct QuantScheme {
  SideScheme activation{false, Granularity::kPerToken, 0};
  SideScheme weight{true, Granularity::kPerChannel, 0};
  SideScheme kv{false, Granularity::kPerHead, 0};

  bool operator==(const QuantScheme&) const = default;
};

struct MixedPrecisionPlan {
  ProjectionGroup group;
  SubspacePartition partition;
  QuantSpec act_low;
  QuantSpec weight_low;
  QuantSpec act_high;
  QuantSpec weight_high;

  bool operator==(const MixedPrecisionPlan&) const = default;
};

namespace detail {

inline int effective_bits(const QuantSpec& s) { return s.bypass ? 64 : s.bits; }

inline QuantSpec side_spec(const SideScheme& side, int bits, std::size_t slice_width, bool kv) {
  QuantSpec s;
  s.bits = bits;
  s.symmetric = side.symmetric;
  s.granularity = side.granularity;
  // One KV head per stats group, so a per-head group is the whole slice row.
  s.head_dim = (kv && side.granularity == Granularity::kPerHead) ? slice_width : side.head_dim;
  return s;
}

}  // namespace detail

inline void validate_plan(const MixedPrecisionPlan& plan) {
  for (const QuantSpec* s : {&plan.act_low, &plan.weight_low, &plan.act_high, &plan.weight_high}) s->validate();
  if (detail::effective_bits(plan.act_high) < detail::effective_bits(plan.act_low) ||
      detail::effective_bits(plan.weight_high) < detail::effective_bits(plan.weight_low)) {
    throw Error(ErrorCode::kInvalidArgument, "plan '" + plan.group.name + "': high-precision bits below low");
  }
  const std::size_t d = plan.partition.dim();
  if (plan.partition.u.cols() != d || plan.partition.rank() == 0 || plan.partition.rank() >= d) {
    throw Error(ErrorCode::kInvalidArgument, "plan '" + plan.group.name + "': malformed partition");
  }
}

/// Assembles a plan with the scheme's symmetry/granularity at the given bits.
/// KV groups quantize the cached operand per head.
inline MixedPrecisionPlan make_plan(ProjectionGroup group, SubspacePartition partition, int bits_low, int bits_high,
                                    const QuantScheme& scheme = {}) {
  const std::size_t d = partition.dim();
  const std::size_t r = partition.rank();
  const bool kv = is_kv(group.kind);
  const SideScheme& act = kv ? scheme.kv : scheme.activation;
  MixedPrecisionPlan plan;
  plan.act_low = detail::side_spec(act, bits_low, d - r, kv);
  plan.act_high = detail::side_spec(act, bits_high, r, kv);
  plan.weight_low = detail::side_spec(scheme.weight, bits_low, d - r, false);
  plan.weight_high = detail::side_spec(scheme.weight, bits_high, r, false);
  plan.group = std::move(group);
  plan.partition = std::move(partition);
  validate_plan(plan);
  return plan;
}

/// Same plan with every quantizer disabled.
inline MixedPrecisionPlan bypass_plan(MixedPrecisionPlan plan) {
  plan.act_low = plan.act_high = plan.weight_low = plan.weight_high = QuantSpec::passthrough();
  return plan;
}

struct Decomposition {
  Matrix x_l;  // X U_l
  Matrix x_h;  // X U_h
  Matrix w_l;  // U_lᵀ W
  Matrix w_h;  // U_hᵀ W
};

inline Decomposition decompose(const Matrix& x, const Matrix& w, const SubspacePartition& partition) {
  const std::size_t d = partition.dim();
  const std::size_t r = partition.rank();
  if (x.cols() != d || w.rows() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "decompose: X is " + std::to_string(x.rows()) + "x" +
                                                   std::to_string(x.cols()) + ", W is " + std::to_string(w.rows()) +
                                                   "x" + std::to_string(w.cols()) + ", partition dim " +
                                                   std::to_string(d));
  }
  const Matrix xu = matmul(x, partition.u);
  const Matrix utw = matmul_tn(partition.u, w);
  return Decomposition{xu.cols_range(0, d - r), xu.cols_range(d - r, r), utw.rows_range(0, d - r),
                       utw.rows_range(d - r, r)};
}

struct SubspaceEnergies {
  double x_low = 0.0;
  double x_high = 0.0;
  double w_low = 0.0;
  double w_high = 0.0;
};

struct ErrorReport {
  std::string group;
  ObjectiveKind objective = ObjectiveKind::kJoint;
  double exact_error = 0.0;      // ‖Ŷ − Y‖_F²
  double exact_error_fro = 0.0;  // ‖Ŷ − Y‖_F
  double predicted_error = 0.0;
  double relative_reduction = 0.0;  // 1 − exact/baseline_exact
  SubspaceEnergies energies;
  int bits_low = 0;   // 0 when bypassed
  int bits_high = 0;  // 0 when bypassed
  std::size_t rank = 0;
  std::uint64_t seed = 0;
};

/// Σ_k γ_k‖X_k‖²‖W_k‖² with γ_k = (α_k² + β_k²)/d_k.
inline double predict_error(const SubspaceEnergies& e, int bits_low, int bits_high, std::size_t dim_low,
                            std::size_t dim_high) {
  if (e.x_low < 0 || e.x_high < 0 || e.w_low < 0 || e.w_high < 0) {
    throw Error(ErrorCode::kInvalidArgument, "predict_error: negative energy");
  }
  return combined_error_coeff(bits_low, dim_low) * e.x_low * e.w_low +
         combined_error_coeff(bits_high, dim_high) * e.x_high * e.w_high;
}

/// Prediction for a plan whose activation and weight quantizers may differ
/// (a bypassed quantizer contributes no noise).
inline double predict_error(const SubspaceEnergies& e, const MixedPrecisionPlan& plan) {
  const auto d_l = static_cast<double>(plan.partition.dim() - plan.partition.rank());
  const auto d_h = static_cast<double>(plan.partition.rank());
  const double gamma_l = (relative_error_coeff(plan.act_low) + relative_error_coeff(plan.weight_low)) / d_l;
  const double gamma_h = (relative_error_coeff(plan.act_high) + relative_error_coeff(plan.weight_high)) / d_h;
  return gamma_l * e.x_low * e.w_low + gamma_h * e.x_high * e.w_high;
}

struct ExecutionResult {
  Matrix y_hat;
  ErrorReport report;
};

/// Ŷ = Q_l(X_l)Q_l(W_l) + Q_h(X_h)Q_h(W_h), with quantizers applied in the
/// rotated basis, and its error against the full-precision XW.
inline ExecutionResult execute_plan(const Matrix& x, const Matrix& w, const MixedPrecisionPlan& plan) {
  validate_plan(plan);
  const Decomposition parts = decompose(x, w, plan.partition);
  const Matrix xq_l = quantize(parts.x_l, plan.act_low).dequantized;
  const Matrix wq_l = quantize(parts.w_l, plan.weight_low).dequantized;
  const Matrix xq_h = quantize(parts.x_h, plan.act_high).dequantized;
  const Matrix wq_h = quantize(parts.w_h, plan.weight_high).dequantized;

  ExecutionResult out;
  out.y_hat = add(matmul(xq_l, wq_l), matmul(xq_h, wq_h));
  const Matrix y = matmul(x, w);

  ErrorReport& rep = out.report;
  rep.group = plan.group.name;
  rep.objective = plan.partition.objective;
  rep.exact_error = frobenius_sq(subtract(out.y_hat, y));
  rep.exact_error_fro = std::sqrt(rep.exact_error);
  rep.energies = {frobenius_sq(parts.x_l), frobenius_sq(parts.x_h), frobenius_sq(parts.w_l),
                  frobenius_sq(parts.w_h)};
  rep.predicted_error = predict_error(rep.energies, plan);
  rep.bits_low = plan.act_low.bypass ? 0 : plan.act_low.bits;
  rep.bits_high = plan.act_high.bypass ? 0 : plan.act_high.bits;
  rep.rank = plan.partition.rank();
  rep.seed = plan.partition.seed;
  return out;
}

inline double relative_reduction(double error, double baseline) {
  return baseline > 0.0 ? 1.0 - error / baseline : 0.0;
}

/// Stats of a single layer taken directly from its input and weight.
inline CalibStats layer_stats(const Matrix& x, const Matrix& w, std::string name = "layer") {
  ProjectionGroup g;
  g.name = std::move(name);
  g.kind = GroupKind::kLinear;
  g.dim = x.cols();
  CalibStats s = accumulate_activations(make_stats(std::move(g)), x);
  return with_weights(std::move(s), std::span<const Matrix>(&w, 1));
}

struct AnalyzeOptions {
  RotationKind rotation = RotationKind::kRandom;
  QuantScheme scheme;
  std::string group = "layer";
};

constexpr std::array<ObjectiveKind, 3> kAllObjectives = {ObjectiveKind::kJoint, ObjectiveKind::kActivationOnly,
                                                         ObjectiveKind::kWeightOnly};

/// Quantizes one layer under each objective (joint, activation-only,
/// weight-only) with shared rank, bits and seed. relative_reduction is taken
/// against the activation-only report.
inline std::vector<ErrorReport> analyze_layer(const Matrix& x, const Matrix& w, std::size_t rank, int bits_low,
                                              int bits_high, std::uint64_t seed, const AnalyzeOptions& opts = {}) {
  const CalibStats stats = layer_stats(x, w, opts.group);
  std::vector<ErrorReport> reports;
  for (ObjectiveKind objective : kAllObjectives) {
    SubspacePartition part = solve_partition_for_bits(stats, rank, objective, bits_low, seed, opts.rotation);
    const MixedPrecisionPlan plan = make_plan(stats.group, std::move(part), bits_low, bits_high, opts.scheme);
    reports.push_back(execute_plan(x, w, plan).report);
  }
  const double baseline = reports[1].exact_error;
  for (ErrorReport& rep : reports) rep.relative_reduction = relative_reduction(rep.exact_error, baseline);
  return reports;
}

struct KvPlanConfig {
  double rank_ratio = 0.125;
  int bits_low = 4;
  int bits_high = 8;
  ObjectiveKind objective = ObjectiveKind::kJoint;
  std::uint64_t seed = 0;
  RotationKind rotation = RotationKind::kRandom;
  QuantScheme scheme;
};

/// One plan per KV head and path. Every head index present on one path must
/// be present on the other, and indices must run 0..H-1.
inline std::vector<MixedPrecisionPlan> build_kv_plans(std::span<const CalibStats> kv_stats,
                                                      const KvPlanConfig& config) {
  if (kv_stats.empty()) throw Error(ErrorCode::kInvalidArgument, "build_kv_plans: no head stats");
  std::map<GroupKind, std::set<std::size_t>> heads;
  for (const CalibStats& s : kv_stats) {
    if (!is_kv(s.group.kind)) {
      throw Error(ErrorCode::kInvalidArgument, "build_kv_plans: group '" + s.group.name + "' is not a KV group");
    }
    if (!heads[s.group.kind].insert(s.group.head_index).second) {
      throw Error(ErrorCode::kInvalidArgument, "build_kv_plans: duplicate stats for head " +
                                                   std::to_string(s.group.head_index) + " of " +
                                                   std::string(to_string(s.group.kind)));
    }
  }
  const std::set<std::size_t>& first = heads.begin()->second;
  for (const auto& [kind, set] : heads) {
    if (set != first) {
      throw Error(ErrorCode::kInvalidArgument, "build_kv_plans: missing head stats for " +
                                                   std::string(to_string(kind)) + " path");
    }
  }
  std::size_t expect = 0;
  for (std::size_t h : first) {
    if (h != expect++) {
      throw Error(ErrorCode::kInvalidArgument, "build_kv_plans: missing head stats for head " +
                                                   std::to_string(expect - 1));
    }
  }

  std::vector<MixedPrecisionPlan> plans;
  plans.reserve(kv_stats.size());
  for (const CalibStats& s : kv_stats) {
    const std::size_t rank = default_rank(s.group.dim, config.rank_ratio);
    SubspacePartition part =
        solve_partition_for_bits(s, rank, config.objective, config.bits_low, config.seed, config.rotation);
    plans.push_back(make_plan(s.group, std::move(part), config.bits_low, config.bits_high, config.scheme));
  }
  return plans;
}

}  // namespace subq
