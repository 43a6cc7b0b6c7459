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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "subq/matrix.hpp"

namespace subq {

enum class GroupKind { kAttnInput, kMlpInput, kKvValue, kKvKey, kLinear };

constexpr std::string_view to_string(GroupKind k) {
  switch (k) {
    case GroupKind::kAttnInput: return "attn-input";
    case GroupKind::kMlpInput: return "mlp-input";
    case GroupKind::kKvValue: return "kv-value";
    case GroupKind::kKvKey: return "kv-key";
    case GroupKind::kLinear: return "linear";
  }
  return "unknown";
}

inline GroupKind parse_group_kind(std::string_view s) {
  if (s == "attn-input") return GroupKind::kAttnInput;
  if (s == "mlp-input") return GroupKind::kMlpInput;
  if (s == "kv-value") return GroupKind::kKvValue;
  if (s == "kv-key") return GroupKind::kKvKey;
  if (s == "linear") return GroupKind::kLinear;
  throw Error(ErrorCode::kInvalidArgument, "unknown group kind '" + std::string(s) + "'");
}

constexpr bool is_kv(GroupKind k) { return k == GroupKind::kKvValue || k == GroupKind::kKvKey; }

/// Linear layers that consume the same input, e.g. Q/K/V or gate/up, or one
/// KV head. `dim` is the shared input dimension d.
struct ProjectionGroup {
  std::string name;
  GroupKind kind = GroupKind::kLinear;
  std::size_t dim = 0;
  std::vector<std::pair<std::size_t, std::size_t>> member_shapes;  // (d, m_i)
  std::size_t head_dim = 0;
  std::size_t head_index = 0;

  bool operator==(const ProjectionGroup&) const = default;
};

/// Uncentered second moments of one group: Σ_X = ΣXᵀX over batches, fused
/// Σ_W = Σ_i W_i W_iᵀ, and the matching Frobenius energies.
struct CalibStats {
  ProjectionGroup group;
  Matrix sigma_x;
  Matrix sigma_w;
  double energy_x = 0.0;
  double energy_w = 0.0;
  std::uint64_t tokens_seen = 0;

  bool operator==(const CalibStats&) const = default;
};

inline CalibStats make_stats(ProjectionGroup group) {
  if (group.dim == 0) throw Error(ErrorCode::kInvalidArgument, "projection group '" + group.name + "' has dim 0");
  CalibStats s;
  const std::size_t d = group.dim;
  s.group = std::move(group);
  s.sigma_x = Matrix(d, d);
  s.sigma_w = Matrix(d, d);
  return s;
}

inline CalibStats accumulate_activations(CalibStats stats, const Matrix& batch) {
  if (batch.cols() != stats.group.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "group '" + stats.group.name + "': activation batch has " +
                                                   std::to_string(batch.cols()) + " columns, expected " +
                                                   std::to_string(stats.group.dim));
  }
  if (batch.rows() == 0) return stats;
  axpy_inplace(stats.sigma_x, 1.0, gram_input(batch));
  stats.energy_x += frobenius_sq(batch);
  stats.tokens_seen += batch.rows();
  return stats;
}

/// Field-wise sum of two shards of the same group.
inline CalibStats merge(CalibStats a, const CalibStats& b) {
  if (a.group.dim != b.group.dim || a.group.name != b.group.name) {
    throw Error(ErrorCode::kDimensionMismatch, "merge: shards belong to different groups");
  }
  axpy_inplace(a.sigma_x, 1.0, b.sigma_x);
  axpy_inplace(a.sigma_w, 1.0, b.sigma_w);
  a.energy_x += b.energy_x;
  a.energy_w += b.energy_w;
  a.tokens_seen += b.tokens_seen;
  return a;
}

struct FusedWeightCovariance {
  Matrix sigma_w;
  double energy_w = 0.0;
};

/// Σ_W = Σ_i W_i W_iᵀ and Σ_i ‖W_i‖_F² for members sharing the input dim.
inline FusedWeightCovariance fuse_weight_covariance(std::span<const Matrix> weights) {
  if (weights.empty()) throw Error(ErrorCode::kInvalidArgument, "fuse_weight_covariance: no weights");
  const std::size_t d = weights.front().rows();
  FusedWeightCovariance out{Matrix(d, d), 0.0};
  for (const Matrix& w : weights) {
    if (w.rows() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "fuse_weight_covariance: member has leading dim " +
                                                     std::to_string(w.rows()) + ", expected " + std::to_string(d));
    }
    axpy_inplace(out.sigma_w, 1.0, gram_weight(w));
    out.energy_w += frobenius_sq(w);
  }
  return out;
}

/// Installs the fused weight covariance of `weights` into stats.
inline CalibStats with_weights(CalibStats stats, std::span<const Matrix> weights) {
  auto fused = fuse_weight_covariance(weights);
  if (fused.sigma_w.rows() != stats.group.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "group '" + stats.group.name + "': weight leading dim " +
                                                   std::to_string(fused.sigma_w.rows()) + " != " +
                                                   std::to_string(stats.group.dim));
  }
  stats.group.member_shapes.clear();
  for (const Matrix& w : weights) stats.group.member_shapes.emplace_back(w.rows(), w.cols());
  stats.sigma_w = std::move(fused.sigma_w);
  stats.energy_w = fused.energy_w;
  return stats;
}

/// Value cache of one KV head: Σ_X from the cached V tokens, Σ_W from that
/// head's slice of the output projection (head_dim x m).
inline CalibStats kv_value_stats(const Matrix& v_tokens, const Matrix& w_o_head, std::size_t head_index = 0) {
  if (v_tokens.cols() != w_o_head.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "kv_value_stats: V has " + std::to_string(v_tokens.cols()) +
                                                   " columns but W_O slice has " + std::to_string(w_o_head.rows()) +
                                                   " rows");
  }
  ProjectionGroup g;
  g.name = "kv-value/" + std::to_string(head_index);
  g.kind = GroupKind::kKvValue;
  g.dim = v_tokens.cols();
  g.head_dim = v_tokens.cols();
  g.head_index = head_index;
  CalibStats s = accumulate_activations(make_stats(std::move(g)), v_tokens);
  return with_weights(std::move(s), std::span<const Matrix>(&w_o_head, 1));
}

/// Key cache of one KV head: Σ_X from post-RoPE keys, Σ_W from post-RoPE
/// queries (the queries act as the dynamic weights of QKᵀ).
inline CalibStats kv_key_stats(const Matrix& k_tokens, const Matrix& q_tokens, std::size_t head_index = 0) {
  if (k_tokens.cols() != q_tokens.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "kv_key_stats: K head_dim " + std::to_string(k_tokens.cols()) +
                                                   " != Q head_dim " + std::to_string(q_tokens.cols()));
  }
  ProjectionGroup g;
  g.name = "kv-key/" + std::to_string(head_index);
  g.kind = GroupKind::kKvKey;
  g.dim = k_tokens.cols();
  g.head_dim = k_tokens.cols();
  g.head_index = head_index;
  CalibStats s = accumulate_activations(make_stats(std::move(g)), k_tokens);
  if (q_tokens.rows() > 0) {
    s.sigma_w = gram_input(q_tokens);
    s.energy_w = frobenius_sq(q_tokens);
  }
  return s;
}

/// Stats for one group from all of its calibration batches. For kv-key groups
/// the weight side is the query second moment, so `weights` must be empty and
/// `queries` supplies the post-RoPE query batches.
inline CalibStats calibrate_group(ProjectionGroup group, std::span<const Matrix> activations,
                                  std::span<const Matrix> weights, std::span<const Matrix> queries = {}) {
  if (activations.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "group '" + group.name + "': no activation batches");
  }
  if (group.dim == 0) group.dim = activations.front().cols();
  if (is_kv(group.kind) && group.head_dim == 0) group.head_dim = group.dim;
  CalibStats s = make_stats(std::move(group));
  for (const Matrix& batch : activations) s = accumulate_activations(std::move(s), batch);

  if (s.group.kind == GroupKind::kKvKey) {
    if (!weights.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "group '" + s.group.name + "': kv-key takes queries, not weights");
    }
    if (queries.empty()) throw Error(ErrorCode::kInvalidArgument, "group '" + s.group.name + "': no query batches");
    for (const Matrix& q : queries) {
      if (q.cols() != s.group.dim) {
        throw Error(ErrorCode::kDimensionMismatch, "group '" + s.group.name + "': query head_dim " +
                                                       std::to_string(q.cols()) + " != " +
                                                       std::to_string(s.group.dim));
      }
      if (q.rows() == 0) continue;
      axpy_inplace(s.sigma_w, 1.0, gram_input(q));
      s.energy_w += frobenius_sq(q);
    }
    return s;
  }
  if (!queries.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "group '" + s.group.name + "': queries are only used by kv-key groups");
  }
  if (weights.empty()) throw Error(ErrorCode::kInvalidArgument, "group '" + s.group.name + "': no weight tensors");
  return with_weights(std::move(s), weights);
}

}  // namespace subq
