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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "subq/calib_stats.hpp"
#include "subq/eigen.hpp"
#include "subq/matrix.hpp"
#include "subq/orthogonal.hpp"
#include "subq/quantizer.hpp"
#include "subq/random.hpp"

namespace subq {

/// Which covariances drive the high-precision subspace choice.
enum class ObjectiveKind { kJoint, kActivationOnly, kWeightOnly };

constexpr std::string_view to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::kJoint: return "joint";
    case ObjectiveKind::kActivationOnly: return "activation";
    case ObjectiveKind::kWeightOnly: return "weight";
  }
  return "unknown";
}

inline ObjectiveKind parse_objective(std::string_view s) {
  if (s == "joint") return ObjectiveKind::kJoint;
  if (s == "activation" || s == "activation-only") return ObjectiveKind::kActivationOnly;
  if (s == "weight" || s == "weight-only") return ObjectiveKind::kWeightOnly;
  throw Error(ErrorCode::kInvalidArgument, "unknown objective '" + std::string(s) + "'");
}

enum class RotationKind { kRandom, kHadamard };

constexpr std::string_view to_string(RotationKind k) {
  return k == RotationKind::kHadamard ? "hadamard" : "random";
}

inline RotationKind parse_rotation(std::string_view s) {
  if (s == "random") return RotationKind::kRandom;
  if (s == "hadamard") return RotationKind::kHadamard;
  throw Error(ErrorCode::kInvalidArgument, "unknown rotation '" + std::string(s) + "'");
}

struct LambdaWeights {
  double lambda_x = 0.0;
  double lambda_w = 0.0;
};

/// λ_X = γ_l‖W‖_F², λ_W = γ_l‖X‖_F², with the unused side zeroed for the
/// single-sided objectives.
inline LambdaWeights lambda_weights(const CalibStats& stats, double gamma_low, ObjectiveKind objective) {
  if (!(gamma_low > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda_weights: gamma_low must be > 0");
  LambdaWeights out{gamma_low * stats.energy_w, gamma_low * stats.energy_x};
  if (objective == ObjectiveKind::kActivationOnly) out.lambda_w = 0.0;
  if (objective == ObjectiveKind::kWeightOnly) out.lambda_x = 0.0;
  return out;
}

/// M = λ_X Σ_X + λ_W Σ_W.
inline Matrix mixed_covariance(const CalibStats& stats, const LambdaWeights& lambdas) {
  if (stats.sigma_x.rows() != stats.group.dim || stats.sigma_w.rows() != stats.group.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "mixed_covariance: stats dims inconsistent with group");
  }
  Matrix m = scale(stats.sigma_x, lambdas.lambda_x);
  axpy_inplace(m, lambdas.lambda_w, stats.sigma_w);
  return m;
}

struct SubspacePartition {
  Matrix p_h;  // d x r, top-r eigenvectors of M
  Matrix p_l;  // d x (d - r)
  Matrix r_h;  // r x r
  Matrix r_l;  // (d - r) x (d - r)
  Matrix u;    // [p_l r_l, p_h r_h]
  double lambda_x = 0.0;
  double lambda_w = 0.0;
  std::vector<double> eigenvalues;  // of M, non-increasing
  ObjectiveKind objective = ObjectiveKind::kJoint;
  RotationKind rotation = RotationKind::kRandom;
  std::uint64_t seed = 0;

  std::size_t dim() const { return u.rows(); }
  std::size_t rank() const { return p_h.cols(); }

  bool operator==(const SubspacePartition&) const = default;
};

inline std::size_t default_rank(std::size_t d, double rank_ratio = 0.125) {
  if (!(rank_ratio > 0.0 && rank_ratio < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rank_ratio must lie in (0, 1)");
  }
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(d) * rank_ratio)));
}

/// Rotation inside a subspace of dimension n. Hadamard is used only when
/// requested and n is a power of two.
inline Matrix subspace_rotation(std::size_t n, RotationKind kind, std::uint64_t seed) {
  if (kind == RotationKind::kHadamard && is_power_of_two(n)) return hadamard(n);
  return random_orthogonal(n, seed);
}

/// Seeds of the internal rotations. The high subspace uses stream 0, the low
/// subspace stream 1.
inline std::uint64_t rotation_seed_high(std::uint64_t seed) { return mix_seed(seed, 0); }
inline std::uint64_t rotation_seed_low(std::uint64_t seed) { return mix_seed(seed, 1); }

/// Builds the partition from an explicit structural basis (d x d, high
/// directions in the first r columns).
inline SubspacePartition partition_from_basis(const Matrix& basis, std::size_t rank, RotationKind rotation,
                                              std::uint64_t seed) {
  const std::size_t d = basis.rows();
  if (!basis.is_square() || rank < 1 || rank >= d) {
    throw Error(ErrorCode::kInvalidArgument, "rank " + std::to_string(rank) + " out of range [1, " +
                                                 std::to_string(d == 0 ? 0 : d - 1) + "]");
  }
  SubspacePartition p;
  p.p_h = basis.cols_range(0, rank);
  p.p_l = basis.cols_range(rank, d - rank);
  p.r_h = subspace_rotation(rank, rotation, rotation_seed_high(seed));
  p.r_l = subspace_rotation(d - rank, rotation, rotation_seed_low(seed));
  p.u = hconcat(matmul(p.p_l, p.r_l), matmul(p.p_h, p.r_h));
  p.rotation = rotation;
  p.seed = seed;
  return p;
}

/// Weighted PCA: the high-precision basis is the top-r eigenvectors of
/// M = λ_X Σ_X + λ_W Σ_W, which maximizes Tr(P_hᵀ M P_h) over orthonormal P_h.
inline SubspacePartition solve_partition(const CalibStats& stats, std::size_t rank, ObjectiveKind objective,
                                         double gamma_low, std::uint64_t seed,
                                         RotationKind rotation = RotationKind::kRandom) {
  const std::size_t d = stats.group.dim;
  if (rank < 1 || rank >= d) {
    throw Error(ErrorCode::kInvalidArgument, "group '" + stats.group.name + "': rank " + std::to_string(rank) +
                                                 " out of range [1, " + std::to_string(d == 0 ? 0 : d - 1) + "]");
  }
  const LambdaWeights lambdas = lambda_weights(stats, gamma_low, objective);
  const Matrix m = mixed_covariance(stats, lambdas);
  if (max_abs(m) == 0.0) {
    throw Error(ErrorCode::kNoSignal, "group '" + stats.group.name + "': mixed covariance is zero");
  }
  EigenResult eig = sym_eig(m);
  SubspacePartition p = partition_from_basis(eig.vectors, rank, rotation, seed);
  p.lambda_x = lambdas.lambda_x;
  p.lambda_w = lambdas.lambda_w;
  p.eigenvalues = std::move(eig.values);
  p.objective = objective;
  return p;
}

/// solve_partition with γ_l derived from the low-precision bit width.
inline SubspacePartition solve_partition_for_bits(const CalibStats& stats, std::size_t rank,
                                                  ObjectiveKind objective, int bits_low, std::uint64_t seed,
                                                  RotationKind rotation = RotationKind::kRandom) {
  const std::size_t d = stats.group.dim;
  const double gamma_low = combined_error_coeff(bits_low, rank < d ? d - rank : 1);
  return solve_partition(stats, rank, objective, gamma_low, seed, rotation);
}

/// Tr(P_hᵀ M P_h) with M built from the partition's own λ weights.
inline double surrogate_objective(const SubspacePartition& partition, const CalibStats& stats) {
  if (partition.p_h.rows() != stats.group.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "surrogate_objective: partition and stats dims differ");
  }
  const Matrix m = mixed_covariance(stats, {partition.lambda_x, partition.lambda_w});
  return trace_quadratic(partition.p_h, m);
}

/// The joint objective before the O(r²) cross-penalty is dropped:
///   γ_l‖W‖²‖X_h‖² + γ_l‖X‖²‖W_h‖² − (γ_l + γ_h)‖X_h‖²‖W_h‖²
/// with ‖X_h‖² = Tr(P_hᵀΣ_X P_h), ‖W_h‖² = Tr(P_hᵀΣ_W P_h). Larger is better.
inline double full_objective(const Matrix& p_h, const CalibStats& stats, double gamma_low, double gamma_high) {
  if (p_h.rows() != stats.group.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "full_objective: basis and stats dims differ");
  }
  if (p_h.cols() == 0) return 0.0;
  const double xh = trace_quadratic(p_h, stats.sigma_x);
  const double wh = trace_quadratic(p_h, stats.sigma_w);
  return gamma_low * stats.energy_w * xh + gamma_low * stats.energy_x * wh - (gamma_low + gamma_high) * xh * wh;
}

inline double full_objective(const SubspacePartition& partition, const CalibStats& stats, double gamma_low,
                             double gamma_high) {
  return full_objective(partition.p_h, stats, gamma_low, gamma_high);
}

}  // namespace subq
