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

#include <bit>
#include <cmath>
#include <cstdint>

#include "subq/matrix.hpp"
#include "subq/random.hpp"

namespace subq {

constexpr bool is_power_of_two(std::size_t d) { return d != 0 && std::has_single_bit(d); }

namespace detail {

/// Removes from column j of m its projection on columns [0, j). Returns the
/// remaining norm.
inline double project_out_previous(Matrix& m, std::size_t j) {
  for (std::size_t k = 0; k < j; ++k) {
    double dot = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) dot += m(i, k) * m(i, j);
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) -= dot * m(i, k);
  }
  double norm = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) norm += m(i, j) * m(i, j);
  return std::sqrt(norm);
}

}  // namespace detail

/// Modified Gram-Schmidt with one full re-orthogonalization pass per column.
/// Throws if a column is numerically dependent on its predecessors.
inline Matrix orthonormalize_columns(Matrix m) {
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double norm_before = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) norm_before += m(i, j) * m(i, j);
    norm_before = std::sqrt(norm_before);
    detail::project_out_previous(m, j);
    const double norm = detail::project_out_previous(m, j);
    if (norm == 0.0 || norm <= 1e-10 * norm_before) {
      throw Error(ErrorCode::kInvalidArgument, "orthonormalize_columns: rank-deficient input");
    }
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) /= norm;
  }
  return m;
}

/// Approximately Haar-distributed orthogonal d x d matrix: a subq-rng-v1
/// Gaussian fill (row-major) orthonormalized column by column.
inline Matrix random_orthogonal(std::size_t d, std::uint64_t seed) {
  if (d == 0) throw Error(ErrorCode::kInvalidArgument, "random_orthogonal: d must be >= 1");
  Rng rng(seed);
  return orthonormalize_columns(gaussian_matrix(d, d, rng));
}

/// Random orthonormal d x r basis (d >= r).
inline Matrix random_orthonormal_basis(std::size_t d, std::size_t r, Rng& rng) {
  if (r > d) throw Error(ErrorCode::kInvalidArgument, "random_orthonormal_basis: r > d");
  return orthonormalize_columns(gaussian_matrix(d, r, rng));
}

/// Normalized Sylvester Hadamard matrix; entries are ±1/√d.
inline Matrix hadamard(std::size_t d) {
  if (!is_power_of_two(d)) {
    throw Error(ErrorCode::kInvalidArgument, "hadamard: " + std::to_string(d) + " is not a power of two");
  }
  const double v = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix h(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) h(i, j) = (std::popcount(i & j) % 2 == 0) ? v : -v;
  return h;
}

/// ‖QQᵀ − I‖_max.
inline double orthogonality_defect(const Matrix& q) {
  const Matrix qqt = matmul(q, transpose(q));
  return max_abs_diff(qqt, Matrix::identity(q.rows()));
}

}  // namespace subq
