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
#include <numeric>
#include <vector>

#include "subq/matrix.hpp"

namespace subq {

struct EigenResult {
  std::vector<double> values;  // non-increasing
  Matrix vectors;              // column i pairs with values[i]
};

struct JacobiOptions {
  double symmetry_tolerance = 1e-9;   // relative to ‖M‖_max
  double offdiag_tolerance = 1e-12;   // relative to ‖M‖_F
  int max_sweeps = 100;
};

namespace detail {

inline double offdiag_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

/// Applies the rotation that zeroes a(p, q) to a (both sides) and to the
/// accumulated eigenvector matrix v (right side).
inline void jacobi_rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  double t;
  if (std::abs(theta) > 1e150) {
    t = 0.5 / theta;
  } else {
    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  }
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();

  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;

  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

/// Largest-magnitude entry made positive; on equal magnitude the lower index wins.
inline void canonicalize_sign(Matrix& v, std::size_t col) {
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < v.rows(); ++i) {
    const double a = std::abs(v(i, col));
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (v.rows() > 0 && v(best, col) < 0.0) {
    for (std::size_t i = 0; i < v.rows(); ++i) v(i, col) = -v(i, col);
  }
}

}  // namespace detail

/// Symmetric eigendecomposition by cyclic Jacobi on (M + Mᵀ)/2.
///
/// Eigenvalues come back sorted non-increasing with ties kept in the order of
/// their diagonal position, and each eigenvector is sign-normalized so its
/// largest-magnitude entry is positive. The result depends only on the input
/// bytes.
inline EigenResult sym_eig(const Matrix& m, const JacobiOptions& opts = {}) {
  if (!m.is_square()) throw Error(ErrorCode::kNonSquare, "sym_eig: matrix is not square");
  const std::size_t n = m.rows();
  const double mmax = max_abs(m);
  if (asymmetry(m) > opts.symmetry_tolerance * mmax) {
    throw Error(ErrorCode::kNotSymmetric, "sym_eig: asymmetry exceeds tolerance");
  }

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
  Matrix v = Matrix::identity(n);

  const double target = opts.offdiag_tolerance * frobenius(a);
  int sweep = 0;
  while (detail::offdiag_norm(a) > target) {
    if (sweep == opts.max_sweeps) {
      throw Error(ErrorCode::kNoConvergence,
                  "sym_eig: off-diagonal norm above tolerance after " + std::to_string(opts.max_sweeps) + " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) detail::jacobi_rotate(a, v, p, q);
    ++sweep;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenResult out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, c) = v(i, order[c]);
    detail::canonicalize_sign(out.vectors, c);
  }
  return out;
}

}  // namespace subq
