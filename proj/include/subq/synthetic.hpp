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
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "subq/matrix.hpp"
#include "subq/orthogonal.hpp"
#include "subq/random.hpp"

namespace subq {

/// Synthetic (X, W) layer with controlled covariance structure.
///
/// Rows of X have covariance Q·diag(activation_spectrum)·Qᵀ for a seeded
/// random orthogonal Q. Columns of W have covariance B·diag(weight_spectrum)·Bᵀ
/// where B = Q·G and G rotates each pair (e_i, e_{d-1-i}) by
/// `misalignment` radians. At π/2 the leading weight directions land on the
/// trailing activation directions.
struct SyntheticInstanceSpec {
  std::size_t d = 32;
  std::size_t n = 256;
  std::size_t m = 32;
  std::vector<double> activation_spectrum;
  std::vector<double> weight_spectrum;
  double misalignment = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (d == 0 || n == 0 || m == 0) throw Error(ErrorCode::kInvalidArgument, "synthetic: dims must be >= 1");
    if (activation_spectrum.size() != d || weight_spectrum.size() != d) {
      throw Error(ErrorCode::kInvalidArgument, "synthetic: spectra must have d entries");
    }
    for (double v : activation_spectrum)
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "synthetic: bad variance");
    for (double v : weight_spectrum)
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "synthetic: bad variance");
  }
};

struct SyntheticInstance {
  Matrix x;  // n x d
  Matrix w;  // d x m
};

inline SyntheticInstance generate_instance(const SyntheticInstanceSpec& spec) {
  spec.validate();
  const std::size_t d = spec.d;
  const Matrix q = random_orthogonal(d, mix_seed(spec.seed, 10));

  Matrix g = Matrix::identity(d);
  const double c = std::cos(spec.misalignment);
  const double s = std::sin(spec.misalignment);
  for (std::size_t i = 0; i < d / 2; ++i) {
    const std::size_t j = d - 1 - i;
    g(i, i) = c;
    g(j, i) = s;
    g(i, j) = -s;
    g(j, j) = c;
  }
  const Matrix b = matmul(q, g);

  Rng rng_x(mix_seed(spec.seed, 11));
  Matrix zx = gaussian_matrix(spec.n, d, rng_x);
  for (std::size_t i = 0; i < spec.n; ++i)
    for (std::size_t k = 0; k < d; ++k) zx(i, k) *= std::sqrt(spec.activation_spectrum[k]);

  Rng rng_w(mix_seed(spec.seed, 12));
  Matrix zw = gaussian_matrix(d, spec.m, rng_w);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t j = 0; j < spec.m; ++j) zw(k, j) *= std::sqrt(spec.weight_spectrum[k]);

  return SyntheticInstance{matmul(zx, transpose(q)), matmul(b, zw)};
}

/// Peaked activation spectrum (top d/8 directions at variance 100), flat
/// weights, no misalignment: both objectives should agree.
inline SyntheticInstanceSpec aligned_preset(std::size_t d, std::size_t n, std::size_t m, std::uint64_t seed) {
  SyntheticInstanceSpec spec{d, n, m, std::vector<double>(d, 1.0), std::vector<double>(d, 1.0), 0.0, seed};
  for (std::size_t i = 0; i < std::max<std::size_t>(1, d / 8); ++i) spec.activation_spectrum[i] = 100.0;
  return spec;
}

/// Mildly decaying activation spectrum (0.9^i) and d/8 weight directions at
/// variance 16 placed on the weakest activation directions.
inline SyntheticInstanceSpec weight_dominant_preset(std::size_t d, std::size_t n, std::size_t m,
                                                    std::uint64_t seed) {
  SyntheticInstanceSpec spec{d, n, m, std::vector<double>(d), std::vector<double>(d, 1.0),
                             std::numbers::pi / 2.0, seed};
  for (std::size_t i = 0; i < d; ++i) spec.activation_spectrum[i] = std::pow(0.9, static_cast<double>(i));
  for (std::size_t i = 0; i < std::max<std::size_t>(1, d / 8); ++i) spec.weight_spectrum[i] = 16.0;
  return spec;
}

inline SyntheticInstanceSpec synthetic_preset(std::string_view name, std::size_t d, std::size_t n, std::size_t m,
                                              std::uint64_t seed) {
  if (name == "aligned") return aligned_preset(d, n, m, seed);
  if (name == "weight-dominant") return weight_dominant_preset(d, n, m, seed);
  throw Error(ErrorCode::kInvalidArgument, "unknown synthetic preset '" + std::string(name) + "'");
}

}  // namespace subq
