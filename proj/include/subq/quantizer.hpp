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
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "subq/matrix.hpp"

namespace subq {

enum class Granularity {
  kPerTensor,
  kPerToken,    // one group per row
  kPerChannel,  // one group per column
  kPerHead,     // one group per (row, block of head_dim columns)
};

constexpr std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::kPerTensor: return "per-tensor";
    case Granularity::kPerToken: return "per-token";
    case Granularity::kPerChannel: return "per-channel";
    case Granularity::kPerHead: return "per-head";
  }
  return "unknown";
}

inline Granularity parse_granularity(std::string_view s) {
  if (s == "per-tensor") return Granularity::kPerTensor;
  if (s == "per-token") return Granularity::kPerToken;
  if (s == "per-channel") return Granularity::kPerChannel;
  if (s == "per-head") return Granularity::kPerHead;
  throw Error(ErrorCode::kInvalidArgument, "unknown granularity '" + std::string(s) + "'");
}

struct QuantSpec {
  int bits = 4;
  bool symmetric = true;
  Granularity granularity = Granularity::kPerTensor;
  std::size_t head_dim = 0;  // per-head only
  bool bypass = false;       // pass values through untouched

  static QuantSpec passthrough() {
    QuantSpec s;
    s.bypass = true;
    return s;
  }

  void validate() const {
    if (bypass) return;
    if (bits < 2 || bits > 16) {
      throw Error(ErrorCode::kInvalidArgument, "quant bits must be in [2, 16], got " + std::to_string(bits));
    }
    if (granularity == Granularity::kPerHead && head_dim == 0) {
      throw Error(ErrorCode::kInvalidArgument, "per-head quantization needs head_dim >= 1");
    }
  }

  bool operator==(const QuantSpec&) const = default;
};

struct QuantResult {
  Matrix dequantized;
  std::vector<double> scales;       // one per group, in group order
  std::vector<double> zero_points;  // one per group; zero when symmetric
};

/// Half-way cases round away from zero (std::round semantics).
inline double round_half_away(double v) { return std::round(v); }

/// Largest integer level: 2^(N-1) - 1 symmetric, 2^N - 1 asymmetric.
inline double quant_max_level(int bits, bool symmetric) {
  return symmetric ? std::ldexp(1.0, bits - 1) - 1.0 : std::ldexp(1.0, bits) - 1.0;
}

/// Scale and zero point for one group with range [lo, hi].
///
/// The scale is the smallest double s whose top grid level reaches the group
/// maximum: fl(qmax·s) ≥ max|x| (symmetric) or fl(fl(qmax·s) + lo) ≥ hi
/// (asymmetric). It starts from the textbook value and moves at most a few
/// ulps. Because the top level is monotone in s, re-quantizing a dequantized
/// group recovers the same scale, so quantize is exactly idempotent.
inline void group_scale(double lo, double hi, int bits, bool symmetric, double& scale, double& zero) {
  const double qmax = quant_max_level(bits, symmetric);
  const double base = symmetric ? 0.0 : lo;
  const double target = symmetric ? std::max(std::abs(lo), std::abs(hi)) : hi;
  zero = base;
  if (target == base) {  // all-zero (symmetric) or constant (asymmetric) group
    scale = 1.0;
    return;
  }
  const auto top = [&](double s) { return qmax * s + base; };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  scale = (target - base) / qmax;
  while (top(scale) < target) scale = std::nextafter(scale, kInf);
  for (double below = std::nextafter(scale, 0.0); below > 0.0 && top(below) >= target;
       below = std::nextafter(scale, 0.0)) {
    scale = below;
  }
}

/// Dequantized value of x on the grid defined by (scale, zero).
inline double fake_quant(double x, double scale, double zero, int bits, bool symmetric) {
  const double qmax = quant_max_level(bits, symmetric);
  const double qmin = symmetric ? -qmax : 0.0;
  const double q = std::clamp(round_half_away((x - zero) / scale), qmin, qmax);
  return q * scale + zero;
}

namespace detail {

/// Group id of element (i, j) and the group count.
struct GroupLayout {
  Granularity granularity;
  std::size_t rows;
  std::size_t cols;
  std::size_t head_dim;

  std::size_t count() const {
    switch (granularity) {
      case Granularity::kPerTensor: return 1;
      case Granularity::kPerToken: return rows;
      case Granularity::kPerChannel: return cols;
      case Granularity::kPerHead: return rows * (cols / head_dim);
    }
    return 0;
  }

  std::size_t group_of(std::size_t i, std::size_t j) const {
    switch (granularity) {
      case Granularity::kPerTensor: return 0;
      case Granularity::kPerToken: return i;
      case Granularity::kPerChannel: return j;
      case Granularity::kPerHead: return i * (cols / head_dim) + j / head_dim;
    }
    return 0;
  }
};

}  // namespace detail

/// Simulated uniform quantization (quantize then dequantize), group-wise.
inline QuantResult quantize(const Matrix& x, const QuantSpec& spec) {
  spec.validate();
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "quantize: non-finite input");
  }
  if (spec.bypass) return QuantResult{x, {}, {}};
  if (spec.granularity == Granularity::kPerHead && x.cols() % spec.head_dim != 0) {
    throw Error(ErrorCode::kInvalidArgument, "quantize: head_dim " + std::to_string(spec.head_dim) +
                                                 " does not divide " + std::to_string(x.cols()) + " columns");
  }

  const detail::GroupLayout layout{spec.granularity, x.rows(), x.cols(), spec.head_dim};
  const std::size_t groups = layout.count();
  std::vector<double> lo(groups, std::numeric_limits<double>::infinity());
  std::vector<double> hi(groups, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const std::size_t g = layout.group_of(i, j);
      lo[g] = std::min(lo[g], x(i, j));
      hi[g] = std::max(hi[g], x(i, j));
    }
  }

  QuantResult out{Matrix(x.rows(), x.cols()), std::vector<double>(groups), std::vector<double>(groups)};
  for (std::size_t g = 0; g < groups; ++g) {
    if (lo[g] > hi[g]) {  // empty group (zero-sized input)
      lo[g] = hi[g] = 0.0;
    }
    group_scale(lo[g], hi[g], spec.bits, spec.symmetric, out.scales[g], out.zero_points[g]);
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const std::size_t g = layout.group_of(i, j);
      out.dequantized(i, j) = fake_quant(x(i, j), out.scales[g], out.zero_points[g], spec.bits, spec.symmetric);
    }
  }
  return out;
}

/// α² = β² = 1/(2^(N-1) - 1)², the relative noise energy of an N-bit quantizer.
inline double relative_error_coeff(int bits) {
  if (bits < 2) throw Error(ErrorCode::kInvalidArgument, "relative_error_coeff: bits must be >= 2");
  const double levels = std::ldexp(1.0, bits - 1) - 1.0;
  return 1.0 / (levels * levels);
}

/// γ = (α² + β²)/d_k for a subspace of dimension d_k where both sides use `bits`.
inline double combined_error_coeff(int bits, std::size_t subspace_dim) {
  if (subspace_dim == 0) throw Error(ErrorCode::kInvalidArgument, "combined_error_coeff: subspace_dim must be >= 1");
  if (bits < 2) throw Error(ErrorCode::kInvalidArgument, "combined_error_coeff: bits must be >= 2");
  const double levels = std::ldexp(1.0, bits - 1) - 1.0;
  return 2.0 / (static_cast<double>(subspace_dim) * levels * levels);
}

/// α² of a spec; zero for a bypassed quantizer.
inline double relative_error_coeff(const QuantSpec& spec) {
  return spec.bypass ? 0.0 : relative_error_coeff(spec.bits);
}

}  // namespace subq
