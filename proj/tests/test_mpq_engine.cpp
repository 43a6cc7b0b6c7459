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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "subq/mpq_engine.hpp"
#include "subq/random.hpp"
#include "subq/synthetic.hpp"

namespace subq {
namespace {

// Straight-line reference for one plan: explicit loops for every product,
// per-row / per-column quantizers written out, no library kernels.
namespace oracle {

using Mat = std::vector<std::vector<double>>;

Mat from(const Matrix& m) {
  Mat out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

Mat mul(const Mat& a, const Mat& b) {
  Mat out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < b.size(); ++k) s += a[i][k] * b[k][j];
      out[i][j] = s;
    }
  return out;
}

double rnd(double v) {
  const double a = std::fabs(v), f = std::floor(a);
  const double r = a - f >= 0.5 ? f + 1 : f;
  return v < 0 ? -r : r;
}

// Asymmetric per-row quantization.
Mat quant_rows_asym(Mat x, int bits) {
  const double qmax = std::pow(2.0, bits) - 1;
  for (auto& row : x) {
    double lo = row[0], hi = row[0];
    for (double v : row) lo = std::min(lo, v), hi = std::max(hi, v);
    double s = 1.0;
    if (hi != lo) {
      s = (hi - lo) / qmax;
      while (qmax * s + lo < hi) s = std::nextafter(s, 1e300);
      while (qmax * std::nextafter(s, 0.0) + lo >= hi) s = std::nextafter(s, 0.0);
    }
    for (double& v : row) v = std::min(std::max(rnd((v - lo) / s), 0.0), qmax) * s + lo;
  }
  return x;
}

// Symmetric per-column quantization.
Mat quant_cols_sym(Mat w, int bits) {
  const double qmax = std::pow(2.0, bits - 1) - 1;
  for (std::size_t j = 0; j < w[0].size(); ++j) {
    double amax = 0.0;
    for (auto& row : w) amax = std::max(amax, std::fabs(row[j]));
    double s = 1.0;
    if (amax != 0.0) {
      s = amax / qmax;
      while (qmax * s < amax) s = std::nextafter(s, 1e300);
      while (qmax * std::nextafter(s, 0.0) >= amax) s = std::nextafter(s, 0.0);
    }
    for (auto& row : w) row[j] = std::min(std::max(rnd(row[j] / s), -qmax), qmax) * s;
  }
  return w;
}

double error(const Matrix& x, const Matrix& w, const Matrix& u, std::size_t r, int bl, int bh) {
  const std::size_t d = u.rows(), dl = d - r;
  Mat ul(d, std::vector<double>(dl)), uh(d, std::vector<double>(r));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < dl; ++k) ul[i][k] = u(i, k);
    for (std::size_t k = 0; k < r; ++k) uh[i][k] = u(i, dl + k);
  }
  Mat ult(dl, std::vector<double>(d)), uht(r, std::vector<double>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < dl; ++k) ult[k][i] = ul[i][k];
    for (std::size_t k = 0; k < r; ++k) uht[k][i] = uh[i][k];
  }
  const Mat X = from(x), W = from(w);
  const Mat yl = mul(quant_rows_asym(mul(X, ul), bl), quant_cols_sym(mul(ult, W), bl));
  const Mat yh = mul(quant_rows_asym(mul(X, uh), bh), quant_cols_sym(mul(uht, W), bh));
  const Mat y = mul(X, W);
  double e = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y[0].size(); ++j) {
      const double diff = yl[i][j] + yh[i][j] - y[i][j];
      e += diff * diff;
    }
  return e;
}

}  // namespace oracle

MixedPrecisionPlan joint_plan(const Matrix& x, const Matrix& w, std::size_t r, int bl, int bh, std::uint64_t seed) {
  const CalibStats s = layer_stats(x, w);
  return make_plan(s.group, solve_partition_for_bits(s, r, ObjectiveKind::kJoint, bl, seed), bl, bh);
}

TEST(Decompose, CoordinatePartition) {
  SubspacePartition p = partition_from_basis(Matrix::identity(2), 1, RotationKind::kRandom, 0);
  // Force u = I: high column is the last one.
  p.u = Matrix{{1, 0}, {0, 1}};
  const Matrix x{{1, 2}, {3, 4}};
  const Decomposition dcmp = decompose(x, Matrix::identity(2), p);
  EXPECT_EQ(dcmp.x_l, (Matrix{{1}, {3}}));
  EXPECT_EQ(dcmp.x_h, (Matrix{{2}, {4}}));
  EXPECT_EQ(dcmp.w_l, (Matrix{{1, 0}}));
  EXPECT_EQ(dcmp.w_h, (Matrix{{0, 1}}));
}

TEST(Decompose, RecomposesAndZeros) {
  Rng rng(2);
  const Matrix x = gaussian_matrix(20, 8, rng);
  const Matrix w = gaussian_matrix(8, 5, rng);
  const MixedPrecisionPlan plan = joint_plan(x, w, 2, 4, 8, 1);
  const Decomposition dcmp = decompose(x, w, plan.partition);
  const Matrix y = matmul(x, w);
  EXPECT_LE(frobenius(subtract(add(matmul(dcmp.x_l, dcmp.w_l), matmul(dcmp.x_h, dcmp.w_h)), y)),
            1e-6 * frobenius(y));
  const Decomposition zero = decompose(Matrix(3, 8), w, plan.partition);
  EXPECT_EQ(frobenius_sq(zero.x_l) + frobenius_sq(zero.x_h), 0.0);
  EXPECT_THROW(decompose(Matrix(3, 7), w, plan.partition), Error);
}

TEST(Execute, BypassIsExact) {
  Rng rng(3);
  const Matrix x = gaussian_matrix(32, 8, rng);
  const Matrix w = gaussian_matrix(8, 8, rng);
  const MixedPrecisionPlan plan = bypass_plan(joint_plan(x, w, 2, 4, 8, 0));
  const ExecutionResult res = execute_plan(x, w, plan);
  const Matrix y = matmul(x, w);
  EXPECT_LE(frobenius(subtract(res.y_hat, y)), 1e-6 * frobenius(y));
  EXPECT_LE(res.report.exact_error, 1e-12 * frobenius_sq(y));
  EXPECT_EQ(res.report.predicted_error, 0.0);
  EXPECT_EQ(res.report.bits_low, 0);
}

TEST(Execute, GridAlignedIsLossless) {
  // With u = I, integer X and W whose slices hit their quantizer grids exactly.
  SubspacePartition p = partition_from_basis(Matrix::identity(4), 2, RotationKind::kRandom, 0);
  p.u = Matrix::identity(4);
  ProjectionGroup g;
  g.name = "grid";
  g.dim = 4;
  QuantScheme sch;
  sch.activation = {true, Granularity::kPerTensor, 0};
  const MixedPrecisionPlan plan = make_plan(g, p, 4, 8, sch);
  const Matrix x{{7, -7, 127, 0}, {1, 2, -127, 5}};
  const Matrix w{{7, 7}, {-7, 0}, {127, -127}, {5, 127}};
  const ExecutionResult res = execute_plan(x, w, plan);
  EXPECT_EQ(res.report.exact_error, 0.0);
}

TEST(Execute, MatchesStraightLineOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(mix_seed(seed, 5));
    const Matrix x = gaussian_matrix(64, 16, rng);
    const Matrix w = gaussian_matrix(16, 16, rng);
    const MixedPrecisionPlan plan = joint_plan(x, w, 2, 4, 8, seed);
    const ErrorReport rep = execute_plan(x, w, plan).report;
    const double ref = oracle::error(x, w, plan.partition.u, 2, 4, 8);
    EXPECT_NEAR(rep.exact_error, ref, 1e-9 * ref);
    EXPECT_NEAR(rep.exact_error_fro, std::sqrt(ref), 1e-9 * std::sqrt(ref));
  }
}

TEST(Execute, ReportEnergiesAndPrediction) {
  Rng rng(4);
  const Matrix x = gaussian_matrix(40, 16, rng);
  const Matrix w = gaussian_matrix(16, 12, rng);
  const MixedPrecisionPlan plan = joint_plan(x, w, 2, 4, 8, 0);
  const ErrorReport rep = execute_plan(x, w, plan).report;
  EXPECT_NEAR(rep.energies.x_low + rep.energies.x_high, frobenius_sq(x), 1e-9 * frobenius_sq(x));
  EXPECT_NEAR(rep.energies.w_low + rep.energies.w_high, frobenius_sq(w), 1e-9 * frobenius_sq(w));
  EXPECT_DOUBLE_EQ(rep.predicted_error, predict_error(rep.energies, 4, 8, 14, 2));
  EXPECT_EQ(rep.rank, 2u);
  EXPECT_EQ(rep.bits_low, 4);
  EXPECT_EQ(rep.bits_high, 8);
}

TEST(Predict, Examples) {
  EXPECT_EQ(predict_error({0, 0, 0, 0}, 4, 8, 7, 1), 0.0);
  EXPECT_EQ(predict_error({1, 0, 1, 0}, 4, 8, 7, 1), 2.0 / 343.0);
  EXPECT_THROW(predict_error({-1, 0, 0, 0}, 4, 8, 7, 1), Error);
}

TEST(Execute, MoreBitsLowerErrorOnAverage) {
  double e48 = 0.0, e88 = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(mix_seed(seed, 8));
    const Matrix x = gaussian_matrix(64, 16, rng);
    const Matrix w = gaussian_matrix(16, 16, rng);
    const MixedPrecisionPlan plan = joint_plan(x, w, 2, 4, 8, seed);
    MixedPrecisionPlan hi = plan;
    hi.act_low.bits = hi.weight_low.bits = 8;
    e48 += execute_plan(x, w, plan).report.exact_error;
    e88 += execute_plan(x, w, hi).report.exact_error;
  }
  EXPECT_LE(e88, e48);
}

TEST(Execute, HighBypassAtMaxRankLeavesOnlyLowNoise) {
  Rng rng(9);
  const Matrix x = gaussian_matrix(50, 8, rng);
  const Matrix w = gaussian_matrix(8, 6, rng);
  const CalibStats st = layer_stats(x, w);
  QuantScheme per_tensor;
  per_tensor.activation = {false, Granularity::kPerTensor, 0};
  per_tensor.weight = {true, Granularity::kPerTensor, 0};
  MixedPrecisionPlan plan =
      make_plan(st.group, solve_partition_for_bits(st, 7, ObjectiveKind::kJoint, 4, 0), 4, 8, per_tensor);
  plan.act_high = plan.weight_high = QuantSpec::passthrough();
  const ErrorReport rep = execute_plan(x, w, plan).report;
  const Decomposition dcmp = decompose(x, w, plan.partition);
  const Matrix low = subtract(matmul(quantize(dcmp.x_l, plan.act_low).dequantized,
                                     quantize(dcmp.w_l, plan.weight_low).dequantized),
                              matmul(dcmp.x_l, dcmp.w_l));
  ASSERT_GT(frobenius_sq(low), 0.0);
  EXPECT_NEAR(rep.exact_error, frobenius_sq(low), 1e-9 * frobenius_sq(low));
}

TEST(Plan, ValidationAndDefaults) {
  Rng rng(1);
  const Matrix x = gaussian_matrix(10, 8, rng);
  const Matrix w = gaussian_matrix(8, 3, rng);
  const MixedPrecisionPlan plan = joint_plan(x, w, 1, 4, 8, 0);
  EXPECT_FALSE(plan.act_low.symmetric);
  EXPECT_EQ(plan.act_low.granularity, Granularity::kPerToken);
  EXPECT_TRUE(plan.weight_low.symmetric);
  EXPECT_EQ(plan.weight_low.granularity, Granularity::kPerChannel);
  EXPECT_THROW(make_plan(plan.group, plan.partition, 8, 4), Error);
}

TEST(Analyze, AlignedInstanceGivesNoReduction) {
  // The limit needs a near-isotropic sampled Σ_W, hence many weight columns.
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const SyntheticInstance inst = generate_instance(aligned_preset(32, 256, 2048, seed));
    const auto reps = analyze_layer(inst.x, inst.w, 4, 4, 8, seed);
    ASSERT_EQ(reps.size(), 3u);
    EXPECT_EQ(reps[1].relative_reduction, 0.0);
    EXPECT_NEAR(reps[0].relative_reduction, 0.0, 0.05);
    const CalibStats st = layer_stats(inst.x, inst.w);
    const Matrix pj = solve_partition_for_bits(st, 4, ObjectiveKind::kJoint, 4, seed).p_h;
    const Matrix pa = solve_partition_for_bits(st, 4, ObjectiveKind::kActivationOnly, 4, seed).p_h;
    EXPECT_LE(max_abs_diff(matmul(pj, transpose(pj)), matmul(pa, transpose(pa))), 0.02);
  }
}

TEST(Analyze, WeightDominantInstanceFavorsJoint) {
  const SyntheticInstance inst = generate_instance(weight_dominant_preset(32, 256, 32, 4));
  const auto reps = analyze_layer(inst.x, inst.w, 4, 4, 8, 4);
  EXPECT_EQ(reps[0].objective, ObjectiveKind::kJoint);
  EXPECT_EQ(reps[1].objective, ObjectiveKind::kActivationOnly);
  EXPECT_EQ(reps[2].objective, ObjectiveKind::kWeightOnly);
  EXPECT_LT(reps[0].exact_error, reps[1].exact_error);
  EXPECT_GT(reps[0].relative_reduction, 0.0);
}

TEST(Synthetic, CovarianceFollowsSpectrum) {
  SyntheticInstanceSpec spec = aligned_preset(8, 20000, 4, 3);
  const SyntheticInstance inst = generate_instance(spec);
  const Matrix q = random_orthogonal(8, mix_seed(3, 10));
  const Matrix cov = scale(matmul(matmul(transpose(q), gram_input(inst.x)), q), 1.0 / 20000);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_NEAR(cov(i, i), spec.activation_spectrum[i], 0.05 * spec.activation_spectrum[i]);
  }
  EXPECT_EQ(generate_instance(spec).x, inst.x);
  spec.weight_spectrum[0] = -1;
  EXPECT_THROW(generate_instance(spec), Error);
}

CalibStats head_stats(GroupKind kind, std::size_t h, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix a = gaussian_matrix(24, 8, rng);
  const Matrix b = gaussian_matrix(kind == GroupKind::kKvKey ? 30 : 8, 8, rng);
  return kind == GroupKind::kKvKey ? kv_key_stats(a, b, h) : kv_value_stats(a, b, h);
}

TEST(KvPlans, PerHeadMatchesDirectSolve) {
  std::vector<CalibStats> stats;
  for (std::size_t h = 0; h < 3; ++h) {
    stats.push_back(head_stats(GroupKind::kKvKey, h, 10 + h));
    stats.push_back(head_stats(GroupKind::kKvValue, h, 20 + h));
  }
  KvPlanConfig cfg;
  cfg.seed = 5;
  const auto plans = build_kv_plans(stats, cfg);
  ASSERT_EQ(plans.size(), 6u);
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const SubspacePartition direct = solve_partition_for_bits(stats[i], 1, ObjectiveKind::kJoint, 4, 5);
    EXPECT_EQ(plans[i].partition, direct);
    EXPECT_EQ(plans[i].act_low.granularity, Granularity::kPerHead);
    EXPECT_FALSE(plans[i].act_low.symmetric);
    EXPECT_EQ(plans[i].act_low.head_dim, 7u);
    EXPECT_EQ(plans[i].act_high.head_dim, 1u);
  }
}

TEST(KvPlans, IdenticalHeadsGiveIdenticalPartitions) {
  CalibStats a = head_stats(GroupKind::kKvValue, 0, 1);
  CalibStats b = a;
  b.group.head_index = 1;
  b.group.name = "kv-value/1";
  const auto plans = build_kv_plans(std::vector<CalibStats>{a, b}, {});
  EXPECT_EQ(plans[0].partition, plans[1].partition);
}

TEST(KvPlans, IdentityWoReducesToValuePca) {
  Rng rng(6);
  const Matrix v = gaussian_matrix(40, 8, rng);
  const CalibStats s = kv_value_stats(v, Matrix::identity(8));
  const auto plans = build_kv_plans(std::vector<CalibStats>{s}, {});
  const SubspacePartition act = solve_partition_for_bits(s, 1, ObjectiveKind::kActivationOnly, 4, 0);
  const Matrix& p = plans[0].partition.p_h;
  EXPECT_LE(max_abs_diff(matmul(p, transpose(p)), matmul(act.p_h, transpose(act.p_h))), 1e-8);
}

TEST(KvPlans, MissingHeadsRejected) {
  const CalibStats k0 = head_stats(GroupKind::kKvKey, 0, 1);
  const CalibStats v1 = head_stats(GroupKind::kKvValue, 1, 2);
  EXPECT_THROW(build_kv_plans(std::vector<CalibStats>{k0, v1}, {}), Error);
  EXPECT_THROW(build_kv_plans(std::vector<CalibStats>{head_stats(GroupKind::kKvKey, 1, 1)}, {}), Error);
  EXPECT_THROW(build_kv_plans(std::vector<CalibStats>{k0, k0}, {}), Error);
  EXPECT_THROW(build_kv_plans(std::vector<CalibStats>{}, {}), Error);
}

}  // namespace
}  // namespace subq
