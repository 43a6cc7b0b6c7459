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
// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "subq/subq.hpp"
#include "quant_oracle.hpp"

namespace {

using namespace subq;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

// Random PSD stats: Σ_X = AᵀA, Σ_W = BBᵀ with positive energies.
CalibStats random_stats(std::size_t d, Rng& rng) {
  ProjectionGroup g;
  g.name = "acc";
  g.dim = d;
  CalibStats s = make_stats(g);
  const Matrix a = gaussian_matrix(d + 3, d, rng);
  const Matrix b = gaussian_matrix(d, d + 5, rng);
  s.sigma_x = gram_input(a);
  s.sigma_w = gram_weight(b);
  s.energy_x = frobenius_sq(a);
  s.energy_w = frobenius_sq(b);
  s.tokens_seen = d + 3;
  return s;
}

// sin of the largest principal angle between the column spaces of a and b.
double max_principal_sine(const Matrix& a, const Matrix& b) {
  const Eigen::MatrixXd ea = to_eigen(a), eb = to_eigen(b);
  const Eigen::MatrixXd residual = eb - ea * (ea.transpose() * eb);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues()(0);
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome closed_form_optimality() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = -1e300;  // max over candidates of (candidate - solved) / ‖M‖_F
  for (int inst = 0; inst < 50; ++inst) {
    const CalibStats s = random_stats(8, rng);
    const double gamma = combined_error_coeff(4, 6);
    const SubspacePartition p = solve_partition(s, 2, ObjectiveKind::kJoint, gamma, inst);
    const Matrix m = mixed_covariance(s, lambda_weights(s, gamma, ObjectiveKind::kJoint));
    const double best = trace_quadratic(p.p_h, m);
    const double norm = frobenius(m);
    for (int k = 0; k < 10000; ++k) {
      const double cand = trace_quadratic(random_orthonormal_basis(8, 2, rng), m);
      worst = std::max(worst, (cand - best) / norm);
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return {worst <= 1e-8 && secs < 60.0,
          fmt("max (candidate - solved)/||M||_F = %.3e over 500000 candidates, %.1f s", worst, secs)};
}

Outcome orthogonality_reconstruction() {
  Rng rng(202);
  double defect = 0.0, recon = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform(0.0, 63.0));
    const std::size_t r = 1 + static_cast<std::size_t>(rng.uniform(0.0, static_cast<double>(d - 1)));
    const CalibStats s = random_stats(d, rng);
    const RotationKind rot = inst % 2 ? RotationKind::kHadamard : RotationKind::kRandom;
    const SubspacePartition p = solve_partition_for_bits(s, r, ObjectiveKind::kJoint, 4, inst, rot);
    defect = std::max({defect, max_abs_diff(matmul(p.u, transpose(p.u)), Matrix::identity(d)),
                       max_abs_diff(matmul_tn(p.u, p.u), Matrix::identity(d))});
    const Matrix x = gaussian_matrix(40, d, rng), w = gaussian_matrix(d, 24, rng);
    const Decomposition parts = decompose(x, w, p);
    const Matrix y = matmul(x, w);
    const Matrix y2 = add(matmul(parts.x_l, parts.w_l), matmul(parts.x_h, parts.w_h));
    recon = std::max(recon, frobenius(subtract(y, y2)) / frobenius(y));
  }
  return {defect <= 1e-8 && recon <= 1e-6,
          fmt("max ||UU^T - I||_max = %.3e, max relative reconstruction = %.3e", defect, recon)};
}

Outcome quantizer_oracle() {
  Rng rng(303);
  const int bits_set[] = {2, 4, 8};
  const Granularity grans[] = {Granularity::kPerTensor, Granularity::kPerToken, Granularity::kPerChannel,
                               Granularity::kPerHead};
  int mismatched = 0, not_idempotent = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t rows = 1 + static_cast<std::size_t>(rng.uniform(0.0, 12.0));
    const std::size_t heads = 1 + static_cast<std::size_t>(rng.uniform(0.0, 4.0));
    const std::size_t head_dim = 1 + static_cast<std::size_t>(rng.uniform(0.0, 4.0));
    const std::size_t cols = heads * head_dim;
    Matrix x(rows, cols);
    const double magnitude = std::pow(10.0, rng.uniform(-3.0, 3.0));
    const double offset = (t % 5 == 0) ? rng.uniform(-5.0, 5.0) * magnitude : 0.0;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        x(i, j) = offset + magnitude * rng.normal();
        if (t % 7 == 0 && j == 0) x(i, j) = offset;   // constant column
        if (t % 11 == 0 && i == 0) x(i, j) = 0.0;     // zero row
        if (t % 13 == 0 && i == j) x(i, j) *= 100.0;  // outliers
      }
    QuantSpec s;
    s.bits = bits_set[t % 3];
    s.granularity = grans[(t / 3) % 4];
    s.symmetric = (t / 12) % 2 == 0;
    s.head_dim = head_dim;
    const Matrix q = quantize(x, s).dequantized;
    const Matrix ref = oracle::quantize(x, s);
    if (std::memcmp(q.values().data(), ref.values().data(), sizeof(double) * q.size()) != 0) ++mismatched;
    const Matrix qq = quantize(q, s).dequantized;
    if (std::memcmp(q.values().data(), qq.values().data(), sizeof(double) * q.size()) != 0) ++not_idempotent;
  }
  return {mismatched == 0 && not_idempotent == 0,
          fmt("1000 tensors: %.0f bitwise mismatches, %.0f non-idempotent", mismatched, not_idempotent)};
}

Outcome activation_only_is_pca() {
  Rng rng(404);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t d = 8 + 4 * static_cast<std::size_t>(inst % 7);
    const std::size_t r = 1 + static_cast<std::size_t>(inst % 4);
    const CalibStats s = random_stats(d, rng);
    const SubspacePartition p = solve_partition_for_bits(s, r, ObjectiveKind::kActivationOnly, 4, inst);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(s.sigma_x));
    const Eigen::MatrixXd top = es.eigenvectors().rightCols(static_cast<Eigen::Index>(r));
    const Eigen::MatrixXd ph = to_eigen(p.p_h);
    worst = std::max(worst, (ph * ph.transpose() - top * top.transpose()).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-7, fmt("max |P_h P_h^T - V_r V_r^T| = %.3e over 20 instances", worst)};
}

Outcome joint_selection_benefit() {
  const auto t0 = Clock::now();
  int wins = 0;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SyntheticInstance inst = generate_instance(weight_dominant_preset(32, 256, 32, seed));
    const auto reps = analyze_layer(inst.x, inst.w, 4, 4, 8, seed);
    if (reps[0].exact_error <= reps[1].exact_error) ++wins;
    total += reps[0].relative_reduction;
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return {wins >= 90 && total / 100.0 > 0.0 && secs < 300.0,
          fmt("joint <= activation-only in %.0f/100, mean reduction %.4f, %.1f s", wins, total / 100.0, secs)};
}

Outcome error_model_sanity() {
  const bool exact = relative_error_coeff(4) == 1.0 / 49.0 && relative_error_coeff(8) == 1.0 / 16129.0;
  QuantScheme per_tensor;
  per_tensor.activation = {true, Granularity::kPerTensor, 0};
  per_tensor.weight = {true, Granularity::kPerTensor, 0};
  const QuantScheme schemes[] = {QuantScheme{}, per_tensor};
  double means[2] = {0, 0}, lo[2] = {1e300, 1e300}, hi[2] = {0, 0};
  constexpr int kTrials = 10;
  for (int k = 0; k < 2; ++k) {
    for (int t = 0; t < kTrials; ++t) {
      Rng rng(mix_seed(606, t));
      const Matrix x = gaussian_matrix(4096, 32, rng), w = gaussian_matrix(32, 32, rng);
      const CalibStats st = layer_stats(x, w);
      const MixedPrecisionPlan plan =
          make_plan(st.group, solve_partition_for_bits(st, 4, ObjectiveKind::kJoint, 4, t), 4, 8, schemes[k]);
      const ErrorReport rep = execute_plan(x, w, plan).report;
      const double ratio = rep.exact_error / rep.predicted_error;
      means[k] += ratio / kTrials;
      lo[k] = std::min(lo[k], ratio);
      hi[k] = std::max(hi[k], ratio);
    }
  }
  bool within = true;
  for (double m : means) within = within && m >= 1.0 / 3.0 && m <= 3.0;
  return {exact && within,
          fmt("measured/predicted mean %.3f [%.3f, %.3f] default scheme, ", means[0], lo[0], hi[0]) +
              fmt("%.3f [%.3f, %.3f] per-tensor symmetric; ", means[1], lo[1], hi[1]) +
              (exact ? "1/49 and 1/16129 exact" : "coefficient mismatch")};
}

Outcome identity_shift_invariance() {
  Rng rng(707);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t d = 8 + static_cast<std::size_t>(inst % 5) * 6;
    const std::size_t r = 1 + static_cast<std::size_t>(inst % 3);
    const CalibStats s = random_stats(d, rng);
    const Matrix base = solve_partition_for_bits(s, r, ObjectiveKind::kJoint, 4, inst).p_h;
    for (double c : {0.1, 1.0, 10.0}) {
      CalibStats shifted = s;
      axpy_inplace(shifted.sigma_w, c, Matrix::identity(d));
      const Matrix p = solve_partition_for_bits(shifted, r, ObjectiveKind::kJoint, 4, inst).p_h;
      worst = std::max(worst, std::asin(std::min(1.0, max_principal_sine(base, p))));
    }
  }
  return {worst < 1e-6, fmt("max principal angle %.3e rad over 60 shifts", worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + SUBQ_CLI_PATH + "' " + args + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome end_to_end_determinism() {
  const fs::path root = fs::temp_directory_path() / ("subq_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const char* outputs[] = {"stats.cq", "plan.cq", "attn.jsonl", "mlp.csv"};
  std::vector<std::string> problems;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir / "data");
    Rng rng(808);
    write_tensor(dir / "data/x_attn.cq", "x_attn", gaussian_matrix(128, 32, rng));
    write_tensor(dir / "data/x_attn2.cq", "x_attn2", gaussian_matrix(64, 32, rng));
    write_tensor(dir / "data/w_q.cq", "w_q", gaussian_matrix(32, 32, rng));
    write_tensor(dir / "data/w_k.cq", "w_k", gaussian_matrix(32, 8, rng));
    write_tensor(dir / "data/x_mlp.cq", "x_mlp", gaussian_matrix(128, 16, rng), Dtype::kF32);
    write_tensor(dir / "data/w_up.cq", "w_up", gaussian_matrix(16, 48, rng), Dtype::kF32);
    std::ofstream(dir / "run.json") << R"({
  "seed": 42, "rank_ratio": 0.25, "rotation": "hadamard",
  "groups": [
    {"name": "attn", "kind": "attn-input", "activations": ["data/x_attn.cq", "data/x_attn2.cq"],
     "weights": ["data/w_q.cq", "data/w_k.cq"]},
    {"name": "mlp", "kind": "mlp-input", "activations": ["data/x_mlp.cq"], "weights": ["data/w_up.cq"]}
  ]
})";
    const std::string steps[] = {
        "calibrate --config run.json --out stats.cq",
        "solve --config run.json --stats stats.cq --out plan.cq --bits-low 3",
        "simulate --plan plan.cq --group attn --x data/x_attn.cq --w data/w_q.cq --out attn.jsonl",
        "simulate --plan plan.cq --group mlp --x data/x_mlp.cq --w data/w_up.cq --out mlp.csv --format csv"};
    for (const std::string& step : steps) {
      if (run_cli(dir, step) != 0) problems.push_back(std::string(run) + ": '" + step + "' failed");
    }
  }
  for (const char* f : outputs) {
    const std::string a = slurp(root / "a" / f), b = slurp(root / "b" / f);
    if (a.empty() || a != b) problems.push_back(std::string(f) + " differs between runs");
  }
  try {
    const fs::path dir = root / "a";
    const StatsFile stats = read_stats(dir / "stats.cq");
    write_stats(dir / "stats_rt.cq", stats);
    if (slurp(dir / "stats_rt.cq") != slurp(dir / "stats.cq")) problems.push_back("stats round-trip not lossless");
    const PlanFile plans = read_plans(dir / "plan.cq");
    write_plans(dir / "plan_rt.cq", plans);
    if (slurp(dir / "plan_rt.cq") != slurp(dir / "plan.cq")) problems.push_back("plan round-trip not lossless");
    if (read_plans(dir / "plan_rt.cq").plans != plans.plans) problems.push_back("plan decode differs");
    const NamedTensor t = read_tensor(dir / "data/x_mlp.cq");
    write_tensor(dir / "x_rt.cq", t.name, t.value, t.dtype);
    if (slurp(dir / "x_rt.cq") != slurp(dir / "data/x_mlp.cq")) problems.push_back("tensor round-trip not lossless");
    const auto jsonl = read_reports(dir / "attn.jsonl");
    const auto csv = read_reports(dir / "mlp.csv");
    const json cfg = json::parse(slurp(dir / "attn.jsonl").substr(0, slurp(dir / "attn.jsonl").find('\n')))["config"];
    if (format_reports(jsonl, "json", cfg) != slurp(dir / "attn.jsonl")) problems.push_back("report round-trip");
    const std::string csv_text = slurp(dir / "mlp.csv");
    const json cfg2 = json::parse(csv_text.substr(9, csv_text.find('\n') - 9));
    if (format_reports(csv, "csv", cfg2) != csv_text) problems.push_back("csv report round-trip");
    const PlanFile pf = read_plans(dir / "plan.cq");
    const ErrorReport lib = execute_plan(read_tensor(dir / "data/x_attn.cq").value,
                                         read_tensor(dir / "data/w_q.cq").value, pf.plans[0])
                                .report;
    if (jsonl.size() != 1 || jsonl[0].exact_error != lib.exact_error) problems.push_back("report value drift");
  } catch (const std::exception& e) {
    problems.push_back(std::string("round-trip: ") + e.what());
  }
  fs::remove_all(root);
  std::string detail = "4 outputs byte-identical across two runs; stats/plan/tensor/report round-trips lossless";
  if (!problems.empty()) {
    detail.clear();
    for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
  }
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"closed-form-optimality", closed_form_optimality},
      {"orthogonality-and-reconstruction", orthogonality_reconstruction},
      {"quantizer-oracle-equivalence", quantizer_oracle},
      {"activation-only-equals-pca", activation_only_is_pca},
      {"joint-selection-benefit", joint_selection_benefit},
      {"error-model-sanity", error_model_sanity},
      {"identity-shift-invariance", identity_shift_invariance},
      {"end-to-end-determinism", end_to_end_determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
