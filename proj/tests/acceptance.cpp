// Copyright 2026  The sslprobe Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. All inputs are generated here or by the planted generator.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracles.hpp"
#include "sslprobe/aggregation.hpp"
#include "sslprobe/cli.hpp"
#include "sslprobe/geometry.hpp"
#include "sslprobe/infostats.hpp"
#include "sslprobe/pipeline.hpp"
#include "sslprobe/probing.hpp"
#include "sslprobe/synthgen.hpp"
#include "test_util.hpp"

using namespace sslprobe;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kCiTarget = 0.0098, kCiTol = 1e-4;
constexpr double kCrvExactTol = 1e-9, kCrvNoisyFloor = 0.99, kCrvOracleTol = 1e-12;
constexpr double kAmiSelfTol = 1e-9, kEmiTol = 1e-9, kAmiNullTol = 0.02;
constexpr double kGradTol = 1e-5, kSeparableFloor = 0.98;
constexpr double kShellCeiling = 0.01, kCloudFloor = 0.9;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

Outcome ci_arithmetic() {
  const double h = ci95_halfwidth(0.5, 10000);
  return {std::abs(h - kCiTarget) <= kCiTol, fmt("halfwidth(0.5, 10000) = %.6f", h)};
}

Outcome crv_orthogonal() {
  testutil::TempDir tmp;
  PlantedConfig cfg;
  cfg.dim = 64;
  cfg.layer_count = 13;
  generate_planted(cfg, tmp / "clean");
  cfg.noise_sigma = 0.01;
  generate_planted(cfg, tmp / "noisy");
  std::vector<int> layers(13);
  for (int l = 0; l < 13; ++l) layers[static_cast<std::size_t>(l)] = l;
  const auto pairs = all_directed_pairs();
  double worst_gap = 0, noisy_min = 1;
  std::size_t count = 0;
  for (const auto& r : crv_sweep(load_dataset(tmp / "clean" / "manifest.json"), layers, pairs)) {
    worst_gap = std::max(worst_gap, std::abs(r.value - 1.0));
    ++count;
  }
  for (const auto& r : crv_sweep(load_dataset(tmp / "noisy" / "manifest.json"), layers, pairs)) {
    noisy_min = std::min(noisy_min, r.value);
    ++count;
  }
  return {count == 2 * 13 * 6 && worst_gap <= kCrvExactTol && noisy_min >= kCrvNoisyFloor,
          fmt("max |CRV - 1| noise-free = %.3g; min CRV at sigma 0.01 = %.6f", worst_gap, noisy_min)};
}

Outcome crv_oracle() {
  Rng rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 8 + static_cast<int>(rng.below(121));
    const int nx = 3 + static_cast<int>(rng.below(38)), ny = 3 + static_cast<int>(rng.below(38));
    const Eigen::MatrixXd x = gaussian(nx, d, rng), y = gaussian(ny, d, rng);
    const double fast = crv(fit_subspace(x, 35), fit_subspace(y, 35)).value;
    worst = std::max(worst, std::abs(fast - oracle::naive_crv(x, y, 35, 35)));
  }
  return {worst <= kCrvOracleTol, fmt("max |CRV - naive| over 100 pairs = %.3g", worst)};
}

Outcome ami_exactness() {
  Rng rng(11);
  double self_gap = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 20 + static_cast<int>(rng.below(2000));
    const int k = 2 + static_cast<int>(rng.below(12));
    std::vector<int> u(static_cast<std::size_t>(n));
    for (auto& v : u) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    u[0] = 0;
    u[1] = 1;
    self_gap = std::max(self_gap, std::abs(adjusted_mi(contingency_from_labels(u, u)).ami - 1.0));
  }

  double emi_gap = 0;
  long margin_sets = 0;
  for (int n = 1; n <= 8; ++n) {
    const auto parts = oracle::partitions(n);
    for (const auto& a : parts) {
      for (const auto& b : parts) {
        const std::vector<std::int64_t> wa(a.begin(), a.end()), wb(b.begin(), b.end());
        emi_gap = std::max(emi_gap, std::abs(expected_mi(wa, wb, n) - oracle::enumerated_emi(a, b)));
        ++margin_sets;
      }
    }
  }

  double sum = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng r(derive_seed(77, seed));
    std::vector<int> u(10000), v(10000);
    for (auto& x : u) x = static_cast<int>(r.below(5));
    for (auto& x : v) x = static_cast<int>(r.below(10));
    sum += adjusted_mi(contingency_from_labels(u, v)).ami;
  }
  const double mean = sum / 100;

  return {self_gap <= kAmiSelfTol && emi_gap <= kEmiTol && std::abs(mean) <= kAmiNullTol,
          fmt("max |AMI(U,U) - 1| = %.3g; max |EMI - enumeration| = %.3g", self_gap, emi_gap) +
              fmt(" over %.0f margin sets; null mean AMI = %.5f", static_cast<double>(margin_sets), mean)};
}

double gradient_gap(std::uint64_t seed) {
  Rng rng(seed);
  const int classes = 2 + static_cast<int>(rng.below(8));
  const int dim = 1 + static_cast<int>(rng.below(12));
  const int n = 1 + static_cast<int>(rng.below(40));
  const LinearProbe p{gaussian(classes, dim, rng, 0.5), gaussian(classes, 1, rng, 0.5).col(0)};
  const Eigen::MatrixXd x = gaussian(n, dim, rng);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  const LossGradient g = loss_and_gradient(p, x, y);
  const double h = 1e-5;
  auto loss = [&](const LinearProbe& q) { return loss_and_gradient(q, x, y).loss; };
  double num = 0, den = 0;
  for (int c = 0; c < classes; ++c) {
    for (int j = 0; j <= dim; ++j) {
      LinearProbe a = p, b = p;
      double& pa = j < dim ? a.weights(c, j) : a.bias(c);
      double& pb = j < dim ? b.weights(c, j) : b.bias(c);
      pa += h;
      pb -= h;
      const double analytic = j < dim ? g.d_weights(c, j) : g.d_bias(c);
      num = std::max(num, std::abs((loss(a) - loss(b)) / (2 * h) - analytic));
      den = std::max(den, std::abs(analytic));
    }
  }
  return num / std::max(den, 1e-12);
}

Outcome probe_correctness() {
  double grad = 0;
  for (std::uint64_t s = 0; s < 100; ++s) grad = std::max(grad, gradient_gap(5000 + s));

  testutil::TempDir tmp;
  PlantedConfig cfg;
  cfg.dim = 64;
  cfg.layer_count = 1;
  cfg.n_phones = 40;
  cfg.n_tones = 0;
  cfg.n_speakers = 4;
  cfg.frames_per_segment = 1;
  cfg.segments_per_utterance = 200;
  cfg.repeats_per_cell = 250;  // 40000 segments
  generate_planted(cfg, tmp / "sep");
  const Dataset d = load_dataset(tmp / "sep" / "manifest.json");
  SweepConfig sweep;
  sweep.sampling.seed = 3;
  sweep.probe.seed = 4;
  const LayerProbeResult sep = probe_layer(d, LabelKind::kPhone, 0, sweep);

  // Shuffled labels on the same features.
  SampleSet pooled = pool_segments(d, 0, d.segments(), LabelKind::kPhone);
  Rng rng(5);
  rng.shuffle(std::span<int>(pooled.labels));
  const auto [train, test] = sample_split(pooled, sweep.sampling);
  const TrainedProbe shuffled = train_probe(train, 40, sweep.probe);
  const EvalReport rep = evaluate_probe(shuffled.probe, test);
  const auto band = oracle::binomial_band99(1.0 / 40, static_cast<long>(rep.n_test));

  return {grad <= kGradTol && sep.report.accuracy >= kSeparableFloor && rep.accuracy >= band.first &&
              rep.accuracy <= band.second,
          fmt("max gradient gap = %.3g; separable accuracy = %.4f; ", grad, sep.report.accuracy) +
              fmt("shuffled accuracy = %.4f in [%.4f, %.4f]", rep.accuracy, band.first, band.second)};
}

Outcome layerwise_shape() {
  testutil::TempDir tmp;
  PlantedConfig cfg;
  cfg.dim = 32;
  cfg.layer_count = 13;
  cfg.n_tones = 0;
  cfg.noise_sigma = 2.0;
  cfg.repeats_per_cell = 150;
  cfg.snr_profile = {0.1, 0.2, 0.3, 0.45, 0.6, 0.8, 1.0, 0.8, 0.6, 0.45, 0.3, 0.2, 0.1};
  generate_planted(cfg, tmp / "shape");
  const Dataset d = load_dataset(tmp / "shape" / "manifest.json");
  SweepConfig sweep;
  sweep.sampling.train_size = 3000;
  sweep.sampling.test_size = 1800;
  std::vector<int> layers(13);
  for (int l = 0; l < 13; ++l) layers[static_cast<std::size_t>(l)] = l;
  const auto results = layer_sweep(d, LabelKind::kPhone, layers, sweep);
  Eigen::VectorXd acc(13);
  std::ostringstream curve;
  for (int l = 0; l < 13; ++l) {
    acc(l) = results[static_cast<std::size_t>(l)].report.accuracy;
    curve << (l ? " " : "") << fmt("%.3f", acc(l));
  }
  const int peak = argmax_lowest(acc);
  return {peak > 0 && peak < 12, "argmax layer " + std::to_string(peak) + "; accuracy by layer: " + curve.str()};
}

Outcome magnitude_diagnostics() {
  Rng rng(13);
  const Eigen::MatrixXd half = gaussian(20, 48, rng);
  Eigen::MatrixXd shell(40, 48);
  shell << half, -half;
  const MagnitudeStats s = magnitude_stats(shell);
  const double shell_ratio = s.mag_mean / s.mu_mag;

  testutil::TempDir tmp;
  PlantedConfig cfg;
  cfg.dim = 48;
  cfg.layer_count = 1;
  cfg.common_offset = 10.0;
  cfg.noise_sigma = 0.1;
  generate_planted(cfg, tmp / "cloud");
  const Dataset d = load_dataset(tmp / "cloud" / "manifest.json");
  const SampleSet phones = pool_segments(d, 0, d.segments(), LabelKind::kPhone);
  const MagnitudeStats c = magnitude_stats(present_class_centroids(phones, d.phones().size()).centroids);
  const double cloud_ratio = c.mag_mean / c.mu_mag;

  return {shell_ratio <= kShellCeiling && cloud_ratio >= kCloudFloor,
          fmt("shell ratio = %.3g; cloud ratio = %.4f", shell_ratio, cloud_ratio)};
}

Outcome determinism() {
  testutil::TempDir tmp;
  auto run = [](std::vector<std::string> args) {
    args.insert(args.begin(), "sslprobe");
    return cli::run(args);
  };
  const std::string ds = (tmp / "d").string();
  if (run({"synth", "--out", ds, "--dim", "24", "--layer-count", "3", "--noise", "0.5", "--repeats", "6",
           "--seed", "9"}) != 0) {
    return {false, "synth failed"};
  }
  const std::vector<std::pair<std::vector<std::string>, const char*>> commands{
      {{"probe", "--train-size", "450", "--test-size", "250", "--workers", "2"}, kProbeCsv},
      {{"geometry", "--workers", "2"}, kCrvCsv},
      {{"ami"}, kAmiCsv},
      {{"magnitudes", "--workers", "2"}, kMagnitudeCsv}};
  int identical = 0;
  for (const auto& [cmd, file] : commands) {
    std::string first;
    bool same = true;
    for (const char* dir : {"a", "b"}) {
      auto args = cmd;
      args.insert(args.end(), {"--dataset", ds, "--seed", "5", "--out", (tmp / dir).string()});
      if (run(args) != 0) return {false, std::string("run failed: ") + cmd[0]};
      const std::string bytes = testutil::read_bytes(tmp / dir / file);
      if (first.empty()) first = bytes;
      else same = same && bytes == first;
    }
    identical += same;
  }
  return {identical == 4, std::to_string(identical) + "/4 tables byte-identical across reruns"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"CI arithmetic", ci_arithmetic},
      {"CRV orthogonal construction", crv_orthogonal},
      {"CRV oracle equivalence", crv_oracle},
      {"AMI exactness", ami_exactness},
      {"probe correctness", probe_correctness},
      {"layerwise shape", layerwise_shape},
      {"magnitude diagnostics", magnitude_diagnostics},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail
              << fmt(" (%.1fs)", secs) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
