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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sslprobe/aggregation.hpp"
#include "sslprobe/common.hpp"
#include "sslprobe/dataset.hpp"

namespace sslprobe {

struct ProbeConfig {
  double learning_rate = 1e-3;
  int epochs = 5;
  int batch_size = 256;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Multinomial logistic regression: logits = W x + b.
struct LinearProbe {
  Eigen::MatrixXd weights;  // C x d
  Eigen::VectorXd bias;     // C

  static LinearProbe zeros(int class_count, Eigen::Index input_dim);

  int class_count() const { return static_cast<int>(weights.rows()); }
  Eigen::Index input_dim() const { return weights.cols(); }

  /// n x C logits for n x d inputs.
  template <typename Derived>
  Eigen::MatrixXd logits(const Eigen::MatrixBase<Derived>& inputs) const {
    return (inputs * weights.transpose()).rowwise() + bias.transpose();
  }
};

struct LossGradient {
  double loss = 0.0;  // mean cross-entropy, nats
  Eigen::MatrixXd d_weights;
  Eigen::VectorXd d_bias;
};

/// Mean cross-entropy of the probe on (inputs, labels) and its gradient.
LossGradient loss_and_gradient(const LinearProbe& probe, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                               std::span<const int> labels);

struct TrainedProbe {
  LinearProbe probe;
  /// Full-training-set loss before the first epoch and after each epoch.
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
};

/// Zero-initialised probe trained by minibatch Adam with a seeded reshuffle
/// each epoch; the state after the last epoch is returned. Throws ProbeError
/// if the loss becomes non-finite.
TrainedProbe train_probe(const SampleSet& train, int class_count, const ProbeConfig& config);

class ProbeError : public Error {
 public:
  using Error::Error;
};

struct EvalReport {
  double accuracy = 0.0;
  double ci95_halfwidth = 0.0;
  std::int64_t n_test = 0;
  Eigen::VectorXd per_class_accuracy;  // NaN for classes absent from the test set
  CountMatrix confusion;               // rows: true class, cols: predicted class
};

/// Normal-approximation 95% halfwidth, 1.96 * sqrt(acc (1 - acc) / n).
double ci95_halfwidth(double accuracy, std::int64_t n);

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
int argmax_lowest(const Eigen::DenseBase<Derived>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < row.size(); ++c) {
    if (row(c) > row(best)) best = c;
  }
  return static_cast<int>(best);
}

EvalReport evaluate_probe(const LinearProbe& probe, const SampleSet& test);

struct SweepConfig {
  SamplingConfig sampling;
  ProbeConfig probe;
};

struct LayerProbeResult {
  int layer = 0;
  LabelKind probe_type = LabelKind::kPhone;
  int class_count = 0;
  EvalReport report;
  double train_accuracy = 0.0;
};

/// Seeds for one (dataset, probe type, layer) unit, derived from the base
/// seeds so that units are independent of each other and of run order.
SweepConfig unit_config(const SweepConfig& base, const DatasetManifest& manifest, LabelKind probe_type, int layer);

/// Pool, relabel (speaker), split, train and evaluate for one layer.
LayerProbeResult probe_layer(const Dataset& dataset, LabelKind probe_type, int layer, const SweepConfig& config);

/// probe_layer over `layers` with per-layer derived seeds. Throws
/// UnsupportedError for tone probes on a corpus without tone labels.
std::vector<LayerProbeResult> layer_sweep(const Dataset& dataset, LabelKind probe_type, std::span<const int> layers,
                                          const SweepConfig& config, int workers = 1);

}  // namespace sslprobe
