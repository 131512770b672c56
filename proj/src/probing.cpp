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

#include "sslprobe/probing.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "sslprobe/parallel.hpp"
#include "sslprobe/random.hpp"

namespace sslprobe {

void ProbeConfig::validate() const {
  if (!(learning_rate > 0)) throw Error("learning_rate must be positive");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (!(adam_beta1 > 0 && adam_beta1 < 1) || !(adam_beta2 > 0 && adam_beta2 < 1)) {
    throw Error("Adam betas must lie in (0, 1)");
  }
}

LinearProbe LinearProbe::zeros(int class_count, Eigen::Index input_dim) {
  return {Eigen::MatrixXd::Zero(class_count, input_dim), Eigen::VectorXd::Zero(class_count)};
}

namespace {

// Row-wise softmax in place; returns the per-row log-sum-exp.
Eigen::VectorXd softmax_rows(Eigen::MatrixXd& z) {
  Eigen::VectorXd lse(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    z.row(i).array() = (z.row(i).array() - m).exp();
    const double s = z.row(i).sum();
    z.row(i) /= s;
    lse(i) = m + std::log(s);
  }
  return lse;
}

}  // namespace

LossGradient loss_and_gradient(const LinearProbe& probe, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                               std::span<const int> labels) {
  const Eigen::Index n = inputs.rows();
  Eigen::MatrixXd z = probe.logits(inputs);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) loss -= z(i, labels[static_cast<std::size_t>(i)]);
  const Eigen::VectorXd lse = softmax_rows(z);
  loss += lse.sum();

  // z now holds probabilities; d loss / d logits = p - onehot.
  for (Eigen::Index i = 0; i < n; ++i) z(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  const double scale = 1.0 / static_cast<double>(n);
  LossGradient g;
  g.loss = loss * scale;
  g.d_weights = z.transpose() * inputs * scale;
  g.d_bias = z.colwise().sum().transpose() * scale;
  return g;
}

namespace {

double accuracy_on(const LinearProbe& probe, const SampleSet& samples) {
  const Eigen::MatrixXd z = probe.logits(samples.features);
  std::int64_t hits = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) hits += argmax_lowest(z.row(i)) == samples.labels[i];
  return static_cast<double>(hits) / static_cast<double>(z.rows());
}

struct AdamState {
  Eigen::MatrixXd m_w, v_w;
  Eigen::VectorXd m_b, v_b;
  std::int64_t step = 0;
};

}  // namespace

TrainedProbe train_probe(const SampleSet& train, int class_count, const ProbeConfig& config) {
  config.validate();
  if (train.empty()) throw ProbeError("empty training set");
  if (class_count < 2) throw ProbeError("a probe needs at least two classes");
  for (int y : train.labels) {
    if (y < 0 || y >= class_count) throw ProbeError("label " + std::to_string(y) + " outside class count");
  }

  TrainedProbe out;
  out.probe = LinearProbe::zeros(class_count, train.dim());
  auto& probe = out.probe;
  AdamState adam{Eigen::MatrixXd::Zero(class_count, train.dim()), Eigen::MatrixXd::Zero(class_count, train.dim()),
                 Eigen::VectorXd::Zero(class_count), Eigen::VectorXd::Zero(class_count)};

  const auto n = static_cast<std::size_t>(train.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;

  out.epoch_loss.push_back(loss_and_gradient(probe, train.features, train.labels).loss);
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(n, begin + static_cast<std::size_t>(config.batch_size));
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const Eigen::MatrixXd batch = train.features(idx, Eigen::all);
      batch_labels.clear();
      for (auto i : idx) batch_labels.push_back(train.labels[i]);

      const LossGradient g = loss_and_gradient(probe, batch, batch_labels);
      if (!std::isfinite(g.loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch + 1 << ", step " << adam.step + 1
            << " (learning_rate=" << config.learning_rate << ", batch_size=" << config.batch_size
            << ", batch rows " << begin << ".." << end << ")";
        throw ProbeError(msg.str());
      }

      ++adam.step;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam.step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam.step));
      adam.m_w = b1 * adam.m_w + (1 - b1) * g.d_weights;
      adam.v_w = b2 * adam.v_w + (1 - b2) * g.d_weights.cwiseAbs2();
      adam.m_b = b1 * adam.m_b + (1 - b1) * g.d_bias;
      adam.v_b = b2 * adam.v_b + (1 - b2) * g.d_bias.cwiseAbs2();
      probe.weights.array() -= config.learning_rate * (adam.m_w.array() / c1) /
                               ((adam.v_w.array() / c2).sqrt() + config.adam_epsilon);
      probe.bias.array() -= config.learning_rate * (adam.m_b.array() / c1) /
                            ((adam.v_b.array() / c2).sqrt() + config.adam_epsilon);
    }
    out.epoch_loss.push_back(loss_and_gradient(probe, train.features, train.labels).loss);
  }
  out.train_accuracy = accuracy_on(probe, train);
  return out;
}

double ci95_halfwidth(double accuracy, std::int64_t n) {
  return 1.96 * std::sqrt(accuracy * (1.0 - accuracy) / static_cast<double>(n));
}

EvalReport evaluate_probe(const LinearProbe& probe, const SampleSet& test) {
  if (test.empty()) throw Error("empty test set");
  if (test.dim() != probe.input_dim()) {
    throw Error("dimension mismatch: probe expects " + std::to_string(probe.input_dim()) + ", test set has " +
                std::to_string(test.dim()));
  }
  const int C = probe.class_count();
  EvalReport r;
  r.n_test = test.size();
  r.confusion = CountMatrix::Zero(C, C);
  const Eigen::MatrixXd z = probe.logits(test.features);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int y = test.labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= C) throw Error("test label " + std::to_string(y) + " outside class count");
    ++r.confusion(y, argmax_lowest(z.row(i)));
  }
  r.accuracy = static_cast<double>(r.confusion.trace()) / static_cast<double>(r.n_test);
  r.ci95_halfwidth = ci95_halfwidth(r.accuracy, r.n_test);
  r.per_class_accuracy.resize(C);
  for (int c = 0; c < C; ++c) {
    const auto total = r.confusion.row(c).sum();
    r.per_class_accuracy(c) = total == 0 ? std::numeric_limits<double>::quiet_NaN()
                                         : static_cast<double>(r.confusion(c, c)) / static_cast<double>(total);
  }
  return r;
}

SweepConfig unit_config(const SweepConfig& base, const DatasetManifest& manifest, LabelKind probe_type, int layer) {
  const std::uint64_t tag = hash_string(manifest.model_id + "\x1f" + manifest.dataset_id + "\x1f" +
                                        std::string(to_string(probe_type)) + "\x1f" + std::to_string(layer));
  SweepConfig c = base;
  c.sampling.seed = derive_seed(base.sampling.seed, tag ^ 0x5a);
  c.probe.seed = derive_seed(base.probe.seed, tag ^ 0xa5);
  return c;
}

LayerProbeResult probe_layer(const Dataset& dataset, LabelKind probe_type, int layer, const SweepConfig& config) {
  if (!dataset.has_layer(layer)) {
    throw DatasetError("dataset " + dataset.manifest().dataset_id + " has no layer " + std::to_string(layer));
  }
  const LabelKind pool_kind = probe_type == LabelKind::kTone ? LabelKind::kTone : LabelKind::kPhone;
  if (pool_kind == LabelKind::kTone && !dataset.has_tones()) {
    throw UnsupportedError("dataset " + dataset.manifest().dataset_id + " has no tone labels");
  }
  const auto retained = filter_rare_labels(dataset, pool_kind);
  const auto segments = mask_segments(dataset.segments(), retained);
  SampleSet samples = pool_segments(dataset, layer, segments, pool_kind);
  if (probe_type == LabelKind::kSpeaker) samples = relabel_speaker(samples, segments);

  const int class_count = dataset.vocabulary(probe_type).size();
  auto [train, test] = sample_split(samples, config.sampling);
  TrainedProbe trained = train_probe(train, class_count, config.probe);

  LayerProbeResult r;
  r.layer = layer;
  r.probe_type = probe_type;
  r.class_count = class_count;
  r.report = evaluate_probe(trained.probe, test);
  r.train_accuracy = trained.train_accuracy;
  return r;
}

std::vector<LayerProbeResult> layer_sweep(const Dataset& dataset, LabelKind probe_type, std::span<const int> layers,
                                          const SweepConfig& config, int workers) {
  if (probe_type == LabelKind::kTone && !dataset.has_tones()) {
    throw UnsupportedError("dataset " + dataset.manifest().dataset_id + " has no tone labels");
  }
  std::vector<LayerProbeResult> out(layers.size());
  parallel_for(layers.size(), workers, [&](std::size_t i) {
    out[i] = probe_layer(dataset, probe_type, layers[i], unit_config(config, dataset.manifest(), probe_type, layers[i]));
  });
  return out;
}

}  // namespace sslprobe
