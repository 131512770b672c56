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

#include "sslprobe/geometry.hpp"

#include <map>
#include <set>

#include "sslprobe/parallel.hpp"

namespace sslprobe {

namespace {

CentroidMatrix centroids_impl(const SampleSet& samples, int class_count, bool skip_empty) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(class_count, samples.dim());
  std::vector<std::int64_t> counts(static_cast<std::size_t>(class_count), 0);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const int y = samples.labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= class_count) throw Error("label " + std::to_string(y) + " outside class count");
    sums.row(y) += samples.features.row(i);
    ++counts[static_cast<std::size_t>(y)];
  }
  CentroidMatrix out;
  std::vector<Eigen::Index> keep;
  for (int c = 0; c < class_count; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      if (!skip_empty) throw Error("class " + std::to_string(c) + " has no samples");
      warn("class " + std::to_string(c) + " has no samples; left out of the centroid matrix");
      continue;
    }
    keep.push_back(c);
  }
  out.centroids.resize(static_cast<Eigen::Index>(keep.size()), samples.dim());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto c = keep[r];
    const auto count = counts[static_cast<std::size_t>(c)];
    out.centroids.row(static_cast<Eigen::Index>(r)) = sums.row(c) / static_cast<double>(count);
    out.class_ids.push_back(static_cast<int>(c));
    out.counts.push_back(count);
  }
  return out;
}

}  // namespace

CentroidMatrix class_centroids(const SampleSet& samples, int class_count) {
  return centroids_impl(samples, class_count, false);
}

CentroidMatrix present_class_centroids(const SampleSet& samples, int class_count) {
  return centroids_impl(samples, class_count, true);
}

Subspace fit_subspace(const CentroidMatrix& centroids, Eigen::Index k) {
  if (centroids.class_count() < 2) throw Error("a centroid subspace needs at least two classes");
  return fit_subspace(centroids.centroids, k);
}

CrvReport crv(const Subspace& x, const Subspace& y) {
  CrvReport r;
  r.value = crv_value(x, y);
  r.k_x = x.size();
  r.k_y = y.size();
  return r;
}

std::vector<KindPair> all_directed_pairs() {
  using K = LabelKind;
  return {{K::kPhone, K::kSpeaker}, {K::kSpeaker, K::kPhone}, {K::kTone, K::kSpeaker},
          {K::kSpeaker, K::kTone},  {K::kTone, K::kPhone},    {K::kPhone, K::kTone}};
}

namespace {

std::map<LabelKind, Subspace> layer_subspaces(const Dataset& dataset, int layer, const std::set<LabelKind>& kinds,
                                             const GeometryConfig& config) {
  std::map<LabelKind, Subspace> out;
  if (kinds.count(LabelKind::kPhone) || kinds.count(LabelKind::kSpeaker)) {
    const auto segments = mask_segments(dataset.segments(), filter_rare_labels(dataset, LabelKind::kPhone));
    const SampleSet phones = pool_segments(dataset, layer, segments, LabelKind::kPhone);
    if (kinds.count(LabelKind::kPhone)) {
      out.emplace(LabelKind::kPhone,
                  fit_subspace(present_class_centroids(phones, dataset.phones().size()), config.k_phone));
    }
    if (kinds.count(LabelKind::kSpeaker)) {
      const SampleSet speakers = relabel_speaker(phones, segments);
      out.emplace(LabelKind::kSpeaker,
                  fit_subspace(present_class_centroids(speakers, dataset.speakers().size()), config.k_speaker));
    }
  }
  if (kinds.count(LabelKind::kTone)) {
    const auto segments = mask_segments(dataset.segments(), filter_rare_labels(dataset, LabelKind::kTone));
    const SampleSet tones = pool_segments(dataset, layer, segments, LabelKind::kTone);
    out.emplace(LabelKind::kTone,
                fit_subspace(present_class_centroids(tones, dataset.tones()->size()), config.k_tone));
  }
  return out;
}

}  // namespace

std::vector<CrvReport> crv_sweep(const Dataset& dataset, std::span<const int> layers, std::span<const KindPair> pairs,
                                 const GeometryConfig& config, int workers) {
  std::set<LabelKind> kinds;
  for (const auto& [x, y] : pairs) {
    if (x == y) throw Error("CRV pair needs two distinct label kinds");
    kinds.insert(x);
    kinds.insert(y);
  }
  if (kinds.count(LabelKind::kTone) && !dataset.has_tones()) {
    throw UnsupportedError("tone pairs requested but dataset " + dataset.manifest().dataset_id +
                           " has no tone labels");
  }
  for (int layer : layers) {
    if (!dataset.has_layer(layer)) {
      throw DatasetError("dataset " + dataset.manifest().dataset_id + " has no layer " + std::to_string(layer));
    }
  }

  std::vector<std::vector<CrvReport>> per_layer(layers.size());
  parallel_for(layers.size(), workers, [&](std::size_t i) {
    const auto spaces = layer_subspaces(dataset, layers[i], kinds, config);
    for (const auto& [x, y] : pairs) {
      CrvReport r = crv(spaces.at(x), spaces.at(y));
      r.layer = layers[i];
      r.model_id = dataset.manifest().model_id;
      r.test_set = dataset.manifest().dataset_id;
      r.pair_x = x;
      r.pair_y = y;
      per_layer[i].push_back(std::move(r));
    }
  });
  std::vector<CrvReport> out;
  for (auto& v : per_layer) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace sslprobe
