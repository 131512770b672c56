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

#include "sslprobe/aggregation.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "sslprobe/random.hpp"

namespace sslprobe {

SampleSet SampleSet::subset(std::span<const std::size_t> indices) const {
  SampleSet out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.reserve(indices.size());
  out.refs.reserve(indices.size());
  out.speakers.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto i = indices[k];
    out.features.row(static_cast<Eigen::Index>(k)) = features.row(static_cast<Eigen::Index>(i));
    out.labels.push_back(labels[i]);
    out.refs.push_back(refs[i]);
    out.speakers.push_back(speakers[i]);
  }
  return out;
}

SampleSet pool_segments(const LayerFrames& frames, std::span<const SegmentRecord> segments, LabelKind label_kind) {
  if (label_kind == LabelKind::kSpeaker) throw Error("speaker samples are built with relabel_speaker");

  std::vector<const SegmentRecord*> used;
  used.reserve(segments.size());
  for (const auto& s : segments) {
    if (label_kind == LabelKind::kTone && !s.tone) continue;
    used.push_back(&s);
  }
  SampleSet out;
  if (used.empty()) {
    if (label_kind == LabelKind::kTone) warn("no segments carry tone labels; tone sample set is empty");
    return out;
  }

  const Eigen::Index dim = frames.at(used.front()->utterance_id).cols();
  out.features.resize(static_cast<Eigen::Index>(used.size()), dim);
  for (std::size_t i = 0; i < used.size(); ++i) {
    const auto& s = *used[i];
    if (s.end_frame <= s.start_frame) {
      throw Error("empty segment in " + s.utterance_id + " at frame " + std::to_string(s.start_frame));
    }
    const FrameMatrix& m = frames.at(s.utterance_id);
    if (s.start_frame < 0 || s.end_frame > m.rows()) {
      throw Error("segment " + s.utterance_id + " [" + std::to_string(s.start_frame) + ", " +
                  std::to_string(s.end_frame) + ") outside matrix");
    }
    out.features.row(static_cast<Eigen::Index>(i)) = pool_rows(m, s.start_frame, s.end_frame).transpose();
    out.labels.push_back(label_kind == LabelKind::kTone ? *s.tone : s.phone);
    out.refs.push_back({s.utterance_id, s.start_frame, s.end_frame});
    out.speakers.push_back(s.speaker);
  }
  return out;
}

SampleSet pool_segments(const Dataset& dataset, int layer, std::span<const SegmentRecord> segments,
                        LabelKind label_kind) {
  if (label_kind == LabelKind::kSpeaker) throw Error("speaker samples are built with relabel_speaker");
  std::map<std::string, std::vector<SegmentRecord>> by_utterance;
  std::vector<std::pair<std::string, std::size_t>> position;  // (utterance, index within its group)
  for (const auto& s : segments) {
    if (label_kind == LabelKind::kTone && !s.tone) continue;
    auto& group = by_utterance[s.utterance_id];
    position.emplace_back(s.utterance_id, group.size());
    group.push_back(s);
  }
  SampleSet out;
  if (position.empty()) {
    if (label_kind == LabelKind::kTone) warn("no segments carry tone labels; tone sample set is empty");
    return out;
  }
  std::map<std::string, SampleSet> pooled;
  for (const auto& [utt, group] : by_utterance) {
    std::map<std::string, FrameMatrix> one;
    one.emplace(utt, dataset.load_matrix(utt, layer));
    pooled.emplace(utt, pool_segments(LayerFrames(layer, std::move(one)), group, label_kind));
  }
  out.features.resize(static_cast<Eigen::Index>(position.size()), dataset.manifest().dim);
  for (std::size_t i = 0; i < position.size(); ++i) {
    const auto& src = pooled.at(position[i].first);
    const auto j = position[i].second;
    out.features.row(static_cast<Eigen::Index>(i)) = src.features.row(static_cast<Eigen::Index>(j));
    out.labels.push_back(src.labels[j]);
    out.refs.push_back(src.refs[j]);
    out.speakers.push_back(src.speakers[j]);
  }
  return out;
}

SampleSet relabel_speaker(const SampleSet& samples, std::span<const SegmentRecord> segments) {
  std::map<SegmentRef, int> speaker_of;
  for (const auto& s : segments) speaker_of.emplace(SegmentRef{s.utterance_id, s.start_frame, s.end_frame}, s.speaker);
  SampleSet out = samples;
  for (std::size_t i = 0; i < out.refs.size(); ++i) {
    auto it = speaker_of.find(out.refs[i]);
    if (it == speaker_of.end()) {
      const auto& r = out.refs[i];
      throw Error("unresolved segment " + r.utterance_id + " [" + std::to_string(r.start_frame) + ", " +
                  std::to_string(r.end_frame) + ")");
    }
    out.labels[i] = it->second;
    out.speakers[i] = it->second;
  }
  return out;
}

namespace {

// Splits the shuffled index list into a train part and a test part. In
// speaker-disjoint mode whole speakers are assigned to the test side until
// it reaches its share.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(const SampleSet& samples,
                                                                        const SamplingConfig& config, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(samples.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));

  const double test_share =
      static_cast<double>(config.test_size) / static_cast<double>(config.train_size + config.test_size);
  std::vector<std::size_t> train, test;

  if (config.speaker_disjoint) {
    std::vector<int> speakers(samples.speakers.begin(), samples.speakers.end());
    std::sort(speakers.begin(), speakers.end());
    speakers.erase(std::unique(speakers.begin(), speakers.end()), speakers.end());
    if (speakers.size() < 2) throw Error("speaker-disjoint split needs at least two speakers");
    rng.shuffle(std::span(speakers));
    std::map<int, std::size_t> per_speaker;
    for (int s : samples.speakers) ++per_speaker[s];
    std::set<int> test_speakers;
    std::size_t test_count = 0;
    const auto target = static_cast<std::size_t>(test_share * static_cast<double>(n));
    for (std::size_t k = 0; k + 1 < speakers.size() && test_count < std::max<std::size_t>(target, 1); ++k) {
      test_speakers.insert(speakers[k]);
      test_count += per_speaker[speakers[k]];
    }
    for (auto i : order) (test_speakers.count(samples.speakers[i]) ? test : train).push_back(i);
    return {train, test};
  }

  if (n < 2) return {order, order};
  auto n_test = static_cast<std::size_t>(std::llround(test_share * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  return {train, test};
}

std::vector<std::size_t> draw(std::span<const std::size_t> pool, std::int64_t count, Rng& rng) {
  std::vector<std::size_t> out(static_cast<std::size_t>(count));
  for (auto& v : out) v = pool[rng.below(pool.size())];
  return out;
}

}  // namespace

std::pair<SampleSet, SampleSet> sample_split(const SampleSet& samples, const SamplingConfig& config) {
  if (config.train_size <= 0 || config.test_size <= 0) throw Error("train and test sizes must be positive");
  if (samples.empty()) throw Error("cannot split an empty sample set");
  const auto n = static_cast<std::int64_t>(samples.size());
  Rng rng(config.seed);

  if (!config.replacement) {
    if (n < config.train_size + config.test_size) {
      throw Error("only " + std::to_string(n) + " samples for " + std::to_string(config.train_size) + " train + " +
                  std::to_string(config.test_size) +
                  " test without replacement; enable replacement or reduce the split sizes");
    }
    if (config.speaker_disjoint) {
      auto [train_pool, test_pool] = partition(samples, config, rng);
      if (static_cast<std::int64_t>(train_pool.size()) < config.train_size ||
          static_cast<std::int64_t>(test_pool.size()) < config.test_size) {
        throw Error("speaker-disjoint pools too small without replacement; enable replacement or reduce the split sizes");
      }
      train_pool.resize(static_cast<std::size_t>(config.train_size));
      test_pool.resize(static_cast<std::size_t>(config.test_size));
      return {samples.subset(train_pool), samples.subset(test_pool)};
    }
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    const auto train_end = order.begin() + config.train_size;
    std::vector<std::size_t> train(order.begin(), train_end);
    std::vector<std::size_t> test(train_end, train_end + config.test_size);
    return {samples.subset(train), samples.subset(test)};
  }

  auto [train_pool, test_pool] = partition(samples, config, rng);
  const auto train = draw(train_pool, config.train_size, rng);
  const auto test = draw(test_pool, config.test_size, rng);
  return {samples.subset(train), samples.subset(test)};
}

}  // namespace sslprobe
