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
#include <string>
#include <utility>
#include <vector>

#include "sslprobe/common.hpp"
#include "sslprobe/dataset.hpp"

namespace sslprobe {

struct SegmentRef {
  std::string utterance_id;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;

  bool operator==(const SegmentRef&) const = default;
  auto operator<=>(const SegmentRef&) const = default;
};

/// Pooled (vector, label) pairs stored column-aligned: row i of `features`
/// belongs to labels[i], refs[i] and speakers[i].
struct SampleSet {
  Eigen::MatrixXd features;  // n x d
  std::vector<int> labels;
  std::vector<SegmentRef> refs;
  std::vector<int> speakers;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  bool empty() const { return features.rows() == 0; }

  /// Rows selected by `indices`, in that order.
  SampleSet subset(std::span<const std::size_t> indices) const;
};

struct SamplingConfig {
  std::int64_t train_size = 25000;
  std::int64_t test_size = 10000;
  std::uint64_t seed = 0;
  bool replacement = false;
  bool speaker_disjoint = false;
};

/// Mean of rows [start, end) of a frame matrix, accumulated in double.
template <typename Derived>
DenseVector<double> pool_rows(const Eigen::MatrixBase<Derived>& frames, Eigen::Index start, Eigen::Index end) {
  return frames.middleRows(start, end - start).template cast<double>().colwise().sum().transpose() /
         static_cast<double>(end - start);
}

/// One sample per segment carrying `label_kind`; tone pooling skips segments
/// without a tone and warns if none have one. Speaker labels are not a
/// pooling kind; see relabel_speaker.
SampleSet pool_segments(const LayerFrames& frames, std::span<const SegmentRecord> segments, LabelKind label_kind);

/// Streaming variant: loads one utterance matrix at a time. Produces the
/// same samples, in the same order, as pooling over a loaded LayerFrames.
SampleSet pool_segments(const Dataset& dataset, int layer, std::span<const SegmentRecord> segments,
                        LabelKind label_kind);

/// Same vectors with labels replaced by each segment's speaker id.
SampleSet relabel_speaker(const SampleSet& samples, std::span<const SegmentRecord> segments);

/// Seeded train/test draw. Without replacement the two sets are disjoint.
/// With replacement the pool is first partitioned in proportion to the
/// requested sizes, then each side is drawn with replacement from its part.
std::pair<SampleSet, SampleSet> sample_split(const SampleSet& samples, const SamplingConfig& config);

}  // namespace sslprobe
