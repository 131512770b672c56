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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sslprobe/common.hpp"

namespace sslprobe {

struct VocabEntry {
  int id = 0;
  std::string name;
  bool non_speech = false;
};

struct LabelVocabulary {
  LabelKind kind = LabelKind::kPhone;
  std::vector<VocabEntry> entries;

  int size() const { return static_cast<int>(entries.size()); }
  bool contains(int id) const { return id >= 0 && id < size(); }
  std::optional<int> find(std::string_view name) const;
};

struct UtteranceInfo {
  std::string utterance_id;
  std::int64_t n_frames = 0;
};

struct LabelFiles {
  std::string segments = "segments.tsv";
  std::string phones = "phones.json";
  std::string speakers = "speakers.json";
  std::optional<std::string> tones;
};

struct DatasetManifest {
  std::string dataset_id;
  std::string model_id;
  std::string language;  // defaults to dataset_id when absent
  int dim = 0;
  int frame_ms = 20;
  std::vector<int> layers;
  std::vector<UtteranceInfo> utterances;
  LabelFiles label_files;
};

struct SegmentRecord {
  std::string utterance_id;
  std::int64_t start_frame = 0;  // inclusive
  std::int64_t end_frame = 0;    // exclusive
  int phone = 0;
  std::optional<int> tone;
  int speaker = 0;
  SyllableRole syllable_role = SyllableRole::kNone;

  std::int64_t frames() const { return end_frame - start_frame; }
};

/// A validation problem tied to the entity that caused it.
struct Finding {
  std::string entity;
  std::string message;

  std::string str() const { return entity + ": " + message; }
  bool operator==(const Finding&) const = default;
};

/// All utterance matrices for one layer, keyed by utterance id.
class LayerFrames {
 public:
  LayerFrames() = default;
  LayerFrames(int layer, std::map<std::string, FrameMatrix> matrices)
      : layer_(layer), matrices_(std::move(matrices)) {}

  int layer() const { return layer_; }
  const FrameMatrix& at(const std::string& utterance_id) const;
  bool contains(const std::string& utterance_id) const { return matrices_.count(utterance_id) != 0; }
  std::size_t size() const { return matrices_.size(); }

 private:
  int layer_ = 0;
  std::map<std::string, FrameMatrix> matrices_;
};

/// Immutable after load; matrix access reads from disk on every call, so a
/// handle can be shared between threads.
class Dataset {
 public:
  const std::filesystem::path& root() const { return root_; }
  const DatasetManifest& manifest() const { return manifest_; }
  const LabelVocabulary& phones() const { return phones_; }
  const LabelVocabulary& speakers() const { return speakers_; }
  const std::optional<LabelVocabulary>& tones() const { return tones_; }
  bool has_tones() const;
  const std::vector<SegmentRecord>& segments() const { return segments_; }

  bool has_layer(int layer) const;
  std::int64_t n_frames(const std::string& utterance_id) const;
  std::filesystem::path matrix_path(const std::string& utterance_id, int layer) const;
  FrameMatrix load_matrix(const std::string& utterance_id, int layer) const;
  LayerFrames load_layer(int layer) const;

  const LabelVocabulary& vocabulary(LabelKind kind) const;

 private:
  friend Dataset load_dataset(const std::filesystem::path&);

  std::filesystem::path root_;
  DatasetManifest manifest_;
  LabelVocabulary phones_;
  LabelVocabulary speakers_;
  std::optional<LabelVocabulary> tones_;
  std::vector<SegmentRecord> segments_;
  std::map<std::string, std::int64_t> frame_counts_;
};

enum class ValidationDepth {
  kHeaders,  // matrix headers and file sizes only
  kFull,     // also read every value and check finiteness
};

/// Returns every problem found, in a stable order: manifest, vocabularies,
/// matrix files (manifest order, then layer order), segments (file order).
std::vector<Finding> validate_dataset(const std::filesystem::path& manifest_path,
                                      ValidationDepth depth = ValidationDepth::kFull);

/// Loads after a header-depth validation; throws DatasetError naming the
/// offending entity.
Dataset load_dataset(const std::filesystem::path& manifest_path);

std::string matrix_file_name(const std::string& utterance_id, int layer);

// Writers used by the generator and by tests.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
void save_vocabulary(const LabelVocabulary& vocab, const std::filesystem::path& path);
void save_segments(std::span<const SegmentRecord> segments, const std::filesystem::path& path);

DatasetManifest parse_manifest(const std::filesystem::path& path);
LabelVocabulary parse_vocabulary(const std::filesystem::path& path, LabelKind kind);
std::vector<SegmentRecord> parse_segments(const std::filesystem::path& path);

/// Nearest frame boundary for a millisecond timestamp; exact ties go to the
/// earlier frame.
std::int64_t ms_to_frame(double ms, int frame_ms);

/// Converts an aligner interval to a frame span. Returns nullopt (and warns)
/// when the span rounds to zero frames.
std::optional<SegmentRecord> segment_from_ms(SegmentRecord labels, double start_ms, double end_ms,
                                             int frame_ms);

struct RetainedLabels {
  LabelKind kind = LabelKind::kPhone;
  std::vector<int> retained;
  std::vector<int> excluded;

  bool contains(int id) const;
};

/// Keeps labels that occur with every speaker (among speakers carrying that
/// label kind) and are not flagged non-speech. Throws if nothing survives.
RetainedLabels filter_rare_labels(std::span<const SegmentRecord> segments, const LabelVocabulary& vocab,
                                  LabelKind kind);
RetainedLabels filter_rare_labels(const Dataset& dataset, LabelKind kind);

/// Drops segments whose label of `retained.kind` was excluded. Segments with
/// no tone are kept when masking tones.
std::vector<SegmentRecord> mask_segments(std::span<const SegmentRecord> segments,
                                         const RetainedLabels& retained);

}  // namespace sslprobe
