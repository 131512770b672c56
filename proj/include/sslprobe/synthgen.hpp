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
#include <string>
#include <vector>

#include "sslprobe/common.hpp"
#include "sslprobe/geometry.hpp"

namespace sslprobe {

enum class LabelDependence {
  kIndependent,    // uniform product distribution
  kTargetMi,       // product mixed with a phone->tone coupling, tuned to target_mi
  kDeterministic,  // tone = phone mod n_tones
};

/// Planted factor model. Frames of a segment with labels (p, t, s) at
/// layer l are
///   snr[l] * (A_p e_p + A_t e_t) + speaker_scale * A_s e_s + offset + noise
/// where A_* are d x r orthonormal loadings and e_* per-class offsets.
struct PlantedConfig {
  std::string dataset_id = "planted";
  std::string model_id = "synthetic";
  std::string language;  // defaults to dataset_id

  int dim = 64;
  int layer_count = 13;
  int n_phones = 8;  // speech phones; non-speech entries are appended
  int n_tones = 4;   // 0 for a non-tonal corpus
  int n_speakers = 4;
  int rank_phone = 0;  // 0 means n - 1
  int rank_tone = 0;
  int rank_speaker = 0;

  // Target squared-cosine overlap between loading spans, in [0, 1].
  double overlap_phone_tone = 0.0;
  double overlap_phone_speaker = 0.0;
  double overlap_tone_speaker = 0.0;

  LabelDependence dependence = LabelDependence::kIndependent;
  double target_mi = 0.0;  // nats, for kTargetMi
  /// Independent labels only: enumerate every (phone, tone) cell for every
  /// speaker instead of drawing, so label co-occurrence is exactly balanced.
  bool balanced = true;

  std::vector<double> snr_profile;  // per layer; empty means all 1
  double offset_scale = 1.0;
  double speaker_scale = 1.0;
  double noise_sigma = 0.0;
  double common_offset = 0.0;  // norm of an offset shared by every frame

  int repeats_per_cell = 2;  // segments per speaker = repeats * phones * max(tones, 1)
  int frames_per_segment = 3;
  int segments_per_utterance = 24;
  int rare_phones = 0;        // last speech phones never uttered by speaker 0
  int non_speech_phones = 0;  // flagged entries uttered by every speaker

  std::uint64_t seed = 1;

  int phone_rank() const { return rank_phone > 0 ? rank_phone : n_phones + non_speech_phones - 1; }
  int tone_rank() const { return n_tones == 0 ? 0 : (rank_tone > 0 ? rank_tone : n_tones - 1); }
  int speaker_rank() const { return rank_speaker > 0 ? rank_speaker : n_speakers - 1; }
  int phone_vocab_size() const { return n_phones + non_speech_phones; }

  /// Throws Error for invalid or infeasible settings.
  void validate() const;
};

struct PlantedTruth {
  Eigen::MatrixXd phone_basis;    // d x r_p, orthonormal columns
  Eigen::MatrixXd tone_basis;     // d x r_t (empty when non-tonal)
  Eigen::MatrixXd speaker_basis;  // d x r_s
  Eigen::MatrixXd phone_offsets;    // n_phone_vocab x r_p
  Eigen::MatrixXd tone_offsets;     // n_tones x r_t
  Eigen::MatrixXd speaker_offsets;  // n_speakers x r_s
  Eigen::VectorXd common_offset;    // d

  // Measured from the bases: |B_x^T B_y|_F^2 / min(r_x, r_y).
  double overlap_phone_tone = 0.0;
  double overlap_phone_speaker = 0.0;
  double overlap_tone_speaker = 0.0;

  Eigen::MatrixXd joint;  // n_tones x n_phone_vocab label distribution (1 x P if non-tonal)
  std::vector<int> rare_phones;
  std::vector<int> non_speech_phones;
  std::vector<double> snr;
  double noise_sigma = 0.0;
  double speaker_scale = 1.0;
  int frames_per_segment = 0;
  std::vector<std::int64_t> segments_per_speaker;
};

/// Writes a dataset container (manifest.json etc.) plus truth.json into
/// `out_dir` and returns the truth. Bit-deterministic given the seed.
PlantedTruth generate_planted(const PlantedConfig& config, const std::filesystem::path& out_dir, int workers = 1);

/// Overlap measure used in PlantedTruth for orthonormal-column bases.
double span_overlap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// The coupled joint tone/phone distribution with mixing weight w in [0, 1].
Eigen::MatrixXd coupled_joint(int n_tones, int n_phones, double w);

struct OracleReport {
  std::map<KindPair, double> expected_crv;  // noise-free closed form
  std::vector<double> phone_accuracy;       // Bayes accuracy per layer
  std::vector<double> tone_accuracy;
  std::vector<double> speaker_accuracy;
  double expected_mi = 0.0;   // nats, of the configured joint distribution
  double expected_ami = 0.0;  // large-sample limit MI / mean(H)
};

/// Expected metrics from the planted truth. Bayes accuracies are Monte Carlo
/// estimates under the planted mixture (exactly 1 when noise is 0).
OracleReport oracle_report(const PlantedTruth& truth, int mc_samples = 2000, std::uint64_t seed = 7);

void save_truth(const PlantedTruth& truth, const std::filesystem::path& path);
PlantedTruth load_truth(const std::filesystem::path& path);

}  // namespace sslprobe
