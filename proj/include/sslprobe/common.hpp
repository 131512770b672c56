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
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace sslprobe {

/// One utterance at one layer: T frames by d dims, stored as the on-disk
/// float32 row-major layout.
using FrameMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class LabelKind { kPhone, kTone, kSpeaker };
enum class SyllableRole { kOnset, kNucleus, kCoda, kNone };

std::string_view to_string(LabelKind kind);
std::string_view to_string(SyllableRole role);
std::optional<LabelKind> parse_label_kind(std::string_view s);
std::optional<SyllableRole> parse_syllable_role(std::string_view s);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

/// A requested analysis does not apply to the data (e.g. tones on a
/// non-tonal corpus). Callers that sweep many units skip these with a warning.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Warnings go to stderr unless a sink is installed (tests capture them).
using WarningSink = std::function<void(std::string_view)>;
WarningSink set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace sslprobe
