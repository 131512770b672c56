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
#include <string>
#include <vector>

#include "sslprobe/geometry.hpp"
#include "sslprobe/probing.hpp"

namespace sslprobe {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Output file names inside the run directory.
inline constexpr const char* kProbeCsv = "probe_accuracy.csv";
inline constexpr const char* kCrvCsv = "crv.csv";
inline constexpr const char* kAmiCsv = "ami.csv";
inline constexpr const char* kMagnitudeCsv = "magnitudes.csv";
inline constexpr const char* kReportJson = "report.json";

struct RunConfig {
  std::vector<std::filesystem::path> datasets;  // manifest files or their directories
  std::vector<LabelKind> probe_types{LabelKind::kPhone, LabelKind::kTone, LabelKind::kSpeaker};
  std::vector<int> layers;  // empty: every layer of each dataset
  std::vector<KindPair> pairs = all_directed_pairs();
  GeometryConfig geometry;
  SweepConfig sweep;
  bool raw_magnitudes = false;  // pooled samples instead of class aggregates
  std::uint64_t seed = 0;
  int workers = 1;
  std::uint64_t config_hash = 0;
};

std::filesystem::path manifest_path(const std::filesystem::path& dataset);

/// `# sslprobe <version> config_hash=<hex> seed=<n>`
std::string provenance_line(const RunConfig& config);

/// Shortest round-trip decimal form.
std::string format_number(double v);

// Each builder returns the complete CSV text, provenance line first. Rows are
// ordered by dataset (argument order), then kind/pair, then layer; skipped
// units produce a warning and no row.
std::string probe_table(const RunConfig& config);
std::string crv_table(const RunConfig& config);
std::string ami_table(const RunConfig& config);
std::string magnitude_table(const RunConfig& config);

/// Joins whichever CSV tables exist in `dir` into one JSON document.
std::string report_bundle(const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sslprobe
