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

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "sslprobe/common.hpp"
#include "sslprobe/dataset.hpp"

namespace sslprobe {

/// Tone-by-phone co-occurrence counts for one syllable position.
struct ContingencyTable {
  CountMatrix counts;  // rows: tone classes, cols: phone classes
  SyllableRole role = SyllableRole::kNone;

  std::vector<std::int64_t> row_margins() const;
  std::vector<std::int64_t> col_margins() const;
  std::int64_t total() const { return counts.sum(); }
};

/// Counts segments with the given role. Labels outside `tones`/`phones`
/// retained sets (when given) are left out. Throws if nothing qualifies.
ContingencyTable build_contingency(std::span<const SegmentRecord> segments, SyllableRole role, int tone_count,
                                   int phone_count, const RetainedLabels* tones = nullptr,
                                   const RetainedLabels* phones = nullptr);

/// Contingency table of two parallel labelings (row labels, col labels).
ContingencyTable contingency_from_labels(std::span<const int> rows, std::span<const int> cols);

/// Shannon entropy in nats of a count vector.
double entropy(std::span<const std::int64_t> counts);

/// Mutual information in nats; zero cells contribute nothing.
double mutual_information(const ContingencyTable& table);

/// Expected MI under the fixed-margin hypergeometric permutation model,
/// evaluated with log-gamma arithmetic. Throws if the margins disagree on n.
double expected_mi(std::span<const std::int64_t> row_margins, std::span<const std::int64_t> col_margins,
                   std::int64_t n);

struct AmiReport {
  double mi = 0.0;
  double emi = 0.0;
  double h_row = 0.0;
  double h_col = 0.0;
  double ami = 0.0;
};

/// (MI - EMI) / (mean(H_row, H_col) - EMI); 0 when the denominator is 0.
AmiReport adjusted_mi(const ContingencyTable& table);

struct MagnitudeStats {
  double mu_mag = 0.0;
  std::optional<double> sigma_mag;  // absent for fewer than two rows
  double mag_mean = 0.0;
};

/// Mean and (n-1) standard deviation of the row norms, and the norm of the
/// mean row.
template <typename Derived>
MagnitudeStats magnitude_stats(const Eigen::MatrixBase<Derived>& rows) {
  const Eigen::Index n = rows.rows();
  if (n < 1) throw Error("magnitude statistics need at least one row");
  const DenseVector<double> norms = rows.template cast<double>().rowwise().norm();
  MagnitudeStats s;
  if (norms.maxCoeff() == norms.minCoeff()) {
    // Exact for equal magnitudes; the summed mean can differ in the last bit.
    s.mu_mag = norms(0);
    if (n >= 2) s.sigma_mag = 0.0;
  } else {
    s.mu_mag = norms.mean();
    if (n >= 2) {
      s.sigma_mag = std::sqrt((norms.array() - s.mu_mag).square().sum() / static_cast<double>(n - 1));
    }
  }
  s.mag_mean = rows.template cast<double>().colwise().mean().norm();
  return s;
}

}  // namespace sslprobe
