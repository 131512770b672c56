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

#include "sslprobe/infostats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sslprobe {

std::vector<std::int64_t> ContingencyTable::row_margins() const {
  std::vector<std::int64_t> out(static_cast<std::size_t>(counts.rows()));
  for (Eigen::Index r = 0; r < counts.rows(); ++r) out[static_cast<std::size_t>(r)] = counts.row(r).sum();
  return out;
}

std::vector<std::int64_t> ContingencyTable::col_margins() const {
  std::vector<std::int64_t> out(static_cast<std::size_t>(counts.cols()));
  for (Eigen::Index c = 0; c < counts.cols(); ++c) out[static_cast<std::size_t>(c)] = counts.col(c).sum();
  return out;
}

ContingencyTable build_contingency(std::span<const SegmentRecord> segments, SyllableRole role, int tone_count,
                                   int phone_count, const RetainedLabels* tones, const RetainedLabels* phones) {
  ContingencyTable t;
  t.role = role;
  t.counts = CountMatrix::Zero(tone_count, phone_count);
  for (const auto& s : segments) {
    if (s.syllable_role != role || !s.tone) continue;
    if (tones && !tones->contains(*s.tone)) continue;
    if (phones && !phones->contains(s.phone)) continue;
    if (*s.tone < 0 || *s.tone >= tone_count || s.phone < 0 || s.phone >= phone_count) {
      throw Error("label outside contingency table bounds in " + s.utterance_id);
    }
    ++t.counts(*s.tone, s.phone);
  }
  if (t.total() == 0) {
    throw Error(std::string("no tone-labelled segments with syllable role ") + std::string(to_string(role)));
  }
  return t;
}

ContingencyTable contingency_from_labels(std::span<const int> rows, std::span<const int> cols) {
  if (rows.size() != cols.size()) throw Error("labelings differ in length");
  if (rows.empty()) throw Error("empty labelings");
  const int r = *std::max_element(rows.begin(), rows.end()) + 1;
  const int c = *std::max_element(cols.begin(), cols.end()) + 1;
  ContingencyTable t;
  t.counts = CountMatrix::Zero(r, c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || cols[i] < 0) throw Error("negative label");
    ++t.counts(rows[i], cols[i]);
  }
  return t;
}

double entropy(std::span<const std::int64_t> counts) {
  const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}));
  double h = 0.0;
  for (auto c : counts) {
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

double mutual_information(const ContingencyTable& table) {
  const auto rows = table.row_margins();
  const auto cols = table.col_margins();
  const double n = static_cast<double>(table.total());
  if (n <= 0) throw Error("empty contingency table");
  double mi = 0.0;
  for (Eigen::Index i = 0; i < table.counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.counts.cols(); ++j) {
      const auto nij = table.counts(i, j);
      if (nij == 0) continue;
      const double a = static_cast<double>(rows[static_cast<std::size_t>(i)]);
      const double b = static_cast<double>(cols[static_cast<std::size_t>(j)]);
      mi += (static_cast<double>(nij) / n) * std::log(n * static_cast<double>(nij) / (a * b));
    }
  }
  // Rounding can leave -1e-17 on product tables.
  return std::max(mi, 0.0);
}

double expected_mi(std::span<const std::int64_t> row_margins, std::span<const std::int64_t> col_margins,
                   std::int64_t n) {
  const auto row_total = std::accumulate(row_margins.begin(), row_margins.end(), std::int64_t{0});
  const auto col_total = std::accumulate(col_margins.begin(), col_margins.end(), std::int64_t{0});
  if (row_total != n || col_total != n) throw Error("margins are inconsistent with n");
  if (n <= 0) throw Error("expected MI needs n > 0");

  const double N = static_cast<double>(n);
  const double lg_n = std::lgamma(N + 1);
  double emi = 0.0;
  for (auto ai : row_margins) {
    if (ai <= 0) continue;
    const double a = static_cast<double>(ai);
    for (auto bj : col_margins) {
      if (bj <= 0) continue;
      const double b = static_cast<double>(bj);
      // log of a! b! (N-a)! (N-b)! / N!, shared by every cell value.
      const double lg_fixed = std::lgamma(a + 1) + std::lgamma(b + 1) + std::lgamma(N - a + 1) +
                              std::lgamma(N - b + 1) - lg_n;
      const std::int64_t lo = std::max<std::int64_t>(1, ai + bj - n);
      const std::int64_t hi = std::min(ai, bj);
      for (std::int64_t k = lo; k <= hi; ++k) {
        const double x = static_cast<double>(k);
        const double log_p = lg_fixed - std::lgamma(x + 1) - std::lgamma(a - x + 1) - std::lgamma(b - x + 1) -
                             std::lgamma(N - a - b + x + 1);
        emi += (x / N) * std::log(N * x / (a * b)) * std::exp(log_p);
      }
    }
  }
  return emi;
}

AmiReport adjusted_mi(const ContingencyTable& table) {
  const auto rows = table.row_margins();
  const auto cols = table.col_margins();
  AmiReport r;
  r.mi = mutual_information(table);
  r.emi = expected_mi(rows, cols, table.total());
  r.h_row = entropy(rows);
  r.h_col = entropy(cols);
  const double denom = 0.5 * (r.h_row + r.h_col) - r.emi;
  r.ami = denom == 0.0 ? 0.0 : (r.mi - r.emi) / denom;
  return r;
}

}  // namespace sslprobe
