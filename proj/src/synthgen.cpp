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

#include "sslprobe/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "sslprobe/dataset.hpp"
#include "sslprobe/matrix_io.hpp"
#include "sslprobe/parallel.hpp"
#include "sslprobe/probing.hpp"
#include "sslprobe/random.hpp"

namespace sslprobe {

namespace fs = std::filesystem;
using nlohmann::json;

void PlantedConfig::validate() const {
  if (dim <= 0) throw Error("dim must be positive");
  if (layer_count <= 0) throw Error("layer_count must be positive");
  if (n_phones < 2) throw Error("need at least two phones");
  if (n_tones == 1 || n_tones < 0) throw Error("n_tones must be 0 (non-tonal) or at least 2");
  if (n_speakers < 2) throw Error("need at least two speakers");
  if (!snr_profile.empty() && static_cast<int>(snr_profile.size()) != layer_count) {
    throw Error("snr_profile length must equal layer_count");
  }
  for (double o : {overlap_phone_tone, overlap_phone_speaker, overlap_tone_speaker}) {
    if (!(o >= 0.0 && o <= 1.0)) throw Error("overlap targets must lie in [0, 1]");
  }
  if (phone_rank() < 1 || speaker_rank() < 1 || (n_tones > 0 && tone_rank() < 1)) throw Error("ranks must be positive");
  if (phone_rank() + tone_rank() + speaker_rank() > dim) {
    throw Error("infeasible: loading ranks " + std::to_string(phone_rank() + tone_rank() + speaker_rank()) +
                " exceed dim " + std::to_string(dim));
  }
  if (noise_sigma < 0 || offset_scale <= 0 || speaker_scale < 0 || common_offset < 0) {
    throw Error("scales must be non-negative (offset_scale positive)");
  }
  if (repeats_per_cell < 1 || frames_per_segment < 1 || segments_per_utterance < 1) {
    throw Error("repeats, frames per segment and segments per utterance must be positive");
  }
  if (rare_phones < 0 || rare_phones >= n_phones) throw Error("rare_phones must leave at least one common phone");
  if (non_speech_phones < 0) throw Error("non_speech_phones must be non-negative");
  if (n_tones == 0 && dependence != LabelDependence::kIndependent) {
    throw Error("label dependence needs tones");
  }
  if (dependence == LabelDependence::kTargetMi && target_mi < 0) throw Error("target_mi must be non-negative");
}

double span_overlap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() == 0 || b.cols() == 0) return 0.0;
  return (a.transpose() * b).squaredNorm() / static_cast<double>(std::min(a.cols(), b.cols()));
}

Eigen::MatrixXd coupled_joint(int n_tones, int n_phones, double w) {
  if (n_tones == 0) return Eigen::MatrixXd::Constant(1, n_phones, 1.0 / n_phones);
  Eigen::MatrixXd j = Eigen::MatrixXd::Constant(n_tones, n_phones, (1.0 - w) / (n_tones * n_phones));
  for (int p = 0; p < n_phones; ++p) j(p % n_tones, p) += w / n_phones;
  return j;
}

namespace {

struct JointInfo {
  double mi = 0, h_row = 0, h_col = 0;
};

JointInfo joint_info(const Eigen::MatrixXd& j) {
  const Eigen::VectorXd pr = j.rowwise().sum();
  const Eigen::RowVectorXd pc = j.colwise().sum();
  JointInfo out;
  for (Eigen::Index r = 0; r < j.rows(); ++r) {
    if (pr(r) > 0) out.h_row -= pr(r) * std::log(pr(r));
    for (Eigen::Index c = 0; c < j.cols(); ++c) {
      if (j(r, c) > 0) out.mi += j(r, c) * std::log(j(r, c) / (pr(r) * pc(c)));
    }
  }
  for (Eigen::Index c = 0; c < j.cols(); ++c) {
    if (pc(c) > 0) out.h_col -= pc(c) * std::log(pc(c));
  }
  out.mi = std::max(out.mi, 0.0);
  return out;
}

Eigen::MatrixXd configured_joint(const PlantedConfig& cfg) {
  const int P = cfg.phone_vocab_size();
  switch (cfg.dependence) {
    case LabelDependence::kIndependent: return coupled_joint(cfg.n_tones, P, 0.0);
    case LabelDependence::kDeterministic: return coupled_joint(cfg.n_tones, P, 1.0);
    case LabelDependence::kTargetMi: {
      const double top = joint_info(coupled_joint(cfg.n_tones, P, 1.0)).mi;
      if (cfg.target_mi > top) {
        throw Error("infeasible: target MI " + std::to_string(cfg.target_mi) + " exceeds maximum " +
                    std::to_string(top));
      }
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (joint_info(coupled_joint(cfg.n_tones, P, mid)).mi < cfg.target_mi ? lo : hi) = mid;
      }
      return coupled_joint(cfg.n_tones, P, 0.5 * (lo + hi));
    }
  }
  throw Error("bad label dependence");
}

// Orthonormal d x d matrix from the QR factor of a Gaussian matrix.
Eigen::MatrixXd random_rotation(int d, Rng& rng) {
  Eigen::MatrixXd g(d, d);
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r < d; ++r) g(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
}

struct Loadings {
  Eigen::MatrixXd phone, tone, speaker;
};

// Per index i, phone p_i, tone t_i = cos(a) p_i + sin(a) f_i and speaker
// s_i = x p_i + y f_i + z g_i, with p, f, g drawn from disjoint columns of a
// random rotation. Distinct indices are orthogonal, so each matched pair
// carries exactly the target squared cosine.
Loadings build_loadings(const PlantedConfig& cfg, Rng& rng) {
  const int d = cfg.dim, rp = cfg.phone_rank(), rt = cfg.tone_rank(), rs = cfg.speaker_rank();
  const Eigen::MatrixXd q = random_rotation(d, rng);
  auto P = [&](int i) { return q.col(i); };
  auto F = [&](int i) { return q.col(rp + i); };
  auto G = [&](int i) { return q.col(rp + rt + i); };

  const double cos_pt = std::sqrt(cfg.overlap_phone_tone), sin_pt = std::sqrt(1.0 - cfg.overlap_phone_tone);
  const double c_ps = std::sqrt(cfg.overlap_phone_speaker), c_ts = std::sqrt(cfg.overlap_tone_speaker);

  Loadings out;
  out.phone = q.leftCols(rp);
  out.tone.resize(d, rt);
  for (int i = 0; i < rt; ++i) out.tone.col(i) = i < rp ? Eigen::VectorXd(cos_pt * P(i) + sin_pt * F(i)) : Eigen::VectorXd(F(i));

  out.speaker.resize(d, rs);
  for (int i = 0; i < rs; ++i) {
    const bool has_p = i < rp, has_f = i < rt;
    double x = has_p ? c_ps : 0.0, y = 0.0;
    if (has_f && has_p) {
      if (sin_pt > 1e-15) {
        y = (c_ts - x * cos_pt) / sin_pt;
        const double y_neg = (-c_ts - x * cos_pt) / sin_pt;
        if (std::abs(y_neg) < std::abs(y)) y = y_neg;
      } else if (std::abs(c_ts - x) > 1e-12) {
        throw Error("infeasible alignment: tone and phone spans coincide, so tone-speaker overlap must equal "
                    "phone-speaker overlap");
      }
    } else if (has_f) {
      y = c_ts;
    }
    const double z2 = 1.0 - x * x - y * y;
    if (z2 < -1e-12) throw Error("infeasible alignment targets for the given ranks");
    out.speaker.col(i) = x * (has_p ? Eigen::VectorXd(P(i)) : Eigen::VectorXd::Zero(d)) +
                         y * (has_f ? Eigen::VectorXd(F(i)) : Eigen::VectorXd::Zero(d)) +
                         std::sqrt(std::max(z2, 0.0)) * G(i);
  }
  return out;
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

struct PlannedSegment {
  int phone = 0;
  int tone = -1;
  int speaker = 0;
};

std::string pad(int v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", width, v);
  return buf;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data.at(r).at(c).get<double>();
  }
  return m;
}

}  // namespace

PlantedTruth generate_planted(const PlantedConfig& cfg, const fs::path& out_dir, int workers) {
  cfg.validate();
  const int P = cfg.phone_vocab_size();
  const int T = cfg.n_tones;
  const int S = cfg.n_speakers;
  const bool tonal = T > 0;

  // Sequential seeding phase: loadings, offsets, labels.
  Rng rng(cfg.seed);
  PlantedTruth truth;
  const Loadings A = build_loadings(cfg, rng);
  truth.phone_basis = A.phone;
  truth.tone_basis = A.tone;
  truth.speaker_basis = A.speaker;
  truth.phone_offsets = gaussian(P, cfg.phone_rank(), cfg.offset_scale, rng);
  truth.tone_offsets = gaussian(T, cfg.tone_rank(), cfg.offset_scale, rng);
  truth.speaker_offsets = gaussian(S, cfg.speaker_rank(), cfg.offset_scale, rng);
  truth.common_offset = Eigen::VectorXd::Zero(cfg.dim);
  if (cfg.common_offset > 0) {
    Eigen::VectorXd v = gaussian(cfg.dim, 1, 1.0, rng);
    truth.common_offset = cfg.common_offset * v.normalized();
  }
  truth.overlap_phone_tone = span_overlap(A.phone, A.tone);
  truth.overlap_phone_speaker = span_overlap(A.phone, A.speaker);
  truth.overlap_tone_speaker = span_overlap(A.tone, A.speaker);
  truth.joint = configured_joint(cfg);
  for (int p = cfg.n_phones - cfg.rare_phones; p < cfg.n_phones; ++p) truth.rare_phones.push_back(p);
  for (int p = cfg.n_phones; p < P; ++p) truth.non_speech_phones.push_back(p);
  truth.snr = cfg.snr_profile.empty() ? std::vector<double>(static_cast<std::size_t>(cfg.layer_count), 1.0)
                                      : cfg.snr_profile;
  truth.noise_sigma = cfg.noise_sigma;
  truth.speaker_scale = cfg.speaker_scale;
  truth.frames_per_segment = cfg.frames_per_segment;

  auto is_rare_for = [&](int phone, int speaker) {
    return speaker == 0 && std::find(truth.rare_phones.begin(), truth.rare_phones.end(), phone) != truth.rare_phones.end();
  };

  // Cumulative joint, row-major over (tone, phone).
  std::vector<double> cumulative;
  double acc = 0.0;
  for (Eigen::Index t = 0; t < truth.joint.rows(); ++t) {
    for (Eigen::Index p = 0; p < truth.joint.cols(); ++p) cumulative.push_back(acc += truth.joint(t, p));
  }

  std::vector<std::vector<PlannedSegment>> per_speaker(static_cast<std::size_t>(S));
  const int cells = P * std::max(T, 1);
  for (int s = 0; s < S; ++s) {
    auto& list = per_speaker[static_cast<std::size_t>(s)];
    if (cfg.dependence == LabelDependence::kIndependent && cfg.balanced) {
      for (int rep = 0; rep < cfg.repeats_per_cell; ++rep) {
        for (int t = 0; t < std::max(T, 1); ++t) {
          for (int p = 0; p < P; ++p) {
            if (!is_rare_for(p, s)) list.push_back({p, tonal ? t : -1, s});
          }
        }
      }
    } else {
      for (int k = 0; k < cfg.repeats_per_cell * cells;) {
        const double u = rng.uniform() * acc;
        const auto cell = static_cast<int>(std::min<std::ptrdiff_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin(),
            static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
        const int t = cell / P, p = cell % P;
        if (is_rare_for(p, s)) continue;
        list.push_back({p, tonal ? t : -1, s});
        ++k;
      }
    }
    rng.shuffle(std::span(list));
    truth.segments_per_speaker.push_back(static_cast<std::int64_t>(list.size()));
  }

  // Utterances and segment records.
  DatasetManifest manifest;
  manifest.dataset_id = cfg.dataset_id;
  manifest.model_id = cfg.model_id;
  manifest.language = cfg.language.empty() ? cfg.dataset_id : cfg.language;
  manifest.dim = cfg.dim;
  manifest.frame_ms = 20;
  for (int l = 0; l < cfg.layer_count; ++l) manifest.layers.push_back(l);
  if (tonal) manifest.label_files.tones = "tones.json";

  struct Utterance {
    std::string id;
    std::vector<PlannedSegment> segments;
  };
  std::vector<Utterance> utterances;
  std::vector<SegmentRecord> records;
  static constexpr SyllableRole kRoles[] = {SyllableRole::kOnset, SyllableRole::kNucleus, SyllableRole::kCoda};
  for (int s = 0; s < S; ++s) {
    const auto& list = per_speaker[static_cast<std::size_t>(s)];
    for (std::size_t begin = 0, u = 0; begin < list.size();
         begin += static_cast<std::size_t>(cfg.segments_per_utterance), ++u) {
      const std::size_t end = std::min(list.size(), begin + static_cast<std::size_t>(cfg.segments_per_utterance));
      Utterance utt{"s" + pad(s, 3) + "_u" + pad(static_cast<int>(u), 4), {list.begin() + begin, list.begin() + end}};
      for (std::size_t k = 0; k < utt.segments.size(); ++k) {
        const auto& ps = utt.segments[k];
        SegmentRecord r;
        r.utterance_id = utt.id;
        r.start_frame = static_cast<std::int64_t>(k) * cfg.frames_per_segment;
        r.end_frame = r.start_frame + cfg.frames_per_segment;
        r.phone = ps.phone;
        if (ps.tone >= 0) r.tone = ps.tone;
        r.speaker = ps.speaker;
        r.syllable_role = kRoles[k % 3];
        records.push_back(std::move(r));
      }
      manifest.utterances.push_back({utt.id, static_cast<std::int64_t>(utt.segments.size()) * cfg.frames_per_segment});
      utterances.push_back(std::move(utt));
    }
  }

  fs::create_directories(out_dir);
  save_manifest(manifest, out_dir / "manifest.json");
  LabelVocabulary phones{LabelKind::kPhone, {}}, tones{LabelKind::kTone, {}}, speakers{LabelKind::kSpeaker, {}};
  for (int p = 0; p < P; ++p) {
    const bool ns = p >= cfg.n_phones;
    phones.entries.push_back({p, ns ? "sil" + pad(p - cfg.n_phones, 2) : "ph" + pad(p, 2), ns});
  }
  for (int t = 0; t < T; ++t) tones.entries.push_back({t, "T" + std::to_string(t + 1), false});
  for (int s = 0; s < S; ++s) speakers.entries.push_back({s, "spk" + pad(s, 3), false});
  save_vocabulary(phones, out_dir / "phones.json");
  if (tonal) save_vocabulary(tones, out_dir / "tones.json");
  save_vocabulary(speakers, out_dir / "speakers.json");
  save_segments(records, out_dir / "segments.tsv");

  // Per-class mean vectors in ambient space.
  const Eigen::MatrixXd phone_mean = truth.phone_offsets * A.phone.transpose();        // P x d
  const Eigen::MatrixXd tone_mean = tonal ? Eigen::MatrixXd(truth.tone_offsets * A.tone.transpose())
                                          : Eigen::MatrixXd::Zero(1, cfg.dim);
  const Eigen::MatrixXd speaker_mean = cfg.speaker_scale * truth.speaker_offsets * A.speaker.transpose();

  parallel_for(utterances.size(), workers, [&](std::size_t ui) {
    const auto& utt = utterances[ui];
    const Eigen::Index rows = static_cast<Eigen::Index>(utt.segments.size()) * cfg.frames_per_segment;
    for (int l = 0; l < cfg.layer_count; ++l) {
      Rng noise(derive_seed(cfg.seed, hash_string(utt.id) ^ (0x1000003ULL * static_cast<std::uint64_t>(l + 1))));
      const double snr = truth.snr[static_cast<std::size_t>(l)];
      FrameMatrix m(rows, cfg.dim);
      for (std::size_t k = 0; k < utt.segments.size(); ++k) {
        const auto& ps = utt.segments[k];
        Eigen::RowVectorXd mu = phone_mean.row(ps.phone);
        if (ps.tone >= 0) mu += tone_mean.row(ps.tone);
        mu = snr * mu + speaker_mean.row(ps.speaker) + truth.common_offset.transpose();
        for (int f = 0; f < cfg.frames_per_segment; ++f) {
          const auto r = static_cast<Eigen::Index>(k) * cfg.frames_per_segment + f;
          for (Eigen::Index c = 0; c < cfg.dim; ++c) {
            const double eps = cfg.noise_sigma > 0 ? cfg.noise_sigma * noise.normal() : 0.0;
            m(r, c) = static_cast<float>(mu(c) + eps);
          }
        }
      }
      write_matrix_file(m, out_dir / matrix_file_name(utt.id, l));
    }
  });

  save_truth(truth, out_dir / "truth.json");
  return truth;
}

// ---------------------------------------------------------------------------
// Oracles

namespace {

// Centred ideal centroid matrix (one row per class) in ambient space.
Eigen::MatrixXd centred(const Eigen::MatrixXd& rows) { return rows.rowwise() - rows.colwise().mean(); }

// Orthonormal basis (columns) of the row space of `m`, top `k` directions.
Eigen::MatrixXd row_space(const Eigen::MatrixXd& m, Eigen::Index k) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double tol = sv.size() ? sv(0) * 1e-10 : 0.0;
  const Eigen::Index rank = std::min<Eigen::Index>((sv.array() > tol).count(), k);
  return svd.matrixV().leftCols(rank);
}

}  // namespace

OracleReport oracle_report(const PlantedTruth& truth, int mc_samples, std::uint64_t seed) {
  OracleReport out;
  const bool tonal = truth.tone_basis.cols() > 0;

  // Noise-free centroid matrices of a balanced design are the class means up
  // to a shared shift, so CRV(X|Y) = 1 - |C_x Q_y|^2 / |C_x|^2.
  std::map<LabelKind, Eigen::MatrixXd> ideal;
  ideal[LabelKind::kPhone] = centred(truth.phone_offsets * truth.phone_basis.transpose());
  ideal[LabelKind::kSpeaker] = centred(truth.speaker_offsets * truth.speaker_basis.transpose());
  if (tonal) ideal[LabelKind::kTone] = centred(truth.tone_offsets * truth.tone_basis.transpose());
  for (const auto& pair : all_directed_pairs()) {
    if (!ideal.count(pair.first) || !ideal.count(pair.second)) continue;
    const Eigen::MatrixXd& cx = ideal.at(pair.first);
    const Eigen::MatrixXd qy = row_space(ideal.at(pair.second), 35);
    out.expected_crv[pair] = 1.0 - (cx * qy).squaredNorm() / cx.squaredNorm();
  }

  const JointInfo info = joint_info(truth.joint);
  out.expected_mi = info.mi;
  const double mean_h = 0.5 * (info.h_row + info.h_col);
  out.expected_ami = mean_h > 0 ? info.mi / mean_h : 0.0;

  // Bayes accuracy of the pooled-sample mixture, per layer and label kind.
  const Eigen::Index T = truth.joint.rows(), P = truth.joint.cols(), S = truth.speaker_offsets.rows();
  const Eigen::MatrixXd phone_mean = truth.phone_offsets * truth.phone_basis.transpose();
  const Eigen::MatrixXd tone_mean = tonal ? Eigen::MatrixXd(truth.tone_offsets * truth.tone_basis.transpose())
                                          : Eigen::MatrixXd::Zero(1, truth.phone_basis.rows());
  const Eigen::MatrixXd speaker_mean = truth.speaker_scale * truth.speaker_offsets * truth.speaker_basis.transpose();
  const double var = truth.noise_sigma * truth.noise_sigma / std::max(1, truth.frames_per_segment);

  const Eigen::Index K = T * P * S;
  std::vector<double> weight(static_cast<std::size_t>(K));
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index p = 0; p < P; ++p)
      for (Eigen::Index s = 0; s < S; ++s) weight[static_cast<std::size_t>((t * P + p) * S + s)] = truth.joint(t, p) / S;
  std::vector<double> cumulative(weight.size());
  std::partial_sum(weight.begin(), weight.end(), cumulative.begin());

  for (double snr : truth.snr) {
    if (var == 0.0) {
      out.phone_accuracy.push_back(1.0);
      out.tone_accuracy.push_back(tonal ? 1.0 : 0.0);
      out.speaker_accuracy.push_back(1.0);
      continue;
    }
    Eigen::MatrixXd means(K, phone_mean.cols());
    for (Eigen::Index t = 0; t < T; ++t)
      for (Eigen::Index p = 0; p < P; ++p)
        for (Eigen::Index s = 0; s < S; ++s) {
          Eigen::RowVectorXd mu = phone_mean.row(p);
          if (tonal) mu += tone_mean.row(t);
          means.row((t * P + p) * S + s) = snr * mu + speaker_mean.row(s);
        }
    Rng rng(seed);
    Eigen::MatrixXd x(mc_samples, means.cols());
    std::vector<Eigen::Index> comp(static_cast<std::size_t>(mc_samples));
    for (int i = 0; i < mc_samples; ++i) {
      const double u = rng.uniform() * cumulative.back();
      const auto k = std::min<Eigen::Index>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin(), K - 1);
      comp[static_cast<std::size_t>(i)] = k;
      for (Eigen::Index c = 0; c < means.cols(); ++c) x(i, c) = means(k, c) + std::sqrt(var) * rng.normal();
    }
    // log w_k - |x - m_k|^2 / (2 var), shared by all three label kinds.
    Eigen::MatrixXd logp = (-0.5 / var) * ((-2.0 * x * means.transpose()).rowwise() + means.rowwise().squaredNorm().transpose());
    for (Eigen::Index k = 0; k < K; ++k) {
      const double w = weight[static_cast<std::size_t>(k)];
      logp.col(k).array() += w > 0 ? std::log(w) : -std::numeric_limits<double>::infinity();
    }
    auto accuracy_for = [&](auto label_of, Eigen::Index classes) {
      int hits = 0;
      for (int i = 0; i < mc_samples; ++i) {
        Eigen::VectorXd best = Eigen::VectorXd::Constant(classes, -std::numeric_limits<double>::infinity());
        for (Eigen::Index k = 0; k < K; ++k) {
          double& b = best(label_of(k));
          const double v = logp(i, k);
          if (v == -std::numeric_limits<double>::infinity()) continue;
          b = b == -std::numeric_limits<double>::infinity() ? v : std::max(b, v) + std::log1p(std::exp(-std::abs(b - v)));
        }
        hits += argmax_lowest(best) == label_of(comp[static_cast<std::size_t>(i)]);
      }
      return static_cast<double>(hits) / mc_samples;
    };
    out.phone_accuracy.push_back(accuracy_for([&](Eigen::Index k) { return (k / S) % P; }, P));
    out.tone_accuracy.push_back(tonal ? accuracy_for([&](Eigen::Index k) { return k / (S * P); }, T) : 0.0);
    out.speaker_accuracy.push_back(accuracy_for([&](Eigen::Index k) { return k % S; }, S));
  }
  return out;
}

// ---------------------------------------------------------------------------
// truth.json

void save_truth(const PlantedTruth& t, const fs::path& path) {
  json j;
  j["phone_basis"] = matrix_json(t.phone_basis);
  j["tone_basis"] = matrix_json(t.tone_basis);
  j["speaker_basis"] = matrix_json(t.speaker_basis);
  j["phone_offsets"] = matrix_json(t.phone_offsets);
  j["tone_offsets"] = matrix_json(t.tone_offsets);
  j["speaker_offsets"] = matrix_json(t.speaker_offsets);
  j["common_offset"] = matrix_json(t.common_offset);
  j["overlaps"] = {{"phone_tone", t.overlap_phone_tone},
                   {"phone_speaker", t.overlap_phone_speaker},
                   {"tone_speaker", t.overlap_tone_speaker}};
  j["joint"] = matrix_json(t.joint);
  j["rare_phones"] = t.rare_phones;
  j["non_speech_phones"] = t.non_speech_phones;
  j["snr"] = t.snr;
  j["noise_sigma"] = t.noise_sigma;
  j["speaker_scale"] = t.speaker_scale;
  j["frames_per_segment"] = t.frames_per_segment;
  j["segments_per_speaker"] = t.segments_per_speaker;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

PlantedTruth load_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file: " + path.string());
  const json j = json::parse(in);
  PlantedTruth t;
  t.phone_basis = matrix_from_json(j.at("phone_basis"));
  t.tone_basis = matrix_from_json(j.at("tone_basis"));
  t.speaker_basis = matrix_from_json(j.at("speaker_basis"));
  t.phone_offsets = matrix_from_json(j.at("phone_offsets"));
  t.tone_offsets = matrix_from_json(j.at("tone_offsets"));
  t.speaker_offsets = matrix_from_json(j.at("speaker_offsets"));
  t.common_offset = matrix_from_json(j.at("common_offset"));
  t.overlap_phone_tone = j.at("overlaps").at("phone_tone");
  t.overlap_phone_speaker = j.at("overlaps").at("phone_speaker");
  t.overlap_tone_speaker = j.at("overlaps").at("tone_speaker");
  t.joint = matrix_from_json(j.at("joint"));
  t.rare_phones = j.at("rare_phones").get<std::vector<int>>();
  t.non_speech_phones = j.at("non_speech_phones").get<std::vector<int>>();
  t.snr = j.at("snr").get<std::vector<double>>();
  t.noise_sigma = j.at("noise_sigma");
  t.speaker_scale = j.at("speaker_scale");
  t.frames_per_segment = j.at("frames_per_segment");
  t.segments_per_speaker = j.at("segments_per_speaker").get<std::vector<std::int64_t>>();
  return t;
}

}  // namespace sslprobe
