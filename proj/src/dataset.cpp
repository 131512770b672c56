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

#include "sslprobe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sslprobe/matrix_io.hpp"

namespace sslprobe {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<int> LabelVocabulary::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e.id;
  }
  return std::nullopt;
}

const FrameMatrix& LayerFrames::at(const std::string& utterance_id) const {
  auto it = matrices_.find(utterance_id);
  if (it == matrices_.end()) {
    throw DatasetError("utterance " + utterance_id + " not loaded for layer " + std::to_string(layer_));
  }
  return it->second;
}

std::string matrix_file_name(const std::string& utterance_id, int layer) {
  return utterance_id + ".layer" + std::to_string(layer) + ".sslm";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("missing file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DatasetError(path.string() + ": invalid JSON: " + e.what());
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_int(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stoll(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size();
}

constexpr const char* kSegmentHeader =
    "utterance_id\tstart_frame\tend_frame\tphone\ttone\tspeaker\tsyllable_role";

}  // namespace

DatasetManifest parse_manifest(const fs::path& path) {
  const json j = read_json(path);
  DatasetManifest m;
  try {
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.model_id = j.at("model_id").get<std::string>();
    m.language = j.value("language", m.dataset_id);
    m.dim = j.at("dim").get<int>();
    m.frame_ms = j.at("frame_ms").get<int>();
    m.layers = j.at("layers").get<std::vector<int>>();
    for (const auto& u : j.at("utterances")) {
      m.utterances.push_back({u.at("utterance_id").get<std::string>(), u.at("n_frames").get<std::int64_t>()});
    }
    const auto& lf = j.at("label_files");
    m.label_files.segments = lf.at("segments").get<std::string>();
    m.label_files.phones = lf.at("phones").get<std::string>();
    m.label_files.speakers = lf.at("speakers").get<std::string>();
    if (lf.contains("tones") && !lf.at("tones").is_null()) m.label_files.tones = lf.at("tones").get<std::string>();
  } catch (const json::exception& e) {
    throw DatasetError(path.string() + ": malformed manifest: " + e.what());
  }
  return m;
}

LabelVocabulary parse_vocabulary(const fs::path& path, LabelKind kind) {
  const json j = read_json(path);
  LabelVocabulary v;
  v.kind = kind;
  try {
    for (const auto& e : j) {
      v.entries.push_back({e.at("id").get<int>(), e.at("name").get<std::string>(), e.value("non_speech", false)});
    }
  } catch (const json::exception& e) {
    throw DatasetError(path.string() + ": malformed vocabulary: " + e.what());
  }
  std::sort(v.entries.begin(), v.entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return v;
}

std::vector<SegmentRecord> parse_segments(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("missing file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSegmentHeader) {
    throw DatasetError(path.string() + ": bad segment table header");
  }
  std::vector<SegmentRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    auto fail = [&](const std::string& what) {
      throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    if (f.size() != 7) fail("expected 7 columns, got " + std::to_string(f.size()));
    SegmentRecord s;
    s.utterance_id = f[0];
    std::int64_t v = 0;
    if (!parse_int(f[1], s.start_frame)) fail("bad start_frame");
    if (!parse_int(f[2], s.end_frame)) fail("bad end_frame");
    if (!parse_int(f[3], v)) fail("bad phone id");
    s.phone = static_cast<int>(v);
    if (!f[4].empty()) {
      if (!parse_int(f[4], v)) fail("bad tone id");
      s.tone = static_cast<int>(v);
    }
    if (!parse_int(f[5], v)) fail("bad speaker id");
    s.speaker = static_cast<int>(v);
    auto role = parse_syllable_role(f[6]);
    if (!role) fail("bad syllable_role '" + f[6] + "'");
    s.syllable_role = *role;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Writing

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  json j;
  j["dataset_id"] = m.dataset_id;
  j["model_id"] = m.model_id;
  j["language"] = m.language.empty() ? m.dataset_id : m.language;
  j["dim"] = m.dim;
  j["frame_ms"] = m.frame_ms;
  j["layers"] = m.layers;
  j["utterances"] = json::array();
  for (const auto& u : m.utterances) j["utterances"].push_back({{"utterance_id", u.utterance_id}, {"n_frames", u.n_frames}});
  json lf = {{"segments", m.label_files.segments}, {"phones", m.label_files.phones}, {"speakers", m.label_files.speakers}};
  if (m.label_files.tones) lf["tones"] = *m.label_files.tones;
  j["label_files"] = lf;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void save_vocabulary(const LabelVocabulary& vocab, const fs::path& path) {
  json j = json::array();
  for (const auto& e : vocab.entries) {
    json entry = {{"id", e.id}, {"name", e.name}};
    if (e.non_speech) entry["non_speech"] = true;
    j.push_back(entry);
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void save_segments(std::span<const SegmentRecord> segments, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << kSegmentHeader << '\n';
  for (const auto& s : segments) {
    out << s.utterance_id << '\t' << s.start_frame << '\t' << s.end_frame << '\t' << s.phone << '\t';
    if (s.tone) out << *s.tone;
    out << '\t' << s.speaker << '\t' << to_string(s.syllable_role) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_vocabulary(const LabelVocabulary& v, const std::string& entity, std::vector<Finding>& findings) {
  std::set<std::string> names;
  for (int i = 0; i < v.size(); ++i) {
    if (v.entries[i].id != i) {
      findings.push_back({entity, "ids are not dense 0..N-1 (expected " + std::to_string(i) + ", found " +
                                      std::to_string(v.entries[i].id) + ")"});
      break;
    }
  }
  for (const auto& e : v.entries) {
    if (!names.insert(e.name).second) findings.push_back({entity, "duplicate name '" + e.name + "'"});
  }
}

void check_matrix_file(const fs::path& path, const std::string& entity, std::int64_t n_frames, int dim,
                       ValidationDepth depth, std::vector<Finding>& findings) {
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    findings.push_back({entity, "missing matrix file " + path.filename().string()});
    return;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    findings.push_back({entity, "cannot open " + path.filename().string()});
    return;
  }
  MatrixHeader h;
  try {
    h = read_matrix_header(in);
  } catch (const FormatError& e) {
    findings.push_back({entity, e.what()});
    return;
  }
  const auto size = fs::file_size(path, ec);
  const std::uint64_t expected = kMatrixHeaderBytes + h.payload_bytes();
  if (!ec && size != expected) {
    findings.push_back({entity, "payload length mismatch: expected " + std::to_string(h.payload_bytes()) +
                                    " bytes, got " + std::to_string(size - std::min<std::uint64_t>(size, kMatrixHeaderBytes))});
    return;
  }
  if (static_cast<std::int64_t>(h.rows) != n_frames) {
    findings.push_back({entity, "row count " + std::to_string(h.rows) + " != n_frames " + std::to_string(n_frames)});
  }
  if (static_cast<std::int64_t>(h.cols) != dim) {
    findings.push_back({entity, "column count " + std::to_string(h.cols) + " != dim " + std::to_string(dim)});
  }
  if (depth == ValidationDepth::kFull) {
    in.seekg(0);
    try {
      const FrameMatrix m = read_matrix(in);
      if (!m.allFinite()) findings.push_back({entity, "non-finite values"});
    } catch (const FormatError& e) {
      findings.push_back({entity, e.what()});
    }
  }
}

struct Loaded {
  DatasetManifest manifest;
  LabelVocabulary phones, speakers;
  std::optional<LabelVocabulary> tones;
  std::vector<SegmentRecord> segments;
  bool labels_ok = false;
};

// Returns false if the manifest itself cannot be used.
bool collect(const fs::path& manifest_path, ValidationDepth depth, Loaded& out, std::vector<Finding>& findings) {
  const fs::path root = manifest_path.parent_path();
  try {
    out.manifest = parse_manifest(manifest_path);
  } catch (const DatasetError& e) {
    findings.push_back({"manifest", e.what()});
    return false;
  }
  const auto& m = out.manifest;
  if (m.dim <= 0) findings.push_back({"manifest", "dim must be positive"});
  if (m.frame_ms <= 0) findings.push_back({"manifest", "frame_ms must be positive"});
  {
    std::set<int> seen;
    for (int l : m.layers) {
      if (l < 0) findings.push_back({"manifest", "negative layer index " + std::to_string(l)});
      if (!seen.insert(l).second) findings.push_back({"manifest", "duplicate layer index " + std::to_string(l)});
    }
    if (m.layers.empty()) findings.push_back({"manifest", "no layers listed"});
  }
  {
    std::set<std::string> seen;
    for (const auto& u : m.utterances) {
      if (!seen.insert(u.utterance_id).second) {
        findings.push_back({"utterance " + u.utterance_id, "duplicate utterance_id"});
      }
      if (u.n_frames <= 0) findings.push_back({"utterance " + u.utterance_id, "n_frames must be positive"});
    }
  }

  bool vocab_ok = true;
  auto load_vocab = [&](const std::string& file, LabelKind kind, LabelVocabulary& dst) {
    const std::string entity = std::string(to_string(kind)) + " vocabulary";
    try {
      dst = parse_vocabulary(root / file, kind);
      check_vocabulary(dst, entity, findings);
    } catch (const DatasetError& e) {
      findings.push_back({entity, e.what()});
      vocab_ok = false;
    }
  };
  load_vocab(m.label_files.phones, LabelKind::kPhone, out.phones);
  if (m.label_files.tones) {
    out.tones.emplace();
    load_vocab(*m.label_files.tones, LabelKind::kTone, *out.tones);
  }
  load_vocab(m.label_files.speakers, LabelKind::kSpeaker, out.speakers);

  for (const auto& u : m.utterances) {
    for (int layer : m.layers) {
      const std::string entity = "utterance " + u.utterance_id + " layer " + std::to_string(layer);
      check_matrix_file(root / matrix_file_name(u.utterance_id, layer), entity, u.n_frames, m.dim, depth, findings);
    }
  }

  try {
    out.segments = parse_segments(root / m.label_files.segments);
  } catch (const DatasetError& e) {
    findings.push_back({"segments", e.what()});
    return true;
  }
  std::map<std::string, std::int64_t> frames;
  for (const auto& u : m.utterances) frames.emplace(u.utterance_id, u.n_frames);
  for (std::size_t i = 0; i < out.segments.size(); ++i) {
    const auto& s = out.segments[i];
    const std::string entity = "segment " + std::to_string(i) + " (" + s.utterance_id + " " +
                               std::to_string(s.start_frame) + ".." + std::to_string(s.end_frame) + ")";
    auto it = frames.find(s.utterance_id);
    if (it == frames.end()) {
      findings.push_back({entity, "unknown utterance_id"});
    } else if (s.start_frame < 0 || s.start_frame >= s.end_frame || s.end_frame > it->second) {
      findings.push_back({entity, "frame range outside [0, " + std::to_string(it->second) + "]"});
    }
    if (vocab_ok) {
      if (!out.phones.contains(s.phone)) findings.push_back({entity, "unresolved phone id " + std::to_string(s.phone)});
      if (!out.speakers.contains(s.speaker)) {
        findings.push_back({entity, "unresolved speaker id " + std::to_string(s.speaker)});
      }
      if (s.tone && (!out.tones || !out.tones->contains(*s.tone))) {
        findings.push_back({entity, "unresolved tone id " + std::to_string(*s.tone)});
      }
    }
  }
  out.labels_ok = vocab_ok;
  return true;
}

}  // namespace

std::vector<Finding> validate_dataset(const fs::path& manifest_path, ValidationDepth depth) {
  std::vector<Finding> findings;
  Loaded loaded;
  collect(manifest_path, depth, loaded, findings);
  return findings;
}

Dataset load_dataset(const fs::path& manifest_path) {
  std::vector<Finding> findings;
  Loaded loaded;
  collect(manifest_path, ValidationDepth::kHeaders, loaded, findings);
  if (!findings.empty()) {
    std::string msg = manifest_path.string() + ": " + findings.front().str();
    if (findings.size() > 1) msg += " (+" + std::to_string(findings.size() - 1) + " more)";
    throw DatasetError(msg);
  }
  Dataset d;
  d.root_ = manifest_path.parent_path();
  d.manifest_ = std::move(loaded.manifest);
  d.phones_ = std::move(loaded.phones);
  d.speakers_ = std::move(loaded.speakers);
  d.tones_ = std::move(loaded.tones);
  d.segments_ = std::move(loaded.segments);
  for (const auto& u : d.manifest_.utterances) d.frame_counts_.emplace(u.utterance_id, u.n_frames);
  return d;
}

// ---------------------------------------------------------------------------
// Dataset

bool Dataset::has_tones() const {
  if (!tones_ || tones_->size() == 0) return false;
  return std::any_of(segments_.begin(), segments_.end(), [](const auto& s) { return s.tone.has_value(); });
}

bool Dataset::has_layer(int layer) const {
  return std::find(manifest_.layers.begin(), manifest_.layers.end(), layer) != manifest_.layers.end();
}

std::int64_t Dataset::n_frames(const std::string& utterance_id) const {
  auto it = frame_counts_.find(utterance_id);
  if (it == frame_counts_.end()) throw DatasetError("unknown utterance " + utterance_id);
  return it->second;
}

fs::path Dataset::matrix_path(const std::string& utterance_id, int layer) const {
  return root_ / matrix_file_name(utterance_id, layer);
}

FrameMatrix Dataset::load_matrix(const std::string& utterance_id, int layer) const {
  if (!has_layer(layer)) throw DatasetError("layer " + std::to_string(layer) + " not in dataset " + manifest_.dataset_id);
  FrameMatrix m = read_matrix_file(matrix_path(utterance_id, layer));
  if (m.rows() != n_frames(utterance_id) || m.cols() != manifest_.dim) {
    throw DatasetError("shape mismatch in " + matrix_path(utterance_id, layer).string());
  }
  if (!m.allFinite()) throw DatasetError("non-finite values in " + matrix_path(utterance_id, layer).string());
  return m;
}

LayerFrames Dataset::load_layer(int layer) const {
  std::map<std::string, FrameMatrix> mats;
  for (const auto& u : manifest_.utterances) mats.emplace(u.utterance_id, load_matrix(u.utterance_id, layer));
  return LayerFrames(layer, std::move(mats));
}

const LabelVocabulary& Dataset::vocabulary(LabelKind kind) const {
  switch (kind) {
    case LabelKind::kPhone: return phones_;
    case LabelKind::kSpeaker: return speakers_;
    case LabelKind::kTone:
      if (!tones_) throw DatasetError("dataset " + manifest_.dataset_id + " has no tone vocabulary");
      return *tones_;
  }
  throw DatasetError("bad label kind");
}

// ---------------------------------------------------------------------------
// Time conversion

std::int64_t ms_to_frame(double ms, int frame_ms) {
  const double x = ms / static_cast<double>(frame_ms);
  return static_cast<std::int64_t>(std::ceil(x - 0.5));
}

std::optional<SegmentRecord> segment_from_ms(SegmentRecord labels, double start_ms, double end_ms, int frame_ms) {
  labels.start_frame = ms_to_frame(start_ms, frame_ms);
  labels.end_frame = ms_to_frame(end_ms, frame_ms);
  if (labels.end_frame <= labels.start_frame) {
    std::ostringstream msg;
    msg << "dropping zero-frame segment in " << labels.utterance_id << " [" << start_ms << " ms, " << end_ms << " ms)";
    warn(msg.str());
    return std::nullopt;
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Rare-label filtering

bool RetainedLabels::contains(int id) const {
  return std::binary_search(retained.begin(), retained.end(), id);
}

namespace {
std::optional<int> label_of(const SegmentRecord& s, LabelKind kind) {
  switch (kind) {
    case LabelKind::kPhone: return s.phone;
    case LabelKind::kTone: return s.tone;
    case LabelKind::kSpeaker: return s.speaker;
  }
  return std::nullopt;
}
}  // namespace

RetainedLabels filter_rare_labels(std::span<const SegmentRecord> segments, const LabelVocabulary& vocab,
                                  LabelKind kind) {
  if (kind == LabelKind::kSpeaker) throw Error("rare-label filtering applies to phone or tone labels");
  std::set<int> speakers;
  std::map<int, std::set<int>> speakers_by_label;
  for (const auto& s : segments) {
    auto label = label_of(s, kind);
    if (!label) continue;
    speakers.insert(s.speaker);
    speakers_by_label[*label].insert(s.speaker);
  }
  RetainedLabels out;
  out.kind = kind;
  for (const auto& e : vocab.entries) {
    auto it = speakers_by_label.find(e.id);
    const bool everywhere = it != speakers_by_label.end() && it->second.size() == speakers.size();
    if (everywhere && !e.non_speech) {
      out.retained.push_back(e.id);
    } else {
      out.excluded.push_back(e.id);
    }
  }
  if (out.retained.empty()) {
    throw Error(std::string("no ") + std::string(to_string(kind)) + " labels occur with every speaker");
  }
  return out;
}

RetainedLabels filter_rare_labels(const Dataset& dataset, LabelKind kind) {
  return filter_rare_labels(dataset.segments(), dataset.vocabulary(kind), kind);
}

std::vector<SegmentRecord> mask_segments(std::span<const SegmentRecord> segments, const RetainedLabels& retained) {
  std::vector<SegmentRecord> out;
  out.reserve(segments.size());
  for (const auto& s : segments) {
    auto label = label_of(s, retained.kind);
    if (label && !retained.contains(*label)) continue;
    out.push_back(s);
  }
  return out;
}

}  // namespace sslprobe
