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

#include "sslprobe/pipeline.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "sslprobe/infostats.hpp"
#include "sslprobe/parallel.hpp"

namespace sslprobe {

namespace fs = std::filesystem;

fs::path manifest_path(const fs::path& dataset) {
  return fs::is_directory(dataset) ? dataset / "manifest.json" : dataset;
}

std::string provenance_line(const RunConfig& config) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config.config_hash));
  return std::string("# sslprobe ") + kToolkitVersion + " config_hash=" + hash + " seed=" + std::to_string(config.seed);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

namespace {

std::vector<Dataset> load_all(const RunConfig& config) {
  if (config.datasets.empty()) throw Error("no datasets given");
  std::vector<Dataset> out;
  for (const auto& d : config.datasets) out.push_back(load_dataset(manifest_path(d)));
  return out;
}

std::vector<int> layers_for(const RunConfig& config, const Dataset& d) {
  if (config.layers.empty()) return d.manifest().layers;
  std::vector<int> out;
  for (int l : config.layers) {
    if (d.has_layer(l)) {
      out.push_back(l);
    } else {
      warn("dataset " + d.manifest().dataset_id + " has no layer " + std::to_string(l) + "; skipped");
    }
  }
  return out;
}

bool uses_tone(const KindPair& p) { return p.first == LabelKind::kTone || p.second == LabelKind::kTone; }

}  // namespace

std::string probe_table(const RunConfig& config) {
  const auto datasets = load_all(config);
  struct Unit {
    const Dataset* dataset;
    LabelKind type;
    int layer;
  };
  std::vector<Unit> units;
  for (const auto& d : datasets) {
    for (LabelKind type : config.probe_types) {
      if (type == LabelKind::kTone && !d.has_tones()) {
        warn("tone probes skipped for " + d.manifest().dataset_id + ": no tone labels");
        continue;
      }
      for (int layer : layers_for(config, d)) units.push_back({&d, type, layer});
    }
  }
  SweepConfig base = config.sweep;
  base.sampling.seed = config.seed;
  base.probe.seed = config.seed;

  std::vector<LayerProbeResult> results(units.size());
  parallel_for(units.size(), config.workers, [&](std::size_t i) {
    const auto& u = units[i];
    results[i] = probe_layer(*u.dataset, u.type, u.layer, unit_config(base, u.dataset->manifest(), u.type, u.layer));
  });

  std::ostringstream csv;
  csv << provenance_line(config) << '\n';
  csv << "model_id,test_set,probe_type,layer,accuracy,ci95,n_test,train_acc_final\n";
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& m = units[i].dataset->manifest();
    const auto& r = results[i];
    csv << m.model_id << ',' << m.dataset_id << ',' << to_string(r.probe_type) << ',' << r.layer << ','
        << format_number(r.report.accuracy) << ',' << format_number(r.report.ci95_halfwidth) << ','
        << r.report.n_test << ',' << format_number(r.train_accuracy) << '\n';
  }
  return csv.str();
}

std::string crv_table(const RunConfig& config) {
  const auto datasets = load_all(config);
  struct Unit {
    const Dataset* dataset;
    int layer;
    std::vector<KindPair> pairs;
  };
  std::vector<Unit> units;
  for (const auto& d : datasets) {
    std::vector<KindPair> pairs;
    for (const auto& p : config.pairs) {
      if (uses_tone(p) && !d.has_tones()) {
        warn("CRV(" + std::string(to_string(p.first)) + "|" + std::string(to_string(p.second)) + ") skipped for " +
             d.manifest().dataset_id + ": no tone labels");
        continue;
      }
      pairs.push_back(p);
    }
    if (pairs.empty()) continue;
    for (int layer : layers_for(config, d)) units.push_back({&d, layer, pairs});
  }

  std::vector<std::vector<CrvReport>> results(units.size());
  parallel_for(units.size(), config.workers, [&](std::size_t i) {
    const int layer = units[i].layer;
    results[i] = crv_sweep(*units[i].dataset, std::span(&layer, 1), units[i].pairs, config.geometry, 1);
  });

  std::ostringstream csv;
  csv << provenance_line(config) << '\n';
  csv << "model_id,test_set,pair_x,pair_y,layer,crv,k_x,k_y\n";
  for (const auto& rows : results) {
    for (const auto& r : rows) {
      csv << r.model_id << ',' << r.test_set << ',' << to_string(r.pair_x) << ',' << to_string(r.pair_y) << ','
          << r.layer << ',' << format_number(r.value) << ',' << r.k_x << ',' << r.k_y << '\n';
    }
  }
  return csv.str();
}

std::string ami_table(const RunConfig& config) {
  const auto datasets = load_all(config);
  std::ostringstream csv;
  csv << provenance_line(config) << '\n';
  csv << "language,syllable_role,mi,emi,h_row,h_col,ami\n";
  for (const auto& d : datasets) {
    if (!d.has_tones()) {
      warn("AMI skipped for " + d.manifest().dataset_id + ": no tone labels");
      continue;
    }
    const auto tones = filter_rare_labels(d, LabelKind::kTone);
    const auto phones = filter_rare_labels(d, LabelKind::kPhone);
    for (SyllableRole role : {SyllableRole::kOnset, SyllableRole::kNucleus, SyllableRole::kCoda}) {
      std::optional<ContingencyTable> table;
      try {
        table = build_contingency(d.segments(), role, d.tones()->size(), d.phones().size(), &tones, &phones);
      } catch (const Error& e) {
        warn(d.manifest().dataset_id + ": " + e.what() + "; row skipped");
        continue;
      }
      const AmiReport r = adjusted_mi(*table);
      csv << d.manifest().language << ',' << to_string(role) << ',' << format_number(r.mi) << ','
          << format_number(r.emi) << ',' << format_number(r.h_row) << ',' << format_number(r.h_col) << ','
          << format_number(r.ami) << '\n';
    }
  }
  return csv.str();
}

std::string magnitude_table(const RunConfig& config) {
  const auto datasets = load_all(config);
  struct Unit {
    const Dataset* dataset;
    int layer;
  };
  std::vector<Unit> units;
  for (const auto& d : datasets) {
    for (int layer : layers_for(config, d)) units.push_back({&d, layer});
  }
  std::vector<std::array<MagnitudeStats, 2>> results(units.size());
  parallel_for(units.size(), config.workers, [&](std::size_t i) {
    const Dataset& d = *units[i].dataset;
    const auto segments = mask_segments(d.segments(), filter_rare_labels(d, LabelKind::kPhone));
    const SampleSet phones = pool_segments(d, units[i].layer, segments, LabelKind::kPhone);
    const SampleSet speakers = relabel_speaker(phones, segments);
    if (config.raw_magnitudes) {
      results[i] = {magnitude_stats(phones.features), magnitude_stats(speakers.features)};
    } else {
      results[i] = {magnitude_stats(present_class_centroids(phones, d.phones().size()).centroids),
                    magnitude_stats(present_class_centroids(speakers, d.speakers().size()).centroids)};
    }
  });

  std::ostringstream csv;
  csv << provenance_line(config) << '\n';
  csv << "model_id,test_set,aggregate_kind,layer,mu_mag,sigma_mag,mag_mean\n";
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& m = units[i].dataset->manifest();
    const char* kinds[] = {"phone", "speaker"};
    for (int k = 0; k < 2; ++k) {
      const auto& s = results[i][static_cast<std::size_t>(k)];
      csv << m.model_id << ',' << m.dataset_id << ',' << kinds[k] << ',' << units[i].layer << ','
          << format_number(s.mu_mag) << ',' << (s.sigma_mag ? format_number(*s.sigma_mag) : std::string()) << ','
          << format_number(s.mag_mean) << '\n';
    }
  }
  return csv.str();
}

namespace {

nlohmann::ordered_json csv_to_json(const fs::path& path, std::string& provenance) {
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> header;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (provenance.empty()) provenance = line.substr(2);
      continue;
    }
    if (header.empty()) {
      header = split(line);
      continue;
    }
    const auto cells = split(line);
    nlohmann::ordered_json row;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const std::string v = c < cells.size() ? cells[c] : std::string();
      double num = 0;
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), num);
      if (v.empty()) {
        row[header[c]] = nullptr;
      } else if (ec == std::errc() && ptr == v.data() + v.size()) {
        row[header[c]] = num;
      } else {
        row[header[c]] = v;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string report_bundle(const fs::path& dir) {
  nlohmann::ordered_json bundle;
  bundle["toolkit_version"] = kToolkitVersion;
  nlohmann::ordered_json tables = nlohmann::ordered_json::object();
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();
  const std::pair<const char*, const char*> files[] = {
      {"probe", kProbeCsv}, {"crv", kCrvCsv}, {"ami", kAmiCsv}, {"magnitudes", kMagnitudeCsv}};
  for (const auto& [name, file] : files) {
    const fs::path p = dir / file;
    if (!fs::exists(p)) continue;
    std::string prov;
    tables[name] = csv_to_json(p, prov);
    provenance[name] = prov;
  }
  if (tables.empty()) throw Error("no result tables found in " + dir.string());
  bundle["provenance"] = provenance;
  bundle["tables"] = tables;
  return bundle.dump(2) + "\n";
}

}  // namespace sslprobe
