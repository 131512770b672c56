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

#include "sslprobe/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "sslprobe/dataset.hpp"
#include "sslprobe/pipeline.hpp"
#include "sslprobe/random.hpp"
#include "sslprobe/synthgen.hpp"

namespace sslprobe::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int to_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw UsageError("not an integer: '" + s + "'");
  }
  if (used != s.size()) throw UsageError("not an integer: '" + s + "'");
  return v;
}

std::vector<LabelKind> parse_kinds(const std::string& text) {
  std::vector<LabelKind> out;
  for (const auto& item : split(text, ',')) {
    auto k = parse_label_kind(item);
    if (!k) throw UsageError("unknown label kind '" + item + "'");
    out.push_back(*k);
  }
  return out;
}

std::vector<KindPair> parse_pairs(const std::string& text) {
  if (text.empty() || text == "all") return all_directed_pairs();
  std::vector<KindPair> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw UsageError("pair must look like x:y, got '" + item + "'");
    auto x = parse_label_kind(parts[0]);
    auto y = parse_label_kind(parts[1]);
    if (!x || !y || *x == *y) throw UsageError("bad pair '" + item + "'");
    out.emplace_back(*x, *y);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
  }
  return out;
}

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out = ".";

  std::vector<std::string> datasets;
  std::string probe_types = "phone,tone,speaker";
  std::string layers;
  std::string pairs = "all";
  RunConfig run;

  PlantedConfig synth;
  std::string snr;
  std::string dependence = "independent";
};

// Flat "key = value" lines; '#' starts a comment. Keys are long option names.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

std::string canonical_options(const CLI::App& app, const CLI::App& sub) {
  std::map<std::string, std::string> kv;
  auto collect = [&](const CLI::App& a) {
    for (const CLI::Option* opt : a.get_options()) {
      const std::string name = opt->get_single_name();
      if (name == "help" || name == "config" || name == "workers" || name == "out") continue;
      std::string value;
      if (opt->count() > 0) {
        for (const auto& r : opt->results()) value += r + ";";
      } else {
        value = opt->get_default_str();
      }
      kv[name] = value;
    }
  };
  collect(app);
  collect(sub);
  std::string out = sub.get_name();
  for (const auto& [k, v] : kv) out += "\n" + k + "=" + v;
  return out;
}

void add_dataset_option(CLI::App* sub, Options& o) {
  sub->add_option("--dataset", o.datasets, "Dataset directory or manifest.json (repeatable)");
}

void add_layer_option(CLI::App* sub, Options& o) {
  sub->add_option("--layers", o.layers, "Layer list, e.g. 0-12 or 3,6,9 (default: all)");
}

RunConfig finish_run_config(Options& o, std::uint64_t hash) {
  RunConfig c = o.run;
  for (const auto& d : o.datasets) c.datasets.emplace_back(d);
  c.probe_types = parse_kinds(o.probe_types);
  c.layers = o.layers.empty() ? std::vector<int>{} : parse_layer_list(o.layers);
  c.pairs = parse_pairs(o.pairs);
  c.seed = o.seed;
  c.workers = o.workers;
  c.config_hash = hash;
  if (c.datasets.empty()) throw UsageError("at least one --dataset is required");
  return c;
}

}  // namespace

std::vector<int> parse_layer_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) {
    auto dash = item.find("..");
    std::size_t sep_len = 2;
    if (dash == std::string::npos) {
      dash = item.find('-', 1);
      sep_len = 1;
    }
    if (dash == std::string::npos) {
      out.push_back(to_int(item));
      continue;
    }
    const int lo = to_int(item.substr(0, dash));
    const int hi = to_int(item.substr(dash + sep_len));
    if (hi < lo) throw UsageError("empty layer range '" + item + "'");
    for (int l = lo; l <= hi; ++l) out.push_back(l);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int run(const std::vector<std::string>& raw_args) {
  Options o;
  CLI::App app{"Layerwise probing, subspace-orthogonality and label-statistics toolkit for speech representations",
               "sslprobe"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--config", o.config_path, "Flat key = value file mirroring any long option");
  app.add_option("--seed", o.seed, "Base seed")->capture_default_str();
  app.add_option("--workers", o.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Output directory")->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Check dataset containers; exit 1 on findings");
  validate->add_option("dataset_paths", o.datasets, "Dataset directories or manifests");
  add_dataset_option(validate, o);

  auto* synth = app.add_subcommand("synth", "Generate a planted synthetic dataset into --out");
  auto& s = o.synth;
  synth->add_option("--dataset-id", s.dataset_id)->capture_default_str();
  synth->add_option("--model-id", s.model_id)->capture_default_str();
  synth->add_option("--language", s.language);
  synth->add_option("--dim", s.dim)->capture_default_str();
  synth->add_option("--layer-count", s.layer_count)->capture_default_str();
  synth->add_option("--phones", s.n_phones)->capture_default_str();
  synth->add_option("--tones", s.n_tones, "0 for a non-tonal corpus")->capture_default_str();
  synth->add_option("--speakers", s.n_speakers)->capture_default_str();
  synth->add_option("--rank-phone", s.rank_phone)->capture_default_str();
  synth->add_option("--rank-tone", s.rank_tone)->capture_default_str();
  synth->add_option("--rank-speaker", s.rank_speaker)->capture_default_str();
  synth->add_option("--overlap-phone-tone", s.overlap_phone_tone)->capture_default_str();
  synth->add_option("--overlap-phone-speaker", s.overlap_phone_speaker)->capture_default_str();
  synth->add_option("--overlap-tone-speaker", s.overlap_tone_speaker)->capture_default_str();
  synth->add_option("--dependence", o.dependence, "independent | target-mi | deterministic")->capture_default_str();
  synth->add_option("--target-mi", s.target_mi)->capture_default_str();
  synth->add_flag("--unbalanced{false},--balanced{true}", s.balanced, "Enumerate label cells (independent only)");
  synth->add_option("--snr", o.snr, "Comma-separated per-layer multipliers");
  synth->add_option("--offset-scale", s.offset_scale)->capture_default_str();
  synth->add_option("--speaker-scale", s.speaker_scale)->capture_default_str();
  synth->add_option("--noise", s.noise_sigma)->capture_default_str();
  synth->add_option("--common-offset", s.common_offset)->capture_default_str();
  synth->add_option("--repeats", s.repeats_per_cell)->capture_default_str();
  synth->add_option("--frames-per-segment", s.frames_per_segment)->capture_default_str();
  synth->add_option("--segments-per-utterance", s.segments_per_utterance)->capture_default_str();
  synth->add_option("--rare-phones", s.rare_phones)->capture_default_str();
  synth->add_option("--non-speech-phones", s.non_speech_phones)->capture_default_str();

  auto* probe = app.add_subcommand("probe", "Layerwise linear probe accuracy table");
  add_dataset_option(probe, o);
  add_layer_option(probe, o);
  auto& sw = o.run.sweep;
  probe->add_option("--probe-types", o.probe_types)->capture_default_str();
  probe->add_option("--train-size", sw.sampling.train_size)->capture_default_str();
  probe->add_option("--test-size", sw.sampling.test_size)->capture_default_str();
  probe->add_flag("--replacement", sw.sampling.replacement, "Sample with replacement");
  probe->add_flag("--speaker-disjoint", sw.sampling.speaker_disjoint, "Keep train and test speakers apart");
  probe->add_option("--epochs", sw.probe.epochs)->capture_default_str();
  probe->add_option("--learning-rate", sw.probe.learning_rate)->capture_default_str();
  probe->add_option("--batch-size", sw.probe.batch_size)->capture_default_str();

  auto* geometry = app.add_subcommand("geometry", "Layerwise CRV table for directed label-kind pairs");
  add_dataset_option(geometry, o);
  add_layer_option(geometry, o);
  geometry->add_option("--pairs", o.pairs, "all, or e.g. phone:speaker,tone:phone")->capture_default_str();
  geometry->add_option("--k-phone", o.run.geometry.k_phone)->capture_default_str();
  geometry->add_option("--k-speaker", o.run.geometry.k_speaker)->capture_default_str();
  geometry->add_option("--k-tone", o.run.geometry.k_tone)->capture_default_str();

  auto* ami = app.add_subcommand("ami", "Tone/phone adjusted mutual information per syllable role");
  add_dataset_option(ami, o);

  auto* magnitudes = app.add_subcommand("magnitudes", "Representation magnitude statistics per layer");
  add_dataset_option(magnitudes, o);
  add_layer_option(magnitudes, o);
  magnitudes->add_flag("--raw", o.run.raw_magnitudes, "Use pooled samples instead of class aggregates");

  app.add_subcommand("report", "Join the tables in --out into report.json");

  // Expand the config file into option tokens placed after the subcommand;
  // anything given on the command line wins.
  std::vector<std::string> args(raw_args.begin() + (raw_args.empty() ? 0 : 1), raw_args.end());
  try {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (!config_path.empty()) {
      auto sub_pos = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
        return app.get_subcommand_no_throw(a) != nullptr;
      });
      CLI::App* chosen = sub_pos == args.end() ? nullptr : app.get_subcommand_no_throw(*sub_pos);
      std::vector<std::string> injected;
      for (const auto& [key, value] : read_config_file(config_path)) {
        const std::string flag = "--" + key;
        bool known = app.get_option_no_throw(flag) != nullptr;
        for (const CLI::App* sub : app.get_subcommands({})) known = known || sub->get_option_no_throw(flag);
        if (!known) throw UsageError("unknown config key '" + key + "'");
        if (key == "config" || given_on_command_line(args, key)) continue;
        const bool applies = app.get_option_no_throw(flag) || (chosen && chosen->get_option_no_throw(flag));
        if (applies) injected.push_back(flag + "=" + value);
      }
      if (sub_pos != args.end()) {
        args.insert(sub_pos + 1, injected.begin(), injected.end());
      } else {
        args.insert(args.begin(), injected.begin(), injected.end());
      }
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::uint64_t hash = hash_string(canonical_options(app, *sub));
  const fs::path out_dir = o.out;

  try {
    const std::string name = sub->get_name();
    if (name == "validate") {
      if (o.datasets.empty()) throw UsageError("no datasets to validate");
      bool any = false;
      for (const auto& d : o.datasets) {
        for (const auto& f : validate_dataset(manifest_path(d))) {
          std::cout << d << ": " << f.str() << '\n';
          any = true;
        }
      }
      return any ? kExitFindings : kExitOk;
    }
    if (name == "synth") {
      if (!o.snr.empty()) s.snr_profile = parse_doubles(o.snr);
      if (o.dependence == "independent") {
        s.dependence = LabelDependence::kIndependent;
      } else if (o.dependence == "target-mi") {
        s.dependence = LabelDependence::kTargetMi;
      } else if (o.dependence == "deterministic") {
        s.dependence = LabelDependence::kDeterministic;
      } else {
        throw UsageError("unknown dependence '" + o.dependence + "'");
      }
      s.seed = o.seed;
      generate_planted(s, out_dir, o.workers);
      return kExitOk;
    }
    if (name == "report") {
      write_text_file(out_dir / kReportJson, report_bundle(out_dir));
      return kExitOk;
    }
    const RunConfig config = finish_run_config(o, hash);
    if (name == "probe") write_text_file(out_dir / kProbeCsv, probe_table(config));
    if (name == "geometry") write_text_file(out_dir / kCrvCsv, crv_table(config));
    if (name == "ami") write_text_file(out_dir / kAmiCsv, ami_table(config));
    if (name == "magnitudes") write_text_file(out_dir / kMagnitudeCsv, magnitude_table(config));
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace sslprobe::cli
