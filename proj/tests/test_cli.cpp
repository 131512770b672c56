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

#include <doctest.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sslprobe/aggregation.hpp"
#include "sslprobe/cli.hpp"
#include "sslprobe/geometry.hpp"
#include "sslprobe/infostats.hpp"
#include "sslprobe/pipeline.hpp"
#include "sslprobe/synthgen.hpp"
#include "test_util.hpp"

using namespace sslprobe;
namespace fs = std::filesystem;

namespace {

struct StreamCapture {
  explicit StreamCapture(std::ostream& s) : stream(s), old(s.rdbuf(buffer.rdbuf())) {}
  ~StreamCapture() { stream.rdbuf(old); }
  std::string text() const { return buffer.str(); }

  std::ostream& stream;
  std::ostringstream buffer;
  std::streambuf* old;
};

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "sslprobe");
  StreamCapture err(std::cerr);
  return cli::run(args);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Data rows of a CSV produced by the CLI (provenance and header dropped).
std::vector<std::vector<std::string>> csv_rows(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  const auto lines = lines_of(testutil::read_bytes(path));
  for (std::size_t i = 2; i < lines.size(); ++i) {
    std::vector<std::string> cells;
    std::stringstream ss(lines[i]);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (!lines[i].empty() && lines[i].back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::string synth(const fs::path& out, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"synth", "--out", out.string(), "--dim", "16", "--layer-count", "2"};
  args.insert(args.end(), extra.begin(), extra.end());
  REQUIRE(run(args) == 0);
  return out.string();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("layer lists") {
    CHECK(cli::parse_layer_list("0-3,7") == std::vector<int>{0, 1, 2, 3, 7});
    CHECK(cli::parse_layer_list("2..4") == std::vector<int>{2, 3, 4});
    CHECK(cli::parse_layer_list("5") == std::vector<int>{5});
    CHECK_THROWS(cli::parse_layer_list("3-1"));
    CHECK_THROWS(cli::parse_layer_list("a"));
  }

  TEST_CASE("validate: clean dataset exits 0 and prints nothing") {
    testutil::TempDir tmp;
    const auto ds = synth(tmp / "d");
    StreamCapture out(std::cout);
    CHECK(run({"validate", ds}) == cli::kExitOk);
    CHECK(out.text().empty());
  }

  TEST_CASE("validate: one corrupted magic gives one finding and exit 1") {
    testutil::TempDir tmp;
    const auto ds = synth(tmp / "d");
    const Dataset d = load_dataset(fs::path(ds) / "manifest.json");
    const std::string utt = d.manifest().utterances[1].utterance_id;
    const fs::path file = fs::path(ds) / matrix_file_name(utt, 1);
    auto b = testutil::read_bytes(file);
    b[0] = 'Z';
    testutil::write_bytes(file, b);
    StreamCapture out(std::cout);
    CHECK(run({"validate", ds}) == cli::kExitFindings);
    const auto lines = lines_of(out.text());
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].rfind(ds + ": utterance " + utt + " layer 1: ", 0) == 0);
  }

  TEST_CASE("validate: three corruptions give three lines in a stable order") {
    testutil::TempDir tmp;
    const auto ds = testutil::write_small_dataset(tmp / "d");
    auto segs = ds.segments;
    segs[2].speaker = 5;
    save_segments(segs, ds.root / "segments.tsv");
    fs::remove(ds.root / "u1.layer0.sslm");
    write_matrix_file(FrameMatrix::Zero(8, 3), ds.root / "u2.layer1.sslm");
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      StreamCapture out(std::cout);
      CHECK(run({"validate", "--dataset", ds.root.string()}) == cli::kExitFindings);
      const auto lines = lines_of(out.text());
      REQUIRE(lines.size() == 3);
      CHECK(lines[0].find("utterance u1 layer 0: missing matrix file") != std::string::npos);
      CHECK(lines[1].find("utterance u2 layer 1: column count 3 != dim 4") != std::string::npos);
      CHECK(lines[2].find("segment 2 (u0 4..6): unresolved speaker id 5") != std::string::npos);
      if (rep == 0) first = out.text();
      else CHECK(out.text() == first);
    }
  }

  TEST_CASE("usage and runtime errors map to exit codes") {
    testutil::TempDir tmp;
    const auto ds = synth(tmp / "d");
    CHECK(run({}) == cli::kExitUsage);
    CHECK(run({"probe", "--bogus"}) == cli::kExitUsage);
    CHECK(run({"probe", "--out", (tmp / "o").string()}) == cli::kExitUsage);  // no dataset
    CHECK(run({"geometry", "--dataset", ds, "--pairs", "phone:vowel", "--out", (tmp / "o").string()}) ==
          cli::kExitUsage);
    CHECK(run({"synth", "--dependence", "sometimes", "--out", (tmp / "s").string()}) == cli::kExitUsage);
    testutil::write_bytes(tmp / "bad.cfg", "colour = blue\n");
    CHECK(run({"probe", "--config", (tmp / "bad.cfg").string(), "--dataset", ds}) == cli::kExitUsage);
    CHECK(run({"validate"}) == cli::kExitUsage);

    CHECK(run({"magnitudes", "--dataset", (tmp / "missing").string(), "--out", (tmp / "o").string()}) ==
          cli::kExitRuntime);
    CHECK(run({"synth", "--dim", "4", "--out", (tmp / "s").string()}) == cli::kExitRuntime);

    // A layer absent from a dataset is a skipped unit, not an error.
    testutil::WarningCapture cap;
    CHECK(run({"probe", "--dataset", ds, "--layers", "9", "--out", (tmp / "o").string()}) == cli::kExitOk);
    CHECK(csv_rows(tmp / "o" / kProbeCsv).empty());
    CHECK(cap.messages.size() == 3);
  }

  TEST_CASE("reruns are byte-identical for every table") {
    testutil::TempDir tmp;
    const auto ds = synth(tmp / "d", {"--noise", "0.3", "--repeats", "4"});
    const std::vector<std::string> common{"--dataset", ds, "--seed", "7"};
    const std::vector<std::vector<std::string>> commands{
        {"probe", "--train-size", "300", "--test-size", "100", "--epochs", "2"},
        {"geometry"},
        {"ami"},
        {"magnitudes"}};
    const char* files[] = {kProbeCsv, kCrvCsv, kAmiCsv, kMagnitudeCsv};
    for (std::size_t c = 0; c < commands.size(); ++c) {
      for (const char* dir : {"r1", "r2"}) {
        auto args = commands[c];
        args.insert(args.end(), common.begin(), common.end());
        args.insert(args.end(), {"--out", (tmp / dir).string()});
        CHECK(run(args) == 0);
      }
      const auto a = testutil::read_bytes(tmp / "r1" / files[c]);
      CHECK(a.rfind("# sslprobe 0.1.0 config_hash=", 0) == 0);
      CHECK(a.find("seed=7\n") != std::string::npos);
      CHECK(a == testutil::read_bytes(tmp / "r2" / files[c]));
    }
  }

  TEST_CASE("probe rows: two datasets double the rows and use distinct unit seeds") {
    testutil::TempDir tmp;
    const auto a = synth(tmp / "a", {"--repeats", "4", "--dataset-id", "alpha"});
    const auto b = synth(tmp / "b", {"--repeats", "4", "--dataset-id", "beta"});
    const std::vector<std::string> probe{"probe", "--train-size", "200", "--test-size", "100",
                                         "--epochs", "1", "--probe-types", "phone", "--layers", "0"};
    auto one = probe;
    one.insert(one.end(), {"--dataset", a, "--out", (tmp / "o1").string()});
    REQUIRE(run(one) == 0);
    auto two = probe;
    two.insert(two.end(), {"--dataset", a, "--dataset", b, "--out", (tmp / "o2").string()});
    REQUIRE(run(two) == 0);
    const auto r1 = csv_rows(tmp / "o1" / kProbeCsv);
    const auto r2 = csv_rows(tmp / "o2" / kProbeCsv);
    REQUIRE(r1.size() == 1);
    REQUIRE(r2.size() == 2);
    CHECK(r2[0] == r1[0]);
    CHECK(r2[1][1] == "beta");
    CHECK(r2[0][1] == "alpha");
  }

  TEST_CASE("tone units are skipped with a warning on a non-tonal corpus") {
    testutil::TempDir tmp;
    const auto ds = synth(tmp / "d", {"--tones", "0", "--repeats", "6"});
    testutil::WarningCapture cap;
    REQUIRE(run({"probe", "--dataset", ds, "--train-size", "100", "--test-size", "50", "--epochs", "1", "--out",
                 (tmp / "o").string()}) == 0);
    const auto rows = csv_rows(tmp / "o" / kProbeCsv);
    CHECK(rows.size() == 4);  // phone and speaker, two layers
    for (const auto& r : rows) CHECK(r[2] != "tone");
    CHECK(cap.messages.size() == 1);

    REQUIRE(run({"geometry", "--dataset", ds, "--out", (tmp / "o").string()}) == 0);
    CHECK(csv_rows(tmp / "o" / kCrvCsv).size() == 4);
    REQUIRE(run({"ami", "--dataset", ds, "--out", (tmp / "o").string()}) == 0);
    CHECK(csv_rows(tmp / "o" / kAmiCsv).empty());
  }

  TEST_CASE("ami: independent labels near 0, deterministic 4x4 labels at 1") {
    testutil::TempDir tmp;
    const auto ind = synth(tmp / "i", {"--unbalanced", "--repeats", "40", "--language", "xx"});
    REQUIRE(run({"ami", "--dataset", ind, "--out", (tmp / "o").string()}) == 0);
    auto rows = csv_rows(tmp / "o" / kAmiCsv);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0][0] == "xx");
    CHECK(rows[0][1] == "onset");
    CHECK(rows[2][1] == "coda");
    for (const auto& r : rows) CHECK(std::abs(std::stod(r[6])) <= 0.02);

    const auto det = synth(tmp / "t", {"--phones", "4", "--tones", "4", "--dependence", "deterministic"});
    REQUIRE(run({"ami", "--dataset", det, "--out", (tmp / "o").string()}) == 0);
    rows = csv_rows(tmp / "o" / kAmiCsv);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) CHECK(std::abs(std::stod(r[6]) - 1.0) <= 1e-6);
  }

  TEST_CASE("magnitudes: constant embedding and +-v constructions") {
    testutil::TempDir tmp;
    auto ds = testutil::write_small_dataset(tmp / "c", 2, 8, 3, 1);
    Eigen::RowVectorXf v(3);
    v << 1.0f, -2.0f, 2.0f;
    for (const auto& u : ds.manifest.utterances) {
      write_matrix_file(FrameMatrix(v.replicate(8, 1)), ds.root / matrix_file_name(u.utterance_id, 0));
    }
    REQUIRE(run({"magnitudes", "--dataset", ds.root.string(), "--out", (tmp / "o").string()}) == 0);
    for (const auto& r : csv_rows(tmp / "o" / kMagnitudeCsv)) {
      CHECK(std::stod(r[4]) == 3.0);
      CHECK(std::stod(r[5]) == 0.0);
      CHECK(std::stod(r[6]) == doctest::Approx(3.0).epsilon(1e-15));
    }

    // Alternate segments sit at +v and -v.
    ds = testutil::write_small_dataset(tmp / "s", 2, 12, 3, 1);
    for (const auto& u : ds.manifest.utterances) {
      FrameMatrix m(12, 3);
      for (int r = 0; r < 12; ++r) m.row(r) = ((r / 2) % 2 == 0 ? 1.0f : -1.0f) * v;
      write_matrix_file(m, ds.root / matrix_file_name(u.utterance_id, 0));
    }
    REQUIRE(run({"magnitudes", "--raw", "--dataset", ds.root.string(), "--out", (tmp / "o").string()}) == 0);
    for (const auto& r : csv_rows(tmp / "o" / kMagnitudeCsv)) CHECK(std::stod(r[6]) / std::stod(r[4]) <= 0.01);
  }

  TEST_CASE("magnitude rows equal direct module calls bit for bit") {
    testutil::TempDir tmp;
    const auto ds = synth(tmp / "d", {"--noise", "0.5", "--common-offset", "3", "--non-speech-phones", "1"});
    testutil::WarningCapture cap;  // the masked non-speech class has no centroid
    REQUIRE(run({"magnitudes", "--dataset", ds, "--out", (tmp / "o").string()}) == 0);
    const auto rows = csv_rows(tmp / "o" / kMagnitudeCsv);
    REQUIRE(rows.size() == 4);
    const Dataset d = load_dataset(fs::path(ds) / "manifest.json");
    for (int layer = 0; layer < 2; ++layer) {
      const auto segs = mask_segments(d.segments(), filter_rare_labels(d, LabelKind::kPhone));
      const SampleSet phones = pool_segments(d, layer, segs, LabelKind::kPhone);
      const SampleSet speakers = relabel_speaker(phones, segs);
      const MagnitudeStats sp = magnitude_stats(present_class_centroids(phones, d.phones().size()).centroids);
      const MagnitudeStats ss = magnitude_stats(present_class_centroids(speakers, d.speakers().size()).centroids);
      const auto& rp = rows[static_cast<std::size_t>(2 * layer)];
      const auto& rs = rows[static_cast<std::size_t>(2 * layer + 1)];
      CHECK(rp[2] == "phone");
      CHECK(rs[2] == "speaker");
      CHECK(rp[4] == format_number(sp.mu_mag));
      CHECK(rp[5] == format_number(*sp.sigma_mag));
      CHECK(rp[6] == format_number(sp.mag_mean));
      CHECK(rs[4] == format_number(ss.mu_mag));
      CHECK(rs[6] == format_number(ss.mag_mean));
      CHECK(std::stod(rp[4]) == sp.mu_mag);
    }
  }

  TEST_CASE("config file values apply unless overridden on the command line") {
    testutil::TempDir tmp;
    testutil::write_bytes(tmp / "run.cfg", "# synthetic run\ndim = 12\nlayer-count = 1\nphones = 5\nseed = 3\n");
    REQUIRE(run({"synth", "--config", (tmp / "run.cfg").string(), "--phones", "6", "--out", (tmp / "d").string()}) ==
            0);
    const Dataset d = load_dataset(tmp / "d" / "manifest.json");
    CHECK(d.manifest().dim == 12);
    CHECK(d.manifest().layers.size() == 1);
    CHECK(d.phones().size() == 6);

    REQUIRE(run({"synth", "--dim", "12", "--layer-count", "1", "--phones", "6", "--seed", "3", "--out",
                 (tmp / "e").string()}) == 0);
    CHECK(testutil::read_bytes(tmp / "d" / "segments.tsv") == testutil::read_bytes(tmp / "e" / "segments.tsv"));
  }

  TEST_CASE("report joins the tables into one JSON document") {
    testutil::TempDir tmp;
    const auto ds = synth(tmp / "d");
    const auto out = (tmp / "o").string();
    REQUIRE(run({"geometry", "--dataset", ds, "--out", out}) == 0);
    REQUIRE(run({"magnitudes", "--dataset", ds, "--out", out}) == 0);
    REQUIRE(run({"report", "--out", out}) == 0);
    const auto j = nlohmann::json::parse(testutil::read_bytes(tmp / "o" / kReportJson));
    CHECK(j.at("toolkit_version") == "0.1.0");
    CHECK(j.at("tables").at("crv").size() == 12);
    CHECK(j.at("tables").at("magnitudes").size() == 4);
    CHECK_FALSE(j.at("tables").contains("probe"));
    CHECK(j.at("tables").at("crv")[0].at("crv").is_number());
  }
}
