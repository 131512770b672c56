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

#include "sslprobe/common.hpp"

#include <iostream>
#include <mutex>

namespace sslprobe {

namespace {
std::mutex g_warn_mutex;
WarningSink g_sink;
}  // namespace

std::string_view to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::kPhone: return "phone";
    case LabelKind::kTone: return "tone";
    case LabelKind::kSpeaker: return "speaker";
  }
  return "?";
}

std::string_view to_string(SyllableRole role) {
  switch (role) {
    case SyllableRole::kOnset: return "onset";
    case SyllableRole::kNucleus: return "nucleus";
    case SyllableRole::kCoda: return "coda";
    case SyllableRole::kNone: return "none";
  }
  return "?";
}

std::optional<LabelKind> parse_label_kind(std::string_view s) {
  if (s == "phone") return LabelKind::kPhone;
  if (s == "tone") return LabelKind::kTone;
  if (s == "speaker") return LabelKind::kSpeaker;
  return std::nullopt;
}

std::optional<SyllableRole> parse_syllable_role(std::string_view s) {
  if (s == "onset") return SyllableRole::kOnset;
  if (s == "nucleus") return SyllableRole::kNucleus;
  if (s == "coda") return SyllableRole::kCoda;
  if (s == "none") return SyllableRole::kNone;
  return std::nullopt;
}

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(g_warn_mutex);
  std::swap(g_sink, sink);
  return sink;
}

void warn(std::string_view message) {
  std::lock_guard lock(g_warn_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

}  // namespace sslprobe
