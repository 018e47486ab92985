// Copyright 2026 The xladapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xladapt/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xladapt/audio.hpp"
#include "xladapt/rng.hpp"

namespace xladapt {

namespace {

std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

}  // namespace

std::filesystem::path resolve_audio(const Manifest& m, const Utterance& u) {
  std::filesystem::path p(u.audio);
  if (p.is_absolute()) return p;
  return m.base_dir / p;
}

std::filesystem::path label_path_for(const std::filesystem::path& audio_path) {
  std::filesystem::path p = audio_path;
  p.replace_extension(".lab");
  return p;
}

Manifest load_manifest(const std::filesystem::path& path, bool validate_audio) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: missing file: " + path.string());
  Manifest m;
  m.name = path.stem().string();
  m.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 6) {
      throw std::runtime_error("manifest: malformed record at line " + std::to_string(lineno) +
                               " in " + path.string() + " (expected 6 tab-separated fields)");
    }
    Utterance u;
    u.id = fields[0];
    u.audio = fields[1];
    try {
      size_t pos = 0;
      u.duration_s = std::stod(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument("trailing chars");
    } catch (const std::exception&) {
      throw std::runtime_error("manifest: bad duration at line " + std::to_string(lineno) +
                               " in " + path.string());
    }
    u.speaker_id = fields[3];
    u.language = fields[4];
    u.transcript = split_tokens(fields[5]);
    if (u.id.empty()) {
      throw std::runtime_error("manifest: empty id at line " + std::to_string(lineno));
    }
    if (u.duration_s <= 0.0) {
      throw std::runtime_error("manifest: non-positive duration at line " +
                               std::to_string(lineno) + " in " + path.string());
    }
    if (!seen.insert(u.id).second) {
      throw std::runtime_error("manifest: duplicate id '" + u.id + "' at line " +
                               std::to_string(lineno) + " in " + path.string());
    }
    m.entries.push_back(std::move(u));
  }
  if (m.entries.empty()) throw std::runtime_error("manifest: empty manifest: " + path.string());

  if (validate_audio) {
    for (const auto& u : m.entries) {
      auto p = resolve_audio(m, u);
      auto [n, sr] = read_wav_info(p);
      double audio_dur = static_cast<double>(n) / sr;
      if (std::abs(audio_dur - u.duration_s) > 0.010) {
        throw std::runtime_error("manifest: duration mismatch for '" + u.id + "': stored " +
                                 std::to_string(u.duration_s) + " s vs audio " +
                                 std::to_string(audio_dur) + " s");
      }
    }
  }
  return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("manifest: cannot write: " + path.string());
  out.setf(std::ios::fixed);
  for (const auto& u : m.entries) {
    char dur[32];
    std::snprintf(dur, sizeof(dur), "%.6f", u.duration_s);
    out << u.id << '\t' << u.audio << '\t' << dur << '\t' << u.speaker_id << '\t' << u.language
        << '\t';
    for (size_t i = 0; i < u.transcript.size(); ++i) {
      if (i) out << ' ';
      out << u.transcript[i];
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("manifest: write failed: " + path.string());
}

CorpusStats compute_stats(const Manifest& m) {
  if (m.entries.empty()) throw std::invalid_argument("compute_stats: empty manifest");
  double total_s = 0.0;
  double total_words = 0.0;
  for (const auto& u : m.entries) {
    total_s += u.duration_s;
    total_words += static_cast<double>(u.transcript.size());
  }
  const double n = static_cast<double>(m.entries.size());
  CorpusStats s;
  s.total_length_min = total_s / 60.0;
  s.avg_segment_length_s = total_s / n;
  s.avg_words_per_segment = total_words / n;
  s.avg_words_per_second = total_words / total_s;
  return s;
}

std::pair<Manifest, Manifest> split_speaker_disjoint(const Manifest& m, double test_fraction,
                                                     uint64_t seed) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0) {
    throw std::invalid_argument("split: test_fraction must be in (0, 1)");
  }
  std::map<std::string, size_t> per_speaker;  // ordered for determinism
  for (const auto& u : m.entries) per_speaker[u.speaker_id]++;
  if (per_speaker.size() < 2) {
    throw std::invalid_argument("split: need at least 2 distinct speakers");
  }
  std::vector<std::string> speakers;
  for (const auto& [spk, cnt] : per_speaker) speakers.push_back(spk);
  Rng rng(mix_seed(seed, "split_speaker_disjoint"));
  rng.shuffle(speakers);

  const size_t target = static_cast<size_t>(
      std::ceil(test_fraction * static_cast<double>(m.entries.size())));
  std::set<std::string> test_speakers;
  size_t test_count = 0;
  for (const auto& spk : speakers) {
    if (test_count >= target) break;
    if (test_speakers.size() + 1 >= speakers.size()) break;  // keep one for train
    test_speakers.insert(spk);
    test_count += per_speaker[spk];
  }
  if (test_speakers.empty()) {
    test_speakers.insert(speakers.front());
  }

  Manifest train, test;
  train.name = m.name + "-train";
  test.name = m.name + "-test";
  train.base_dir = test.base_dir = m.base_dir;
  for (const auto& u : m.entries) {
    (test_speakers.count(u.speaker_id) ? test : train).entries.push_back(u);
  }
  return {std::move(train), std::move(test)};
}

std::string format_stats_row(const std::string& name, const Manifest& m) {
  CorpusStats s = compute_stats(m);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s | %.0f | %.1f s | %.1f | %.1f", name.c_str(),
                s.total_length_min, s.avg_segment_length_s, s.avg_words_per_segment,
                s.avg_words_per_second);
  return buf;
}

}  // namespace xladapt
