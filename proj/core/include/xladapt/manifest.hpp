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

#ifndef XLADAPT_MANIFEST_HPP_
#define XLADAPT_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace xladapt {

struct Utterance {
  std::string id;
  std::string audio;  // path, relative to the manifest's base_dir if not absolute
  std::vector<std::string> transcript;
  std::string speaker_id;
  std::string language;
  double duration_s = 0.0;
};

// Immutable after load; all read operations are pure.
struct Manifest {
  std::string name;
  std::vector<Utterance> entries;
  std::filesystem::path base_dir;  // directory the manifest file lives in
};

// The four Table-style corpus statistics columns.
struct CorpusStats {
  double total_length_min = 0.0;
  double avg_segment_length_s = 0.0;
  double avg_words_per_segment = 0.0;
  double avg_words_per_second = 0.0;
};

std::filesystem::path resolve_audio(const Manifest& m, const Utterance& u);

// Frame-label sidecar file associated with a wav (extension swapped to .lab).
std::filesystem::path label_path_for(const std::filesystem::path& audio_path);

// One tab-separated record per line: id, audio, duration_s, speaker, language,
// transcript (space-separated tokens; may be empty).
// When validate_audio is set, every referenced wav must exist and its length
// must match the stored duration within 10 ms.
Manifest load_manifest(const std::filesystem::path& path, bool validate_audio = true);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

CorpusStats compute_stats(const Manifest& m);

// Speaker-disjoint split; the test side receives whole speakers until it
// holds at least test_fraction of the utterances (always leaving at least
// one speaker per side). Deterministic given seed.
std::pair<Manifest, Manifest> split_speaker_disjoint(const Manifest& m, double test_fraction,
                                                     uint64_t seed);

std::string format_stats_row(const std::string& name, const Manifest& m);

}  // namespace xladapt

#endif  // XLADAPT_MANIFEST_HPP_
