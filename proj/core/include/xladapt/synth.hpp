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

#ifndef XLADAPT_SYNTH_HPP_
#define XLADAPT_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xladapt/audio.hpp"
#include "xladapt/manifest.hpp"
#include "xladapt/recipe.hpp"

namespace xladapt {

// Acoustic prototype of one phone: 2-3 summed sinusoids with a trapezoid
// amplitude envelope plus low-level noise.
struct PhoneProto {
  std::string symbol;
  std::vector<double> freqs_hz;  // strongest first
  double duration_ms = 90.0;
  double amp = 0.3;
};

struct PhoneInventory {
  std::vector<PhoneProto> phones;  // excludes silence
  std::string silence_symbol = "sil";
  double silence_ms = 80.0;

  const PhoneProto* find(const std::string& symbol) const;
  // Ordered phone set: silence first, then the inventory order.
  std::vector<std::string> symbols() const;
};

// Deterministic inventory; fundamental frequencies are stratified across
// [200, 3600] Hz so prototypes stay separable.
PhoneInventory make_inventory(const std::string& symbol_prefix, int n_phones, int sample_rate,
                              uint64_t seed);

// Inventory for a related language: the first `shared` prototypes reuse the
// base language's acoustics (under new symbols), the rest are fresh.
PhoneInventory derive_inventory(const PhoneInventory& base, const std::string& symbol_prefix,
                                int n_phones, int shared, int sample_rate, uint64_t seed);

struct SynthLanguageSpec {
  PhoneInventory inventory;
  int word_len_min = 2, word_len_max = 4;  // phones per word
  int utt_len_min = 3, utt_len_max = 8;    // words per utterance
  int speaker_count = 4;
  double tilt_min_db_oct = -3.0, tilt_max_db_oct = 3.0;  // per-speaker spectral tilt
  int vocab_size = 40;
  std::string language_tag = "xx";
  int sample_rate = 16000;
  uint64_t seed = 0;  // fixes the lexicon and speaker voices
};

// Acoustic mismatch of the target condition: reverb plus noise at a random
// SNR, and a spectral-tilt offset added to every speaker's voice.
struct DomainShiftSpec {
  std::vector<std::string> rir_ids;  // filter on room_id/position_id; empty = all
  std::optional<SnrRange> snr_range;
  double tilt_offset_db_oct = 0.0;
};

struct Lexicon {
  std::vector<std::pair<std::string, std::vector<std::string>>> entries;
};

Lexicon make_lexicon(const SynthLanguageSpec& spec);
void save_lexicon(const Lexicon& lex, const std::filesystem::path& path);
Lexicon load_lexicon(const std::filesystem::path& path);

void save_phone_set(const std::vector<std::string>& phones, const std::filesystem::path& path);
std::vector<std::string> load_phone_set(const std::filesystem::path& path);

// One phone occurrence; bit-identical for identical (phone, tilt, seed).
AudioSignal render_phone(const PhoneInventory& inv, const std::string& phone,
                         double speaker_tilt_db_oct, uint64_t seed, int sample_rate = 16000);

struct GeneratedCorpus {
  std::filesystem::path manifest_path;
  std::filesystem::path lexicon_path;
  std::filesystem::path phones_path;
};

// Renders utterances until the corpus reaches `hours` (within 5%), writing
// wav + frame-label sidecars + manifest + lexicon + phone set under out_dir.
// Utterances are independently seeded by (seed, index) so generation is
// order- and schedule-independent. When `shift` is given, reverb/noise from
// the pools and the tilt offset are applied per utterance.
GeneratedCorpus generate_corpus(const SynthLanguageSpec& spec, const std::string& corpus_name,
                                double hours, const DomainShiftSpec* shift, const RirPool* rirs,
                                const NoisePool* noises, const std::filesystem::path& out_dir,
                                uint64_t seed, int jobs = 1);

}  // namespace xladapt

#endif  // XLADAPT_SYNTH_HPP_
