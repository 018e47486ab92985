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

#include "xladapt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xladapt/labels.hpp"
#include "xladapt/rng.hpp"
#include "xladapt/util.hpp"

namespace xladapt {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kPhoneNoiseAmp = 0.002;
constexpr double kSilenceNoiseAmp = 0.0005;
constexpr double kEnvelopeMs = 10.0;  // attack/release ramp

double tilt_gain(double tilt_db_oct, double freq_hz) {
  return std::pow(10.0, tilt_db_oct * std::log2(freq_hz / 1000.0) / 20.0);
}

std::string speaker_name(const std::string& corpus_name, int k) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-spk%02d", corpus_name.c_str(), k);
  return buf;
}

double speaker_tilt(const SynthLanguageSpec& spec, int k) {
  Rng rng(mix_seed(spec.seed, "speaker-tilt", static_cast<uint64_t>(k)));
  return rng.uniform(spec.tilt_min_db_oct, spec.tilt_max_db_oct);
}

}  // namespace

const PhoneProto* PhoneInventory::find(const std::string& symbol) const {
  for (const auto& p : phones) {
    if (p.symbol == symbol) return &p;
  }
  return nullptr;
}

std::vector<std::string> PhoneInventory::symbols() const {
  std::vector<std::string> out{silence_symbol};
  for (const auto& p : phones) out.push_back(p.symbol);
  return out;
}

PhoneInventory make_inventory(const std::string& symbol_prefix, int n_phones, int sample_rate,
                              uint64_t seed) {
  if (n_phones < 2) throw std::invalid_argument("inventory: need at least 2 phones");
  const double nyquist = sample_rate / 2.0;
  const double lo = 200.0, hi = std::min(3600.0, nyquist * 0.9);
  PhoneInventory inv;
  for (int k = 0; k < n_phones; ++k) {
    Rng rng(mix_seed(seed, "phone-proto", static_cast<uint64_t>(k)));
    PhoneProto p;
    char sym[32];
    std::snprintf(sym, sizeof(sym), "%s%02d", symbol_prefix.c_str(), k);
    p.symbol = sym;
    // Stratified fundamental keeps phones separable.
    double band = (hi - lo) / n_phones;
    double f0 = lo + band * (k + rng.uniform(0.15, 0.85));
    p.freqs_hz.push_back(f0);
    int extras = static_cast<int>(rng.uniform_int(1, 2));
    for (int e = 0; e < extras; ++e) {
      p.freqs_hz.push_back(rng.uniform(lo, hi));
    }
    p.duration_ms = rng.uniform(60.0, 120.0);
    p.amp = 0.3;
    inv.phones.push_back(std::move(p));
  }
  return inv;
}

PhoneInventory derive_inventory(const PhoneInventory& base, const std::string& symbol_prefix,
                                int n_phones, int shared, int sample_rate, uint64_t seed) {
  if (shared > n_phones || shared > static_cast<int>(base.phones.size())) {
    throw std::invalid_argument("inventory: shared count exceeds inventory sizes");
  }
  PhoneInventory fresh =
      make_inventory(symbol_prefix, n_phones, sample_rate, mix_seed(seed, "derived"));
  for (int k = 0; k < shared; ++k) {
    std::string sym = fresh.phones[k].symbol;
    fresh.phones[k] = base.phones[k];
    fresh.phones[k].symbol = sym;
  }
  return fresh;
}

AudioSignal render_phone(const PhoneInventory& inv, const std::string& phone,
                         double speaker_tilt_db_oct, uint64_t seed, int sample_rate) {
  const int sr = sample_rate;
  Rng rng(seed);
  bool silence = (phone == inv.silence_symbol);
  const PhoneProto* proto = nullptr;
  double dur_ms = inv.silence_ms;
  if (!silence) {
    proto = inv.find(phone);
    if (proto == nullptr) throw std::invalid_argument("render_phone: unknown phone '" + phone + "'");
    dur_ms = proto->duration_ms * rng.uniform(0.85, 1.15);
  } else {
    dur_ms = inv.silence_ms * rng.uniform(0.85, 1.15);
  }
  size_t len = static_cast<size_t>(dur_ms * sr / 1000.0);
  AudioSignal x;
  x.sample_rate = sr;
  x.samples.assign(len, 0.0);

  if (!silence) {
    static const double kRelAmp[3] = {1.0, 0.5, 0.3};
    for (size_t s = 0; s < proto->freqs_hz.size() && s < 3; ++s) {
      double f = proto->freqs_hz[s];
      double a = kRelAmp[s] * tilt_gain(speaker_tilt_db_oct, f);
      double phase = rng.uniform(0.0, 2.0 * kPi);
      for (size_t n = 0; n < len; ++n) {
        x.samples[n] += a * std::sin(2.0 * kPi * f * static_cast<double>(n) / sr + phase);
      }
    }
    // Trapezoid envelope.
    size_t ramp = std::min(len / 2, static_cast<size_t>(kEnvelopeMs * sr / 1000.0));
    for (size_t n = 0; n < ramp; ++n) {
      double g = static_cast<double>(n + 1) / static_cast<double>(ramp);
      x.samples[n] *= g;
      x.samples[len - 1 - n] *= g;
    }
    double peak = peak_abs(x);
    if (peak > 0.0) {
      for (double& v : x.samples) v *= proto->amp / peak;
    }
  }
  double namp = silence ? kSilenceNoiseAmp : kPhoneNoiseAmp;
  for (double& v : x.samples) v += namp * rng.normal();
  return x;
}

Lexicon make_lexicon(const SynthLanguageSpec& spec) {
  if (spec.word_len_min < 1 || spec.word_len_max < spec.word_len_min) {
    throw std::invalid_argument("lexicon: bad word length range");
  }
  Rng rng(mix_seed(spec.seed, "lexicon"));
  Lexicon lex;
  std::set<std::vector<std::string>> seen;
  int attempts = 0;
  while (static_cast<int>(lex.entries.size()) < spec.vocab_size) {
    if (++attempts > spec.vocab_size * 1000) {
      throw std::runtime_error("lexicon: cannot build distinct vocabulary with given ranges");
    }
    int len = static_cast<int>(rng.uniform_int(spec.word_len_min, spec.word_len_max));
    std::vector<std::string> phones;
    for (int i = 0; i < len; ++i) {
      size_t p = static_cast<size_t>(
          rng.uniform_int(0, static_cast<int64_t>(spec.inventory.phones.size()) - 1));
      phones.push_back(spec.inventory.phones[p].symbol);
    }
    if (!seen.insert(phones).second) continue;
    char word[32];
    std::snprintf(word, sizeof(word), "w%03d", static_cast<int>(lex.entries.size()));
    lex.entries.emplace_back(word, std::move(phones));
  }
  return lex;
}

void save_lexicon(const Lexicon& lex, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("lexicon: cannot write: " + path.string());
  for (const auto& [word, phones] : lex.entries) {
    out << word;
    for (const auto& p : phones) out << ' ' << p;
    out << '\n';
  }
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("lexicon: cannot open: " + path.string());
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string word, phone;
    iss >> word;
    std::vector<std::string> phones;
    while (iss >> phone) phones.push_back(phone);
    if (word.empty() || phones.empty()) {
      throw std::runtime_error("lexicon: malformed line in " + path.string());
    }
    lex.entries.emplace_back(std::move(word), std::move(phones));
  }
  return lex;
}

void save_phone_set(const std::vector<std::string>& phones, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("phones: cannot write: " + path.string());
  for (const auto& p : phones) out << p << '\n';
}

std::vector<std::string> load_phone_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("phones: cannot open: " + path.string());
  std::vector<std::string> phones;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) phones.push_back(line);
  }
  if (phones.empty()) throw std::runtime_error("phones: empty phone set: " + path.string());
  return phones;
}

namespace {

struct RenderedUtterance {
  AudioSignal audio;
  std::vector<std::string> words;
  std::vector<std::string> frame_labels;
  int speaker = 0;
  double realized_snr_db = 0.0;
};

RenderedUtterance render_utterance(const SynthLanguageSpec& spec, const Lexicon& lex,
                                   int n_words, const DomainShiftSpec* shift,
                                   const RirPool* rirs, const NoisePool* noises,
                                   uint64_t utt_key) {
  Rng rng(utt_key);
  RenderedUtterance out;
  out.speaker = static_cast<int>(rng.uniform_int(0, spec.speaker_count - 1));
  double tilt = speaker_tilt(spec, out.speaker);
  if (shift != nullptr) tilt += shift->tilt_offset_db_oct;

  // sil word sil word ... sil, with exact boundaries recorded.
  std::vector<std::pair<size_t, std::string>> boundaries;  // (start sample, phone)
  AudioSignal audio;
  audio.sample_rate = spec.sample_rate;
  auto append_phone = [&](const std::string& phone) {
    AudioSignal seg = render_phone(spec.inventory, phone, tilt, rng.next_u64(), spec.sample_rate);
    boundaries.emplace_back(audio.samples.size(), phone);
    audio.samples.insert(audio.samples.end(), seg.samples.begin(), seg.samples.end());
  };

  append_phone(spec.inventory.silence_symbol);
  for (int w = 0; w < n_words; ++w) {
    size_t wi = static_cast<size_t>(
        rng.uniform_int(0, static_cast<int64_t>(lex.entries.size()) - 1));
    out.words.push_back(lex.entries[wi].first);
    for (const auto& phone : lex.entries[wi].second) append_phone(phone);
    append_phone(spec.inventory.silence_symbol);
  }

  // Frame labels from the synthesis boundaries.
  long frames = frame_count(audio.samples.size(), audio.sample_rate, kLabelFrameLengthMs,
                            kLabelFrameShiftMs);
  double window = kLabelFrameLengthMs * audio.sample_rate / 1000.0;
  double shift_samples = kLabelFrameShiftMs * audio.sample_rate / 1000.0;
  size_t b = 0;
  for (long t = 0; t < frames; ++t) {
    double center = t * shift_samples + window / 2.0;
    while (b + 1 < boundaries.size() && static_cast<double>(boundaries[b + 1].first) <= center) {
      ++b;
    }
    out.frame_labels.push_back(boundaries[b].second);
  }

  if (shift != nullptr) {
    if (shift->snr_range.has_value()) {
      if (rirs == nullptr || noises == nullptr) {
        throw std::invalid_argument("generate_corpus: domain shift needs RIR and noise pools");
      }
      // Same drawing scheme as augmentation recipes.
      std::vector<const RoomImpulseResponse*> list;
      std::set<std::string> allowed(shift->rir_ids.begin(), shift->rir_ids.end());
      std::map<std::string, std::vector<const RoomImpulseResponse*>> rooms;
      for (const auto& r : rirs->rirs) {
        if (!allowed.empty() && !allowed.count(r.room_id + "/" + r.position_id)) continue;
        rooms[r.room_id].push_back(&r);
      }
      std::vector<const std::vector<const RoomImpulseResponse*>*> eligible;
      for (const auto& [room, l] : rooms) {
        if (l.size() >= 2) eligible.push_back(&l);
      }
      if (eligible.empty()) throw std::runtime_error("generate_corpus: no usable room in pool");
      const auto& l = *eligible[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int64_t>(eligible.size()) - 1))];
      size_t i = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(l.size()) - 1));
      size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(l.size()) - 2));
      if (j >= i) ++j;
      size_t clip = static_cast<size_t>(
          rng.uniform_int(0, static_cast<int64_t>(noises->clips.size()) - 1));
      double snr = rng.uniform(shift->snr_range->low_db, shift->snr_range->high_db);
      uint64_t offset = rng.next_u64() % noises->clips[clip].samples.size();
      audio = augment_reverb_noise(audio, *l[i], noises->clips[clip], *l[j], snr, offset);
      out.realized_snr_db = snr;
    } else if (rirs != nullptr && !rirs->rirs.empty()) {
      std::vector<const RoomImpulseResponse*> list;
      for (const auto& r : rirs->rirs) list.push_back(&r);
      size_t i = static_cast<size_t>(
          rng.uniform_int(0, static_cast<int64_t>(list.size()) - 1));
      audio = augment_reverb(audio, *list[i]);
      double peak = peak_abs(audio);
      if (peak > 1.0) {
        for (double& v : audio.samples) v /= peak;
      }
    }
  }

  out.audio = std::move(audio);
  return out;
}

}  // namespace

GeneratedCorpus generate_corpus(const SynthLanguageSpec& spec, const std::string& corpus_name,
                                double hours, const DomainShiftSpec* shift, const RirPool* rirs,
                                const NoisePool* noises, const std::filesystem::path& out_dir,
                                uint64_t seed, int jobs) {
  if (hours <= 0.0) throw std::invalid_argument("generate_corpus: hours must be positive");
  if (spec.utt_len_min < 1 || spec.utt_len_max < spec.utt_len_min) {
    throw std::invalid_argument("generate_corpus: bad utterance length range");
  }
  const double target_s = hours * 3600.0;
  Lexicon lex = make_lexicon(spec);

  // Expected seconds per word (phones + one silence), used only to plan how
  // many words each utterance gets so the corpus lands within 5% of target.
  double avg_phone_s = 0.0;
  for (const auto& p : spec.inventory.phones) avg_phone_s += p.duration_ms / 1000.0;
  avg_phone_s /= static_cast<double>(spec.inventory.phones.size());
  double avg_word_len = 0.5 * (spec.word_len_min + spec.word_len_max);
  double word_cost_s = avg_word_len * avg_phone_s + spec.inventory.silence_ms / 1000.0;

  // Plan word counts up front (sequential, seeded), then render in parallel.
  Rng plan_rng(mix_seed(seed, "plan"));
  std::vector<int> word_counts;
  double planned_s = spec.inventory.silence_ms / 1000.0;
  while (planned_s < target_s) {
    int n = static_cast<int>(plan_rng.uniform_int(spec.utt_len_min, spec.utt_len_max));
    double remaining = target_s - planned_s;
    int cap = std::max(1, static_cast<int>(remaining / word_cost_s));
    n = std::min(n, cap);
    word_counts.push_back(n);
    planned_s += n * word_cost_s + spec.inventory.silence_ms / 1000.0;
  }
  if (word_counts.empty()) word_counts.push_back(spec.utt_len_min);

  std::filesystem::create_directories(out_dir / "wav");
  std::vector<Utterance> entries(word_counts.size());
  parallel_for(word_counts.size(), jobs, [&](size_t i) {
    uint64_t key = mix_seed(seed, corpus_name + "-utt", i);
    RenderedUtterance r = render_utterance(spec, lex, word_counts[i], shift, rirs, noises, key);
    char id[96];
    std::snprintf(id, sizeof(id), "%s-utt%05d", corpus_name.c_str(), static_cast<int>(i));
    std::string wav_rel = std::string("wav/") + id + ".wav";
    write_wav(out_dir / wav_rel, r.audio);
    write_labels(label_path_for(out_dir / wav_rel), r.frame_labels);
    Utterance u;
    u.id = id;
    u.audio = wav_rel;
    u.transcript = r.words;
    u.speaker_id = speaker_name(corpus_name, r.speaker);
    u.language = spec.language_tag;
    u.duration_s = r.audio.duration_s();
    entries[i] = std::move(u);
  });

  Manifest m;
  m.name = corpus_name;
  m.base_dir = out_dir;
  m.entries = std::move(entries);

  GeneratedCorpus out;
  out.manifest_path = out_dir / "manifest.tsv";
  out.lexicon_path = out_dir / "lexicon.txt";
  out.phones_path = out_dir / "phones.txt";
  save_manifest(m, out.manifest_path);
  save_lexicon(lex, out.lexicon_path);
  save_phone_set(spec.inventory.symbols(), out.phones_path);
  return out;
}

}  // namespace xladapt
