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

#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

#include "xladapt/labels.hpp"

using namespace xladapt;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "xladapt_synth_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

SynthLanguageSpec small_spec(uint64_t seed) {
  SynthLanguageSpec spec;
  spec.inventory = make_inventory("a", 8, 8000, seed + 1);
  spec.language_tag = "aa";
  spec.speaker_count = 3;
  spec.vocab_size = 15;
  spec.sample_rate = 8000;
  spec.seed = seed;
  return spec;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("inventories are deterministic and phone sets start with silence") {
  PhoneInventory a1 = make_inventory("a", 10, 8000, 5);
  PhoneInventory a2 = make_inventory("a", 10, 8000, 5);
  REQUIRE(a1.phones.size() == 10);
  for (size_t i = 0; i < a1.phones.size(); ++i) {
    CHECK(a1.phones[i].symbol == a2.phones[i].symbol);
    CHECK(a1.phones[i].freqs_hz == a2.phones[i].freqs_hz);
  }
  std::vector<std::string> symbols = a1.symbols();
  REQUIRE(symbols.size() == 11);
  CHECK(symbols[0] == "sil");
}

TEST_CASE("derived inventory shares the leading prototypes acoustically") {
  PhoneInventory a = make_inventory("a", 10, 8000, 6);
  PhoneInventory b = derive_inventory(a, "b", 8, 5, 8000, 7);
  REQUIRE(b.phones.size() == 8);
  for (int i = 0; i < 5; ++i) {
    CHECK(b.phones[i].freqs_hz == a.phones[i].freqs_hz);
    CHECK(b.phones[i].symbol != a.phones[i].symbol);
  }
  // The remaining prototypes are genuinely new.
  std::set<double> a_f0;
  for (const auto& p : a.phones) a_f0.insert(p.freqs_hz[0]);
  for (size_t i = 5; i < b.phones.size(); ++i) CHECK(a_f0.count(b.phones[i].freqs_hz[0]) == 0);
}

TEST_CASE("rendered phones are bit-reproducible") {
  PhoneInventory inv = make_inventory("a", 6, 8000, 8);
  AudioSignal x = render_phone(inv, inv.phones[2].symbol, 1.5, 99, 8000);
  AudioSignal y = render_phone(inv, inv.phones[2].symbol, 1.5, 99, 8000);
  CHECK(x.samples == y.samples);
  AudioSignal z = render_phone(inv, inv.phones[2].symbol, 1.5, 100, 8000);
  CHECK(x.samples != z.samples);
}

TEST_CASE("generated corpus hits the requested duration and aligns labels") {
  fs::path dir = tmp_dir("gen");
  SynthLanguageSpec spec = small_spec(42);
  const double hours = 0.004;  // ~15 s
  GeneratedCorpus gc =
      generate_corpus(spec, "toy", hours, nullptr, nullptr, nullptr, dir, 42, 2);

  Manifest m = load_manifest(gc.manifest_path);
  REQUIRE(!m.entries.empty());
  double total_s = 0.0;
  std::set<std::string> speakers;
  for (const auto& u : m.entries) {
    total_s += u.duration_s;
    speakers.insert(u.speaker_id);
    CHECK(!u.transcript.empty());

    auto [samples, rate] = read_wav_info(resolve_audio(m, u));
    std::vector<std::string> labels = read_labels(label_path_for(resolve_audio(m, u)));
    CHECK(static_cast<long>(labels.size()) ==
          frame_count(samples, rate, kLabelFrameLengthMs, kLabelFrameShiftMs));
  }
  CHECK(total_s >= 0.95 * hours * 3600.0);
  CHECK(total_s <= 1.05 * hours * 3600.0);
  CHECK(speakers.size() == 3);

  // Every transcript word must be in the lexicon, labels in the phone set.
  Lexicon lex = load_lexicon(gc.lexicon_path);
  std::set<std::string> words;
  for (const auto& [w, pron] : lex.entries) words.insert(w);
  std::vector<std::string> phones = load_phone_set(gc.phones_path);
  std::set<std::string> phone_set(phones.begin(), phones.end());
  for (const auto& u : m.entries) {
    for (const auto& w : u.transcript) CHECK(words.count(w) == 1);
    for (const auto& l : read_labels(label_path_for(resolve_audio(m, u)))) {
      CHECK(phone_set.count(l) == 1);
    }
  }
}

TEST_CASE("generation is deterministic across runs and job counts") {
  SynthLanguageSpec spec = small_spec(43);
  fs::path d1 = tmp_dir("det1");
  fs::path d2 = tmp_dir("det2");
  GeneratedCorpus g1 = generate_corpus(spec, "toy", 0.002, nullptr, nullptr, nullptr, d1, 9, 1);
  GeneratedCorpus g2 = generate_corpus(spec, "toy", 0.002, nullptr, nullptr, nullptr, d2, 9, 4);
  CHECK(file_bytes(g1.manifest_path) == file_bytes(g2.manifest_path));
  Manifest m1 = load_manifest(g1.manifest_path);
  Manifest m2 = load_manifest(g2.manifest_path);
  for (size_t i = 0; i < m1.entries.size(); ++i) {
    CHECK(file_bytes(resolve_audio(m1, m1.entries[i])) ==
          file_bytes(resolve_audio(m2, m2.entries[i])));
  }
}

TEST_CASE("lexicon and phone set round trip") {
  fs::path dir = tmp_dir("lex");
  SynthLanguageSpec spec = small_spec(44);
  Lexicon lex = make_lexicon(spec);
  REQUIRE(lex.entries.size() == static_cast<size_t>(spec.vocab_size));
  save_lexicon(lex, dir / "lexicon.txt");
  Lexicon r = load_lexicon(dir / "lexicon.txt");
  REQUIRE(r.entries.size() == lex.entries.size());
  for (size_t i = 0; i < lex.entries.size(); ++i) {
    CHECK(r.entries[i].first == lex.entries[i].first);
    CHECK(r.entries[i].second == lex.entries[i].second);
  }

  std::vector<std::string> phones = spec.inventory.symbols();
  save_phone_set(phones, dir / "phones.txt");
  CHECK(load_phone_set(dir / "phones.txt") == phones);
}
