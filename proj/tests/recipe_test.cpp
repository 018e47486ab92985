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

#include "xladapt/recipe.hpp"

#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "xladapt/audio.hpp"
#include "xladapt/labels.hpp"
#include "xladapt/rng.hpp"

using namespace xladapt;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "xladapt_recipe_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Manifest make_corpus(const fs::path& dir, int n_utts) {
  fs::create_directories(dir);
  Manifest m;
  m.name = "src";
  m.base_dir = dir;
  Rng rng(7);
  for (int i = 0; i < n_utts; ++i) {
    AudioSignal x;
    x.sample_rate = 8000;
    int n = 2400 + 160 * (i % 4);
    for (int k = 0; k < n; ++k) x.samples.push_back(rng.uniform(-0.2, 0.2));
    std::string file = "u" + std::to_string(i) + ".wav";
    write_wav(dir / file, x);

    long frames = frame_count(x.samples.size(), x.sample_rate, kLabelFrameLengthMs,
                              kLabelFrameShiftMs);
    std::vector<std::string> labels(static_cast<size_t>(frames), "sil");
    for (long f = frames / 3; f < 2 * frames / 3; ++f) labels[static_cast<size_t>(f)] = "aa";
    write_labels(label_path_for(dir / file), labels);

    Utterance u;
    u.id = "src-u" + std::to_string(i);
    u.audio = file;
    u.transcript = {"tok"};
    u.speaker_id = "spk" + std::to_string(i % 2);
    u.language = "xx";
    u.duration_s = x.duration_s();
    m.entries.push_back(u);
  }
  return m;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("two augmented copies triple the manifest") {
  fs::path dir = tmp_dir("copies");
  Manifest src = make_corpus(dir / "src", 5);
  synthesize_rir_pool(dir / "rirs", 2, 2, 8000, 1);
  synthesize_noise_pool(dir / "noises", 2, 1.0, 8000, 2);
  RirPool rirs = load_rir_pool(dir / "rirs");
  NoisePool noises = load_noise_pool(dir / "noises");

  AugmentationRecipe r;
  r.seed = 11;
  r.copies.push_back({true, true, {5.0, 20.0}, {}});
  r.copies.push_back({true, false, {}, {}});
  Manifest out = apply_recipe(src, r, &rirs, &noises, dir / "out", 1);
  CHECK(out.entries.size() == 3 * src.entries.size());
}

TEST_CASE("speed factors 0.9 and 1.1 triple the manifest independently") {
  fs::path dir = tmp_dir("speeds");
  Manifest src = make_corpus(dir / "src", 4);
  AugmentationRecipe r;
  r.seed = 12;
  r.speed_factors = {0.9, 1.1};
  Manifest out = apply_recipe(src, r, nullptr, nullptr, dir / "out", 1);
  CHECK(out.entries.size() == 3 * src.entries.size());
}

TEST_CASE("speeds and copies combine multiplicatively") {
  fs::path dir = tmp_dir("both");
  Manifest src = make_corpus(dir / "src", 3);
  synthesize_rir_pool(dir / "rirs", 2, 2, 8000, 3);
  synthesize_noise_pool(dir / "noises", 2, 1.0, 8000, 4);
  RirPool rirs = load_rir_pool(dir / "rirs");
  NoisePool noises = load_noise_pool(dir / "noises");

  AugmentationRecipe r;
  r.seed = 13;
  r.speed_factors = {0.9, 1.1};
  r.copies.push_back({true, true, {5.0, 20.0}, {}});
  r.copies.push_back({false, true, {5.0, 20.0}, {}});
  Manifest out = apply_recipe(src, r, &rirs, &noises, dir / "out", 1);
  CHECK(out.entries.size() == 9 * src.entries.size());
}

TEST_CASE("augmented entries keep aligned label sidecars") {
  fs::path dir = tmp_dir("labels");
  Manifest src = make_corpus(dir / "src", 3);
  synthesize_rir_pool(dir / "rirs", 2, 2, 8000, 5);
  synthesize_noise_pool(dir / "noises", 2, 1.0, 8000, 6);
  RirPool rirs = load_rir_pool(dir / "rirs");
  NoisePool noises = load_noise_pool(dir / "noises");

  AugmentationRecipe r;
  r.seed = 14;
  r.speed_factors = {0.9};
  r.copies.push_back({true, true, {5.0, 20.0}, {}});
  Manifest out = apply_recipe(src, r, &rirs, &noises, dir / "out", 1);

  for (const auto& u : out.entries) {
    fs::path wav = resolve_audio(out, u);
    REQUIRE(fs::exists(wav));
    std::vector<std::string> labels = read_labels(label_path_for(wav));
    auto [samples, rate] = read_wav_info(wav);
    CHECK(static_cast<long>(labels.size()) ==
          frame_count(samples, rate, kLabelFrameLengthMs, kLabelFrameShiftMs));
  }
}

TEST_CASE("recipe output is independent of the job count") {
  fs::path dir = tmp_dir("jobs");
  Manifest src = make_corpus(dir / "src", 4);
  synthesize_rir_pool(dir / "rirs", 2, 2, 8000, 7);
  synthesize_noise_pool(dir / "noises", 2, 1.0, 8000, 8);
  RirPool rirs = load_rir_pool(dir / "rirs");
  NoisePool noises = load_noise_pool(dir / "noises");

  AugmentationRecipe r;
  r.seed = 15;
  r.speed_factors = {1.1};
  r.copies.push_back({true, true, {5.0, 20.0}, {}});

  Manifest a = apply_recipe(src, r, &rirs, &noises, dir / "out1", 1);
  Manifest b = apply_recipe(src, r, &rirs, &noises, dir / "out4", 4);
  save_manifest(a, dir / "m1.tsv");
  save_manifest(b, dir / "m4.tsv");
  // Manifests list the same entries and all rendered audio is byte-identical.
  REQUIRE(a.entries.size() == b.entries.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].id == b.entries[i].id);
    CHECK(file_bytes(resolve_audio(a, a.entries[i])) ==
          file_bytes(resolve_audio(b, b.entries[i])));
  }
}

TEST_CASE("originals pass through untouched") {
  fs::path dir = tmp_dir("orig");
  Manifest src = make_corpus(dir / "src", 2);
  AugmentationRecipe r;
  r.seed = 16;
  r.copies.push_back({true, false, {}, {}});
  synthesize_rir_pool(dir / "rirs", 2, 2, 8000, 9);
  RirPool rirs = load_rir_pool(dir / "rirs");
  Manifest out = apply_recipe(src, r, &rirs, nullptr, dir / "out", 1);
  int originals = 0;
  for (const auto& u : out.entries) {
    for (const auto& s : src.entries) {
      if (u.id == s.id) {
        ++originals;
        CHECK(file_bytes(resolve_audio(out, u)) == file_bytes(resolve_audio(src, s)));
      }
    }
  }
  CHECK(originals == 2);
}
