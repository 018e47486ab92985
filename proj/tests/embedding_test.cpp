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

#include "xladapt/embedding.hpp"

#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "xladapt/manifest.hpp"
#include "xladapt/synth.hpp"

using namespace xladapt;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "xladapt_embedding_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Manifest small_corpus(const fs::path& dir, uint64_t seed) {
  SynthLanguageSpec spec;
  spec.inventory = make_inventory("a", 6, 8000, seed + 1);
  spec.speaker_count = 3;
  spec.vocab_size = 12;
  spec.sample_rate = 8000;
  spec.seed = seed;
  GeneratedCorpus gc =
      generate_corpus(spec, "emb", 0.004, nullptr, nullptr, nullptr, dir, seed, 2);
  return load_manifest(gc.manifest_path);
}

}  // namespace

TEST_CASE("utterance stats are mean and population stddev") {
  FeatureMatrix f;
  f.values.resize(3, 2);
  f.values << 1.0, 4.0, 2.0, 4.0, 3.0, 4.0;
  Eigen::VectorXd s = utterance_stats(f);
  REQUIRE(s.size() == 4);
  CHECK(s(0) == doctest::Approx(2.0));
  CHECK(s(1) == doctest::Approx(4.0));
  CHECK(s(2) == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(s(3) == doctest::Approx(0.0));
}

TEST_CASE("extractor projection has orthonormal rows") {
  fs::path dir = tmp_dir("ortho");
  Manifest m = small_corpus(dir, 31);
  FeatureConfig cfg;
  cfg.embedding_dim = 4;
  SpeakerEmbeddingExtractor e = train_embedding_extractor(m, cfg, 4, 77);
  Eigen::MatrixXd gram = e.projection * e.projection.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(e.fingerprint != 0);
}

TEST_CASE("different training data yields different fingerprints") {
  fs::path d1 = tmp_dir("fp1"), d2 = tmp_dir("fp2");
  Manifest m1 = small_corpus(d1, 32);
  Manifest m2 = small_corpus(d2, 33);
  FeatureConfig cfg;
  cfg.embedding_dim = 4;
  SpeakerEmbeddingExtractor e1 = train_embedding_extractor(m1, cfg, 4, 1);
  SpeakerEmbeddingExtractor e2 = train_embedding_extractor(m2, cfg, 4, 1);
  CHECK(e1.fingerprint != e2.fingerprint);

  // Identical training is bit-stable.
  SpeakerEmbeddingExtractor e1b = train_embedding_extractor(m1, cfg, 4, 1);
  CHECK(e1.fingerprint == e1b.fingerprint);
}

TEST_CASE("extractor save/load round trip preserves embeddings") {
  fs::path dir = tmp_dir("io");
  Manifest m = small_corpus(dir, 34);
  FeatureConfig cfg;
  cfg.embedding_dim = 4;
  SpeakerEmbeddingExtractor e = train_embedding_extractor(m, cfg, 4, 2);
  save_extractor(e, dir / "ext.bin");
  SpeakerEmbeddingExtractor r = load_extractor(dir / "ext.bin");
  CHECK(r.fingerprint == e.fingerprint);

  SpeakerEmbedding a = extract_embedding(m.entries[0], m, e, cfg);
  SpeakerEmbedding b = extract_embedding(m.entries[0], m, r, cfg);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.extractor_fingerprint == e.fingerprint);
}

TEST_CASE("training requires enough utterances") {
  fs::path dir = tmp_dir("few");
  Manifest m = small_corpus(dir, 35);
  Manifest tiny = m;
  tiny.entries.resize(2);
  FeatureConfig cfg;
  cfg.embedding_dim = 4;
  CHECK_THROWS(train_embedding_extractor(tiny, cfg, 4, 3));
}
