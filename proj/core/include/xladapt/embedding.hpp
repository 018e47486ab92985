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

#ifndef XLADAPT_EMBEDDING_HPP_
#define XLADAPT_EMBEDDING_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>

#include "xladapt/features.hpp"
#include "xladapt/manifest.hpp"

namespace xladapt {

struct SpeakerEmbedding {
  Eigen::VectorXd values;
  uint64_t extractor_fingerprint = 0;
};

// Stats-projection speaker/utterance embedding: per-utterance stat vector =
// concat(mean, stddev) of the MFCC rows, whitened by the training mean and
// per-dimension scale, then projected onto the top principal directions.
// Each trained extractor defines its own coordinate system; embeddings carry
// the extractor fingerprint so mismatched pairings are detectable.
struct SpeakerEmbeddingExtractor {
  int stat_dim = 0;
  int embedding_dim = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;       // 1/stddev per stat dimension
  Eigen::MatrixXd projection;  // embedding_dim x stat_dim, orthonormal rows
  uint64_t fingerprint = 0;
};

Eigen::VectorXd utterance_stats(const FeatureMatrix& mfcc);

SpeakerEmbeddingExtractor train_embedding_extractor(const Manifest& corpus,
                                                    const FeatureConfig& cfg, int embedding_dim,
                                                    uint64_t seed);

SpeakerEmbedding extract_embedding(const Utterance& u, const Manifest& m,
                                   const SpeakerEmbeddingExtractor& e,
                                   const FeatureConfig& cfg);

SpeakerEmbedding embed_stats(const Eigen::VectorXd& stats, const SpeakerEmbeddingExtractor& e);

// Versioned binary checkpoint, header {version, dims, fingerprint}.
void save_extractor(const SpeakerEmbeddingExtractor& e, const std::filesystem::path& path);
SpeakerEmbeddingExtractor load_extractor(const std::filesystem::path& path);

}  // namespace xladapt

#endif  // XLADAPT_EMBEDDING_HPP_
