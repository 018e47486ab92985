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
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "xladapt/audio.hpp"
#include "xladapt/rng.hpp"

namespace xladapt {

namespace {

uint64_t hash_extractor(const SpeakerEmbeddingExtractor& e, uint64_t seed) {
  uint64_t h = fnv1a(&seed, sizeof(seed));
  h = fnv1a(&e.stat_dim, sizeof(e.stat_dim), h);
  h = fnv1a(&e.embedding_dim, sizeof(e.embedding_dim), h);
  h = fnv1a(e.mean.data(), sizeof(double) * static_cast<size_t>(e.mean.size()), h);
  h = fnv1a(e.scale.data(), sizeof(double) * static_cast<size_t>(e.scale.size()), h);
  h = fnv1a(e.projection.data(), sizeof(double) * static_cast<size_t>(e.projection.size()), h);
  return h;
}

}  // namespace

Eigen::VectorXd utterance_stats(const FeatureMatrix& mfcc) {
  const long T = mfcc.frames();
  const long D = mfcc.dims();
  if (T < 1) throw std::invalid_argument("utterance_stats: empty feature matrix");
  Eigen::VectorXd stats(2 * D);
  Eigen::VectorXd mean = mfcc.values.colwise().mean();
  for (long d = 0; d < D; ++d) {
    double var = (mfcc.values.col(d).array() - mean(d)).square().sum() / static_cast<double>(T);
    stats(d) = mean(d);
    stats(D + d) = std::sqrt(var);
  }
  return stats;
}

SpeakerEmbeddingExtractor train_embedding_extractor(const Manifest& corpus,
                                                    const FeatureConfig& cfg, int embedding_dim,
                                                    uint64_t seed) {
  const long N = static_cast<long>(corpus.entries.size());
  const int stat_dim = 2 * cfg.mfcc_dim;
  if (embedding_dim <= 0 || embedding_dim > stat_dim) {
    throw std::invalid_argument("extractor: embedding_dim must be in [1, stat_dim]");
  }
  if (N < embedding_dim) {
    throw std::invalid_argument("extractor: need at least embedding_dim utterances");
  }

  Eigen::MatrixXd stats(N, stat_dim);
  for (long i = 0; i < N; ++i) {
    AudioSignal audio = read_wav(resolve_audio(corpus, corpus.entries[static_cast<size_t>(i)]));
    stats.row(i) = utterance_stats(compute_mfcc(audio, cfg)).transpose();
  }

  SpeakerEmbeddingExtractor e;
  e.stat_dim = stat_dim;
  e.embedding_dim = embedding_dim;
  e.mean = stats.colwise().mean();
  e.scale.resize(stat_dim);
  Eigen::MatrixXd centered = stats.rowwise() - e.mean.transpose();
  bool any_variance = false;
  for (int d = 0; d < stat_dim; ++d) {
    double sd = std::sqrt(centered.col(d).squaredNorm() / static_cast<double>(N));
    if (sd > 1e-12) any_variance = true;
    e.scale(d) = 1.0 / std::max(sd, 1e-8);
  }
  if (!any_variance) {
    throw std::runtime_error(
        "extractor: zero-variance stats (all training utterances identical)");
  }
  Eigen::MatrixXd whitened = centered.array().rowwise() * e.scale.transpose().array();

  Eigen::MatrixXd cov =
      (whitened.transpose() * whitened) / static_cast<double>(N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("extractor: eigendecomposition failed");
  }
  // Eigenvalues ascend; take the top embedding_dim directions, sign-fixed so
  // results do not depend on solver sign conventions.
  e.projection.resize(embedding_dim, stat_dim);
  for (int k = 0; k < embedding_dim; ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(stat_dim - 1 - k);
    long max_idx = 0;
    v.cwiseAbs().maxCoeff(&max_idx);
    if (v(max_idx) < 0.0) v = -v;
    e.projection.row(k) = v.transpose();
  }
  e.fingerprint = hash_extractor(e, seed);
  return e;
}

SpeakerEmbedding embed_stats(const Eigen::VectorXd& stats, const SpeakerEmbeddingExtractor& e) {
  if (stats.size() != e.stat_dim) {
    throw std::invalid_argument("embed_stats: stat dimension mismatch");
  }
  Eigen::VectorXd whitened =
      ((stats - e.mean).array() * e.scale.array()).matrix();
  SpeakerEmbedding emb;
  emb.values = e.projection * whitened;
  emb.extractor_fingerprint = e.fingerprint;
  return emb;
}

SpeakerEmbedding extract_embedding(const Utterance& u, const Manifest& m,
                                   const SpeakerEmbeddingExtractor& e,
                                   const FeatureConfig& cfg) {
  AudioSignal audio = read_wav(resolve_audio(m, u));
  return embed_stats(utterance_stats(compute_mfcc(audio, cfg)), e);
}

namespace {
constexpr uint32_t kExtractorVersion = 1;
constexpr char kExtractorMagic[8] = {'X', 'L', 'A', 'E', 'X', 'T', 'R', '1'};
}  // namespace

void save_extractor(const SpeakerEmbeddingExtractor& e, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("extractor: cannot write: " + path.string());
  out.write(kExtractorMagic, sizeof(kExtractorMagic));
  out.write(reinterpret_cast<const char*>(&kExtractorVersion), sizeof(kExtractorVersion));
  out.write(reinterpret_cast<const char*>(&e.stat_dim), sizeof(e.stat_dim));
  out.write(reinterpret_cast<const char*>(&e.embedding_dim), sizeof(e.embedding_dim));
  out.write(reinterpret_cast<const char*>(&e.fingerprint), sizeof(e.fingerprint));
  auto write_vec = [&](const Eigen::VectorXd& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(v.size())));
  };
  write_vec(e.mean);
  write_vec(e.scale);
  out.write(reinterpret_cast<const char*>(e.projection.data()),
            static_cast<std::streamsize>(sizeof(double) *
                                         static_cast<size_t>(e.projection.size())));
  if (!out) throw std::runtime_error("extractor: write failed: " + path.string());
}

SpeakerEmbeddingExtractor load_extractor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("extractor: cannot open: " + path.string());
  char magic[8];
  uint32_t version = 0;
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kExtractorMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("extractor: bad magic: " + path.string());
  }
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kExtractorVersion) {
    throw std::runtime_error("extractor: unsupported version in " + path.string());
  }
  SpeakerEmbeddingExtractor e;
  in.read(reinterpret_cast<char*>(&e.stat_dim), sizeof(e.stat_dim));
  in.read(reinterpret_cast<char*>(&e.embedding_dim), sizeof(e.embedding_dim));
  in.read(reinterpret_cast<char*>(&e.fingerprint), sizeof(e.fingerprint));
  if (!in || e.stat_dim <= 0 || e.embedding_dim <= 0 || e.embedding_dim > e.stat_dim) {
    throw std::runtime_error("extractor: corrupt header: " + path.string());
  }
  e.mean.resize(e.stat_dim);
  e.scale.resize(e.stat_dim);
  e.projection.resize(e.embedding_dim, e.stat_dim);
  in.read(reinterpret_cast<char*>(e.mean.data()), sizeof(double) * e.stat_dim);
  in.read(reinterpret_cast<char*>(e.scale.data()), sizeof(double) * e.stat_dim);
  in.read(reinterpret_cast<char*>(e.projection.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(e.projection.size())));
  if (!in) throw std::runtime_error("extractor: truncated file: " + path.string());
  return e;
}

}  // namespace xladapt
