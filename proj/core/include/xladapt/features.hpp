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

#ifndef XLADAPT_FEATURES_HPP_
#define XLADAPT_FEATURES_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>

#include "xladapt/audio.hpp"

namespace xladapt {

struct SpeakerEmbedding;

struct FeatureConfig {
  int mfcc_dim = 20;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int mel_filters = 26;
  double pre_emphasis = 0.97;
  int splice_width = 5;  // must be odd
  double log_floor = 1e-10;
  double mel_low_hz = 20.0;
  int embedding_dim = 16;

  int input_dim() const { return splice_width * mfcc_dim + embedding_dim; }
};

struct FeatureMatrix {
  Eigen::MatrixXd values;  // frames x dims
  double frame_shift_ms = 10.0;

  long frames() const { return values.rows(); }
  long dims() const { return values.cols(); }
};

// Flat binary cache: header {frames, dims, shift}, then row-major doubles.
void save_features(const FeatureMatrix& f, const std::filesystem::path& path);
FeatureMatrix load_features(const std::filesystem::path& path);

// Pre-emphasis (whole signal) -> Hamming window -> magnitude spectrum ->
// mel filterbank (mel_low_hz..Nyquist) -> floored log -> orthonormal DCT-II,
// first mfcc_dim coefficients. Frame count = (len - window) / shift + 1.
FeatureMatrix compute_mfcc(const AudioSignal& x, const FeatureConfig& cfg);

// Per-utterance cepstral mean subtraction (channel/tilt removal). Applied to
// the acoustic-model input only; speaker-embedding statistics intentionally
// keep the raw features, where that information belongs.
FeatureMatrix cepstral_mean_normalize(const FeatureMatrix& f);

// Per frame t: frames t-k..t+k concatenated (edges replicated) with the
// utterance embedding appended; output dim = splice_width*mfcc_dim +
// embedding_dim.
FeatureMatrix assemble_input(const FeatureMatrix& f, const SpeakerEmbedding& emb,
                             const FeatureConfig& cfg);

}  // namespace xladapt

#endif  // XLADAPT_FEATURES_HPP_
