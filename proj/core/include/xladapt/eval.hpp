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

#ifndef XLADAPT_EVAL_HPP_
#define XLADAPT_EVAL_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "xladapt/embedding.hpp"
#include "xladapt/features.hpp"
#include "xladapt/manifest.hpp"
#include "xladapt/nnet.hpp"
#include "xladapt/synth.hpp"

namespace xladapt {

struct WerReport {
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  long reference_words = 0;

  double wer() const {
    return static_cast<double>(substitutions + deletions + insertions) /
           static_cast<double>(reference_words);
  }
};

struct NormalizationRules {
  bool lowercase = true;
  bool strip_punctuation = true;
};

// Per-frame argmax, consecutive repeats collapsed, silence dropped. Argmax
// ties break toward the lowest phone index.
std::vector<std::string> greedy_decode(const Eigen::MatrixXd& posteriors,
                                       const std::vector<std::string>& phone_set,
                                       const std::string& silence_symbol = "sil");

// Word-level decoding: frames are segmented at silence, each segment's
// collapsed phone string is looked up in the lexicon; segments without a
// lexicon match become a single OOV token (phones joined with '+') so they
// score as substitutions rather than vanishing.
std::vector<std::string> decode_words(const Eigen::MatrixXd& posteriors,
                                      const std::vector<std::string>& phone_set,
                                      const Lexicon& lexicon,
                                      const std::string& silence_symbol = "sil");

// Deterministic, idempotent tokenization: whitespace split, optional
// lowercasing and punctuation stripping.
std::vector<std::string> normalize(const std::string& text, const NormalizationRules& rules);

// Minimal-edit alignment with unit costs; ties prefer substitution over
// deletion over insertion. Throws on empty reference.
WerReport wer(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis);

struct UtteranceScore {
  std::string id;
  WerReport report;
  long frames = 0;
  long correct_frames = 0;
};

struct EvalResult {
  WerReport pooled;  // corpus WER from pooled counts, not averaged ratios
  double frame_accuracy = 0.0;
  long frames = 0;
  long correct_frames = 0;
  std::vector<UtteranceScore> utterances;
};

// Scores a model against a test manifest with transcripts and frame-label
// sidecars. The extractor fingerprint must match the model's unless
// override_fingerprint is set (extractor-swap experiments only).
EvalResult evaluate(const AcousticModel& m, const SpeakerEmbeddingExtractor& extractor,
                    const Manifest& test, const Lexicon& lexicon, const FeatureConfig& cfg,
                    const NormalizationRules& rules, bool override_fingerprint = false,
                    int jobs = 1, const std::string& silence_symbol = "sil");

// One aligned table row, e.g. "Oral History | 25.91" (WER in percent).
std::string render_wer_row(const std::string& test_set_name, double wer_ratio);

}  // namespace xladapt

#endif  // XLADAPT_EVAL_HPP_
