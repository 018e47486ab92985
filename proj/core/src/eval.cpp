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

#include "xladapt/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "xladapt/audio.hpp"
#include "xladapt/labels.hpp"
#include "xladapt/util.hpp"

namespace xladapt {

namespace {

std::vector<int> argmax_frames(const Eigen::MatrixXd& posteriors) {
  if (posteriors.rows() == 0 || posteriors.cols() == 0) {
    throw std::invalid_argument("decode: empty posterior matrix");
  }
  std::vector<int> best(static_cast<size_t>(posteriors.rows()));
  for (long t = 0; t < posteriors.rows(); ++t) {
    // Manual scan so ties go to the lowest index regardless of Eigen version.
    int arg = 0;
    double mx = posteriors(t, 0);
    for (long k = 1; k < posteriors.cols(); ++k) {
      if (posteriors(t, k) > mx) {
        mx = posteriors(t, k);
        arg = static_cast<int>(k);
      }
    }
    best[static_cast<size_t>(t)] = arg;
  }
  return best;
}

int silence_index(const std::vector<std::string>& phone_set, const std::string& silence_symbol) {
  auto it = std::find(phone_set.begin(), phone_set.end(), silence_symbol);
  return it == phone_set.end() ? -1 : static_cast<int>(it - phone_set.begin());
}

std::string join_phones(const std::vector<std::string>& phones, char sep) {
  std::string out;
  for (size_t i = 0; i < phones.size(); ++i) {
    if (i > 0) out.push_back(sep);
    out += phones[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> greedy_decode(const Eigen::MatrixXd& posteriors,
                                       const std::vector<std::string>& phone_set,
                                       const std::string& silence_symbol) {
  if (static_cast<long>(phone_set.size()) != posteriors.cols()) {
    throw std::invalid_argument("decode: phone set size does not match posterior columns");
  }
  std::vector<int> best = argmax_frames(posteriors);
  const int sil = silence_index(phone_set, silence_symbol);
  std::vector<std::string> tokens;
  int prev = -1;
  for (int b : best) {
    if (b != prev && b != sil) tokens.push_back(phone_set[static_cast<size_t>(b)]);
    prev = b;
  }
  return tokens;
}

std::vector<std::string> decode_words(const Eigen::MatrixXd& posteriors,
                                      const std::vector<std::string>& phone_set,
                                      const Lexicon& lexicon,
                                      const std::string& silence_symbol) {
  if (static_cast<long>(phone_set.size()) != posteriors.cols()) {
    throw std::invalid_argument("decode: phone set size does not match posterior columns");
  }
  std::map<std::string, std::string> pron_to_word;
  for (const auto& [word, pron] : lexicon.entries) {
    pron_to_word.emplace(join_phones(pron, ' '), word);
  }

  std::vector<int> best = argmax_frames(posteriors);
  const int sil = silence_index(phone_set, silence_symbol);
  std::vector<std::string> words;
  std::vector<std::string> segment;
  int prev = -1;
  auto flush = [&] {
    if (segment.empty()) return;
    auto it = pron_to_word.find(join_phones(segment, ' '));
    words.push_back(it != pron_to_word.end() ? it->second : join_phones(segment, '+'));
    segment.clear();
  };
  for (int b : best) {
    if (b == sil) {
      flush();
    } else if (b != prev) {
      segment.push_back(phone_set[static_cast<size_t>(b)]);
    }
    prev = b;
  }
  flush();
  return words;
}

std::vector<std::string> normalize(const std::string& text, const NormalizationRules& rules) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
      continue;
    }
    if (rules.strip_punctuation && std::ispunct(c) && c != '+' && c != '-') continue;
    cur.push_back(rules.lowercase ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
  }
  flush();
  return tokens;
}

WerReport wer(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis) {
  if (reference.empty()) throw std::invalid_argument("wer: empty reference");
  const size_t R = reference.size();
  const size_t H = hypothesis.size();

  enum Op : uint8_t { kMatch, kSub, kDel, kIns };
  std::vector<std::vector<int>> cost(R + 1, std::vector<int>(H + 1, 0));
  std::vector<std::vector<Op>> back(R + 1, std::vector<Op>(H + 1, kMatch));
  for (size_t i = 1; i <= R; ++i) {
    cost[i][0] = static_cast<int>(i);
    back[i][0] = kDel;
  }
  for (size_t j = 1; j <= H; ++j) {
    cost[0][j] = static_cast<int>(j);
    back[0][j] = kIns;
  }
  for (size_t i = 1; i <= R; ++i) {
    for (size_t j = 1; j <= H; ++j) {
      const bool match = reference[i - 1] == hypothesis[j - 1];
      int diag = cost[i - 1][j - 1] + (match ? 0 : 1);
      int del = cost[i - 1][j] + 1;
      int ins = cost[i][j - 1] + 1;
      // Tie-break: substitution (or match) over deletion over insertion.
      if (diag <= del && diag <= ins) {
        cost[i][j] = diag;
        back[i][j] = match ? kMatch : kSub;
      } else if (del <= ins) {
        cost[i][j] = del;
        back[i][j] = kDel;
      } else {
        cost[i][j] = ins;
        back[i][j] = kIns;
      }
    }
  }

  WerReport r;
  r.reference_words = static_cast<long>(R);
  size_t i = R, j = H;
  while (i > 0 || j > 0) {
    switch (back[i][j]) {
      case kMatch:
        --i;
        --j;
        break;
      case kSub:
        ++r.substitutions;
        --i;
        --j;
        break;
      case kDel:
        ++r.deletions;
        --i;
        break;
      case kIns:
        ++r.insertions;
        --j;
        break;
    }
  }
  return r;
}

EvalResult evaluate(const AcousticModel& m, const SpeakerEmbeddingExtractor& extractor,
                    const Manifest& test, const Lexicon& lexicon, const FeatureConfig& cfg,
                    const NormalizationRules& rules, bool override_fingerprint, int jobs,
                    const std::string& silence_symbol) {
  if (test.entries.empty()) throw std::invalid_argument("evaluate: empty test set");
  if (m.extractor_fingerprint != extractor.fingerprint && !override_fingerprint) {
    throw std::runtime_error(
        "evaluate: extractor fingerprint does not match the model's training "
        "extractor (pass the override to evaluate mismatched pairs)");
  }
  std::map<std::string, int> phone_index;
  for (size_t k = 0; k < m.phone_set.size(); ++k) {
    phone_index[m.phone_set[k]] = static_cast<int>(k);
  }

  EvalResult result;
  result.utterances.resize(test.entries.size());
  parallel_for(test.entries.size(), jobs, [&](size_t i) {
    const Utterance& u = test.entries[i];
    AudioSignal audio = read_wav(resolve_audio(test, u));
    FeatureMatrix mfcc = compute_mfcc(audio, cfg);
    SpeakerEmbedding emb = embed_stats(utterance_stats(mfcc), extractor);
    FeatureMatrix input = assemble_input(cepstral_mean_normalize(mfcc), emb, cfg);
    Eigen::MatrixXd posteriors = forward(m, input.values);

    UtteranceScore& score = result.utterances[i];
    score.id = u.id;

    std::vector<std::string> labels = read_labels(label_path_for(resolve_audio(test, u)));
    if (static_cast<long>(labels.size()) != posteriors.rows()) {
      throw std::runtime_error("evaluate: label/frame count mismatch for " + u.id);
    }
    for (long t = 0; t < posteriors.rows(); ++t) {
      auto it = phone_index.find(labels[static_cast<size_t>(t)]);
      if (it == phone_index.end()) {
        throw std::runtime_error("evaluate: label phone '" + labels[static_cast<size_t>(t)] +
                                 "' not in model phone set (" + u.id + ")");
      }
      long arg = 0;
      posteriors.row(t).maxCoeff(&arg);
      ++score.frames;
      if (static_cast<int>(arg) == it->second) ++score.correct_frames;
    }

    std::vector<std::string> reference;
    for (const auto& tok : u.transcript) {
      for (const auto& t : normalize(tok, rules)) reference.push_back(t);
    }
    if (reference.empty()) {
      throw std::runtime_error("evaluate: empty reference transcript for " + u.id);
    }
    std::vector<std::string> hypothesis =
        decode_words(posteriors, m.phone_set, lexicon, silence_symbol);
    score.report = wer(reference, hypothesis);
  });

  for (const auto& score : result.utterances) {
    result.pooled.substitutions += score.report.substitutions;
    result.pooled.deletions += score.report.deletions;
    result.pooled.insertions += score.report.insertions;
    result.pooled.reference_words += score.report.reference_words;
    result.frames += score.frames;
    result.correct_frames += score.correct_frames;
  }
  result.frame_accuracy =
      static_cast<double>(result.correct_frames) / static_cast<double>(result.frames);
  return result;
}

std::string render_wer_row(const std::string& test_set_name, double wer_ratio) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * wer_ratio);
  return test_set_name + " | " + buf;
}

}  // namespace xladapt
