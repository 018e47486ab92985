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

#ifndef XLADAPT_PIPELINE_HPP_
#define XLADAPT_PIPELINE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xladapt/embedding.hpp"
#include "xladapt/eval.hpp"
#include "xladapt/features.hpp"
#include "xladapt/nnet.hpp"
#include "xladapt/recipe.hpp"

namespace xladapt {

enum class TransferMode { kNone, kHidden, kFull };
enum class ExtractorMode { kTrainNew, kInherit };

struct StageConfig {
  std::string name;  // Stage1 | Stage2 | Stage3 | Scratch
  std::filesystem::path train_manifest;
  std::filesystem::path phone_set;  // may be empty for full transfer (inherited)
  AugmentationRecipe recipe;
  TransferMode transfer = TransferMode::kNone;
  ExtractorMode extractor = ExtractorMode::kTrainNew;
  TrainConfig train;
};

struct TestSetConfig {
  std::string name;
  std::filesystem::path manifest;
  std::filesystem::path lexicon;
};

struct PipelineConfig {
  std::vector<StageConfig> stages;
  std::vector<TestSetConfig> test_sets;
  std::vector<LayerSpec> layers;  // shared network topology
  FeatureConfig features;
  std::filesystem::path rir_pool;    // empty when no stage uses reverb
  std::filesystem::path noise_pool;  // empty when no stage uses noise
  uint64_t seed = 0;
  std::filesystem::path out_dir;
  int jobs = 1;
};

// Structured-text (JSON) pipeline description; relative paths resolve
// against the config file's directory. out_dir/seed/jobs may be overridden
// by the caller afterwards.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct StageResult {
  AcousticModel model;
  SpeakerEmbeddingExtractor extractor;
  TrainLog log;
  std::filesystem::path checkpoint;  // cached on disk
  std::string cache_key;
  bool cached = false;  // reused from a previous identical run
};

struct TestSetReport {
  std::string name;
  WerReport wer;
  double frame_accuracy = 0.0;
};

struct RunReport {
  std::string setup_name;
  std::array<bool, 3> stages_included{false, false, false};
  std::vector<std::string> stage_names;
  std::vector<TrainLog> stage_logs;
  std::vector<TestSetReport> tests;  // every configured test set exactly once
};

// Runs one stage: apply recipe -> train/inherit extractor -> construct the
// model per transfer mode -> train. Results are content-addressed under
// out_dir/cache so identical stages (e.g. Stage 1 across ablation setups)
// are trained once; reuse is guarded by atomic write-then-rename.
// stage_index seeds stage-local randomness and must be stable across setups.
StageResult run_stage(const PipelineConfig& pc, const StageConfig& cfg, int stage_index,
                      const StageResult* predecessor);

// Runs the configured stages in order, threading model + extractor, then
// evaluates the final model on every test set. Persists stage checkpoints
// under out_dir/checkpoints and writes report.txt / report.ndjson.
RunReport run_pipeline(const PipelineConfig& cfg, const std::string& setup_name = "Proposed");

struct AblationSpec {
  std::string name;
  std::array<bool, 3> include{false, false, false};
};

// The six setup rows: two single-stage baselines, three leave-one-out
// setups, and the full proposed pipeline.
std::vector<AblationSpec> table2_setups();

// For each spec the first included stage runs from scratch and trains its
// own extractor; later stages chain normally (a full transfer across a
// phone-set change is demoted to hidden transfer). Writes a combined
// comparison table + ndjson records under base.out_dir.
std::vector<RunReport> run_ablation(const PipelineConfig& base,
                                    const std::vector<AblationSpec>& specs);

struct SwapCell {
  std::string init;            // "random" | "transferred"
  std::string extractor;       // "A" | "B"
  bool override_used = false;  // fingerprint override needed at evaluation
  std::vector<TestSetReport> tests;
};

struct SwapReport {
  std::vector<SwapCell> cells;  // exactly 4
};

// 4-cell grid {model init: random|transferred} x {extractor: language A- or
// B-trained}, each trained on the second stage's data and scored on every
// test set. Requires at least two configured stages.
SwapReport extractor_swap_experiment(const PipelineConfig& cfg);

std::string render_table(const std::vector<RunReport>& reports);
std::string render_swap_table(const SwapReport& report);

// Newline-delimited machine-readable records: one per stage log and one per
// (setup, test set) result.
std::string render_records(const std::vector<RunReport>& reports);

}  // namespace xladapt

#endif  // XLADAPT_PIPELINE_HPP_
