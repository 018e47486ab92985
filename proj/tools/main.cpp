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
//
// xladapt: corpus synthesis, augmentation, staged acoustic-model training,
// and WER scoring in one binary. Run `xladapt --help` for the command list.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xladapt/audio.hpp"
#include "xladapt/benchmark_preset.hpp"
#include "xladapt/eval.hpp"
#include "xladapt/features.hpp"
#include "xladapt/labels.hpp"
#include "xladapt/manifest.hpp"
#include "xladapt/nnet.hpp"
#include "xladapt/pipeline.hpp"
#include "xladapt/recipe.hpp"
#include "xladapt/rng.hpp"
#include "xladapt/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace xladapt;

namespace {

// Resolved-configuration record written into every output directory so runs
// can be audited and replayed.
void write_run_manifest(const fs::path& out_dir, const std::string& command,
                        const json& resolved) {
  fs::create_directories(out_dir);
  json j;
  j["command"] = command;
  j["resolved"] = resolved;
  std::ofstream out(out_dir / "run.json", std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + (out_dir / "run.json").string());
}

PipelineConfig load_config_with_overrides(const std::string& config_path,
                                          const std::optional<uint64_t>& seed,
                                          const std::optional<std::string>& out,
                                          const std::optional<int>& jobs) {
  PipelineConfig pc = load_pipeline_config(config_path);
  if (seed) pc.seed = *seed;
  if (out) pc.out_dir = *out;
  if (jobs) pc.jobs = *jobs;
  return pc;
}

json resolved_pipeline_json(const PipelineConfig& pc, const std::string& config_path) {
  json j;
  j["config"] = config_path;
  j["seed"] = pc.seed;
  j["jobs"] = pc.jobs;
  j["stages"] = json::array();
  for (const auto& s : pc.stages) j["stages"].push_back(s.name);
  return j;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual staged acoustic-model adaptation toolkit"};
  app.require_subcommand(1);

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate the default synthetic benchmark");
  std::string synth_out;
  uint64_t synth_seed = 7;
  int synth_jobs = 1;
  BenchmarkPresetOptions preset;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Benchmark seed");
  synth->add_option("--jobs", synth_jobs, "Worker threads");
  synth->add_option("--hours-a", preset.hours_language_a, "Language-A corpus hours");
  synth->add_option("--hours-broadcast", preset.hours_broadcast_b, "B broadcast corpus hours");
  synth->add_option("--hours-target", preset.hours_target_b, "B target corpus hours");
  synth->add_option("--sample-rate", preset.sample_rate, "Sample rate in Hz");

  // ---- stats ----------------------------------------------------------
  auto* stats = app.add_subcommand("stats", "Print corpus statistics rows");
  std::vector<std::string> stats_manifests;
  stats->add_option("--manifest", stats_manifests, "Manifest file(s)")->required();

  // ---- augment --------------------------------------------------------
  auto* augment = app.add_subcommand("augment", "Expand a manifest with an augmentation recipe");
  std::string aug_manifest, aug_out, aug_rir_pool, aug_noise_pool;
  uint64_t aug_seed = 0;
  int aug_jobs = 1, aug_copies = 0;
  bool aug_reverb = false, aug_noise = false;
  double aug_snr_low = 5.0, aug_snr_high = 20.0;
  std::vector<double> aug_speeds;
  augment->add_option("--manifest", aug_manifest, "Source manifest")->required();
  augment->add_option("--out", aug_out, "Output directory")->required();
  augment->add_option("--seed", aug_seed, "Recipe seed");
  augment->add_option("--jobs", aug_jobs, "Worker threads");
  augment->add_option("--speed", aug_speeds, "Speed factor (repeatable)");
  augment->add_option("--copies", aug_copies, "Number of distorted copies per base version");
  augment->add_flag("--reverb", aug_reverb, "Copies get reverberation");
  augment->add_flag("--noise", aug_noise, "Copies get additive noise");
  augment->add_option("--snr-low", aug_snr_low, "Copy SNR range low (dB)");
  augment->add_option("--snr-high", aug_snr_high, "Copy SNR range high (dB)");
  augment->add_option("--rir-pool", aug_rir_pool, "RIR pool directory");
  augment->add_option("--noise-pool", aug_noise_pool, "Noise pool directory");

  // ---- featurize ------------------------------------------------------
  auto* featurize = app.add_subcommand("featurize", "Write MFCC feature files for a manifest");
  std::string feat_manifest, feat_out;
  int feat_jobs = 1;
  featurize->add_option("--manifest", feat_manifest, "Manifest file")->required();
  featurize->add_option("--out", feat_out, "Output directory")->required();
  featurize->add_option("--jobs", feat_jobs, "Worker threads");

  // ---- train ----------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Run the first N configured stages");
  std::string train_config;
  std::optional<uint64_t> train_seed;
  std::optional<std::string> train_out;
  std::optional<int> train_jobs;
  int train_stages = -1;
  train_cmd->add_option("--config", train_config, "Pipeline config file")->required();
  train_cmd->add_option("--stages", train_stages, "How many stages to run (default: all)");
  train_cmd->add_option("--seed", train_seed, "Override the config seed");
  train_cmd->add_option("--out", train_out, "Override the output directory");
  train_cmd->add_option("--jobs", train_jobs, "Override worker threads");

  // ---- transfer -------------------------------------------------------
  auto* transfer = app.add_subcommand("transfer", "Checkpoint surgery between phone sets");
  std::string tr_source, tr_out, tr_phones, tr_mode = "hidden";
  uint64_t tr_seed = 0;
  transfer->add_option("--source", tr_source, "Source checkpoint")->required();
  transfer->add_option("--out", tr_out, "Output checkpoint")->required();
  transfer->add_option("--mode", tr_mode, "hidden | full")
      ->check(CLI::IsMember({"hidden", "full"}));
  transfer->add_option("--phones", tr_phones, "New phone set (hidden transfer)");
  transfer->add_option("--seed", tr_seed, "Output-layer init seed (hidden transfer)");

  // ---- pipeline -------------------------------------------------------
  auto* pipeline = app.add_subcommand("pipeline", "Run the full staged pipeline");
  std::string pl_config;
  std::optional<uint64_t> pl_seed;
  std::optional<std::string> pl_out;
  std::optional<int> pl_jobs;
  pipeline->add_option("--config", pl_config, "Pipeline config file")->required();
  pipeline->add_option("--seed", pl_seed, "Override the config seed");
  pipeline->add_option("--out", pl_out, "Override the output directory");
  pipeline->add_option("--jobs", pl_jobs, "Override worker threads");

  // ---- ablate ---------------------------------------------------------
  auto* ablate = app.add_subcommand("ablate", "Run the setup comparison matrix");
  std::string ab_config, ab_setups = "all";
  std::optional<uint64_t> ab_seed;
  std::optional<std::string> ab_out;
  std::optional<int> ab_jobs;
  ablate->add_option("--config", ab_config, "Pipeline config file")->required();
  ablate->add_option("--setups", ab_setups, "'all' or comma-separated setup names");
  ablate->add_option("--seed", ab_seed, "Override the config seed");
  ablate->add_option("--out", ab_out, "Override the output directory");
  ablate->add_option("--jobs", ab_jobs, "Override worker threads");

  // ---- swap-ivec ------------------------------------------------------
  auto* swap = app.add_subcommand("swap-ivec", "Extractor swap experiment (4-cell grid)");
  std::string sw_config;
  std::optional<uint64_t> sw_seed;
  std::optional<std::string> sw_out;
  std::optional<int> sw_jobs;
  bool sw_override = false;
  swap->add_option("--config", sw_config, "Pipeline config file")->required();
  swap->add_option("--seed", sw_seed, "Override the config seed");
  swap->add_option("--out", sw_out, "Override the output directory");
  swap->add_option("--jobs", sw_jobs, "Override worker threads");
  swap->add_flag("--override-fingerprint", sw_override,
                 "Acknowledge mismatched extractor/model pairings");

  // ---- score ----------------------------------------------------------
  auto* score = app.add_subcommand("score", "WER between reference and hypothesis files");
  std::string sc_ref, sc_hyp;
  score->add_option("--ref", sc_ref, "Reference text, one utterance per line")->required();
  score->add_option("--hyp", sc_hyp, "Hypothesis text, one utterance per line")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      preset.jobs = synth_jobs;
      fs::path cfg = make_benchmark(synth_out, synth_seed, preset);
      write_run_manifest(synth_out, "synth",
                         json{{"seed", synth_seed},
                              {"jobs", synth_jobs},
                              {"sample_rate", preset.sample_rate},
                              {"hours_a", preset.hours_language_a},
                              {"hours_broadcast", preset.hours_broadcast_b},
                              {"hours_target", preset.hours_target_b}});
      std::cout << cfg.string() << "\n";
    } else if (*stats) {
      for (const auto& path : stats_manifests) {
        Manifest m = load_manifest(path);
        std::cout << format_stats_row(m.name, m) << "\n";
      }
    } else if (*augment) {
      Manifest src = load_manifest(aug_manifest);
      AugmentationRecipe recipe;
      recipe.seed = aug_seed;
      recipe.speed_factors = aug_speeds;
      for (int c = 0; c < aug_copies; ++c) {
        CopySpec cs;
        cs.reverb = aug_reverb;
        cs.noise = aug_noise;
        cs.snr = {aug_snr_low, aug_snr_high};
        recipe.copies.push_back(cs);
      }
      RirPool rirs;
      NoisePool noises;
      if (aug_reverb && aug_copies > 0) {
        if (aug_rir_pool.empty()) throw std::runtime_error("--reverb needs --rir-pool");
        rirs = load_rir_pool(aug_rir_pool);
      }
      if (aug_noise && aug_copies > 0) {
        if (aug_noise_pool.empty()) throw std::runtime_error("--noise needs --noise-pool");
        noises = load_noise_pool(aug_noise_pool);
      }
      Manifest out = apply_recipe(src, recipe, aug_reverb ? &rirs : nullptr,
                                  aug_noise ? &noises : nullptr, aug_out, aug_jobs);
      save_manifest(out, fs::path(aug_out) / "manifest.tsv");
      write_run_manifest(aug_out, "augment",
                         json{{"manifest", aug_manifest},
                              {"seed", aug_seed},
                              {"speeds", aug_speeds},
                              {"copies", aug_copies},
                              {"entries", out.entries.size()}});
      std::cout << out.entries.size() << " entries -> "
                << (fs::path(aug_out) / "manifest.tsv").string() << "\n";
    } else if (*featurize) {
      Manifest m = load_manifest(feat_manifest);
      fs::create_directories(feat_out);
      FeatureConfig cfg;
      for (const auto& u : m.entries) {
        AudioSignal audio = read_wav(resolve_audio(m, u));
        save_features(compute_mfcc(audio, cfg), fs::path(feat_out) / (u.id + ".feat"));
      }
      write_run_manifest(feat_out, "featurize",
                         json{{"manifest", feat_manifest}, {"entries", m.entries.size()}});
      std::cout << m.entries.size() << " feature files written\n";
    } else if (*train_cmd) {
      PipelineConfig pc =
          load_config_with_overrides(train_config, train_seed, train_out, train_jobs);
      size_t n = train_stages < 0 ? pc.stages.size()
                                  : std::min<size_t>(pc.stages.size(),
                                                     static_cast<size_t>(train_stages));
      if (n == 0) throw std::runtime_error("train: no stages selected");
      write_run_manifest(pc.out_dir, "train", resolved_pipeline_json(pc, train_config));
      StageResult prev;
      bool have_prev = false;
      for (size_t i = 0; i < n; ++i) {
        StageResult res =
            run_stage(pc, pc.stages[i], static_cast<int>(i), have_prev ? &prev : nullptr);
        std::cout << pc.stages[i].name << (res.cached ? " (cached) " : " ") << "-> "
                  << res.checkpoint.string() << "\n";
        prev = std::move(res);
        have_prev = true;
      }
    } else if (*transfer) {
      auto [model, state] = load_checkpoint(tr_source);
      AcousticModel out_model;
      if (tr_mode == "hidden") {
        if (tr_phones.empty()) throw std::runtime_error("hidden transfer needs --phones");
        out_model = transfer_hidden(model, load_phone_set(tr_phones), tr_seed);
      } else {
        out_model = transfer_full(model);
      }
      save_checkpoint(out_model, TrainState{}, tr_out);
      std::cout << tr_out << "\n";
    } else if (*pipeline) {
      PipelineConfig pc = load_config_with_overrides(pl_config, pl_seed, pl_out, pl_jobs);
      write_run_manifest(pc.out_dir, "pipeline", resolved_pipeline_json(pc, pl_config));
      RunReport rep = run_pipeline(pc);
      std::cout << render_table({rep});
    } else if (*ablate) {
      PipelineConfig pc = load_config_with_overrides(ab_config, ab_seed, ab_out, ab_jobs);
      std::vector<AblationSpec> specs;
      if (ab_setups == "all") {
        specs = table2_setups();
      } else {
        std::vector<AblationSpec> known = table2_setups();
        std::string rest = ab_setups;
        while (!rest.empty()) {
          size_t comma = rest.find(',');
          std::string name = rest.substr(0, comma);
          rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
          bool found = false;
          for (const auto& k : known) {
            if (k.name == name) {
              specs.push_back(k);
              found = true;
            }
          }
          if (!found) throw std::runtime_error("ablate: unknown setup '" + name + "'");
        }
      }
      write_run_manifest(pc.out_dir, "ablate", resolved_pipeline_json(pc, ab_config));
      std::vector<RunReport> reports = run_ablation(pc, specs);
      std::cout << render_table(reports);
    } else if (*swap) {
      if (!sw_override) {
        // The grid deliberately contains mismatched extractor/model cells;
        // require explicit acknowledgement before scoring them.
        throw std::runtime_error(
            "swap-ivec: the grid evaluates mismatched extractor/model "
            "pairings; rerun with --override-fingerprint to accept that");
      }
      PipelineConfig pc = load_config_with_overrides(sw_config, sw_seed, sw_out, sw_jobs);
      write_run_manifest(pc.out_dir, "swap-ivec", resolved_pipeline_json(pc, sw_config));
      SwapReport rep = extractor_swap_experiment(pc);
      std::cout << render_swap_table(rep);
    } else if (*score) {
      std::vector<std::string> refs = read_lines(sc_ref);
      std::vector<std::string> hyps = read_lines(sc_hyp);
      if (refs.size() != hyps.size()) {
        throw std::runtime_error("score: line counts differ between --ref and --hyp");
      }
      NormalizationRules rules;
      WerReport pooled;
      for (size_t i = 0; i < refs.size(); ++i) {
        WerReport r = wer(normalize(refs[i], rules), normalize(hyps[i], rules));
        pooled.substitutions += r.substitutions;
        pooled.deletions += r.deletions;
        pooled.insertions += r.insertions;
        pooled.reference_words += r.reference_words;
      }
      std::printf("WER %.2f\n", 100.0 * pooled.wer());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
