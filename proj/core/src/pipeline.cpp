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

#include "xladapt/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "xladapt/audio.hpp"
#include "xladapt/labels.hpp"
#include "xladapt/rng.hpp"
#include "xladapt/synth.hpp"
#include "xladapt/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace xladapt {

namespace {

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pipeline: cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a(buf.data(), buf.size());
}

std::string transfer_name(TransferMode t) {
  switch (t) {
    case TransferMode::kNone: return "none";
    case TransferMode::kHidden: return "hidden";
    case TransferMode::kFull: return "full";
  }
  return "?";
}

bool recipe_is_identity(const AugmentationRecipe& r) {
  return r.copies.empty() && r.speed_factors.empty();
}

// Canonical text form of everything a stage's output depends on; its hash is
// the content address for caching.
std::string stage_descriptor(const PipelineConfig& pc, const StageConfig& cfg, int stage_index,
                             const std::string& predecessor_key) {
  std::ostringstream d;
  d.precision(17);
  d << "v2;seed=" << pc.seed << ";idx=" << stage_index << ";pred=" << predecessor_key;
  const FeatureConfig& f = pc.features;
  d << ";feat=" << f.mfcc_dim << "," << f.frame_length_ms << "," << f.frame_shift_ms << ","
    << f.mel_filters << "," << f.pre_emphasis << "," << f.splice_width << "," << f.log_floor
    << "," << f.mel_low_hz << "," << f.embedding_dim;
  d << ";layers=";
  for (const auto& l : pc.layers) {
    if (l.kind == LayerKind::kTdnn) {
      d << "t(";
      for (int o : l.offsets) d << o << " ";
      d << l.dim << ")";
    } else {
      d << "l(" << l.cell_dim << " " << l.proj_dim << ")";
    }
  }
  d << ";stage=" << cfg.name << ";transfer=" << transfer_name(cfg.transfer)
    << ";ext=" << (cfg.extractor == ExtractorMode::kTrainNew ? "new" : "inherit");
  const TrainConfig& t = cfg.train;
  d << ";train=" << t.initial_lr << "," << t.final_lr << "," << t.epochs << "," << t.batch
    << "," << t.bptt_chunk << "," << t.dropout_rate;
  d << ";recipe=seed" << cfg.recipe.seed << ";speeds=";
  for (double s : cfg.recipe.speed_factors) d << s << " ";
  d << ";copies=";
  for (const auto& c : cfg.recipe.copies) {
    d << "(" << c.reverb << c.noise << "," << c.snr.low_db << "," << c.snr.high_db << ",";
    for (const auto& id : c.rir_ids) d << id << " ";
    d << ")";
  }
  d << ";manifest=" << hex64(hash_file(cfg.train_manifest));
  if (!cfg.phone_set.empty()) d << ";phones=" << hex64(hash_file(cfg.phone_set));
  return d.str();
}

// Stage training data with the recipe applied; augmented audio lands under
// aug_dir. Identity recipes return the source manifest untouched.
Manifest prepare_train_manifest(const PipelineConfig& pc, const StageConfig& cfg,
                                int stage_index, const fs::path& aug_dir) {
  Manifest src = load_manifest(cfg.train_manifest);
  if (recipe_is_identity(cfg.recipe)) return src;
  AugmentationRecipe r = cfg.recipe;
  if (r.seed == 0) r.seed = mix_seed(pc.seed, "recipe", static_cast<uint64_t>(stage_index));
  bool wants_reverb = false, wants_noise = false;
  for (const auto& c : r.copies) {
    wants_reverb = wants_reverb || c.reverb;
    wants_noise = wants_noise || c.noise;
  }
  RirPool rirs;
  NoisePool noises;
  if (wants_reverb) {
    if (pc.rir_pool.empty()) throw std::runtime_error("pipeline: recipe needs a RIR pool");
    rirs = load_rir_pool(pc.rir_pool);
  }
  if (wants_noise) {
    if (pc.noise_pool.empty()) throw std::runtime_error("pipeline: recipe needs a noise pool");
    noises = load_noise_pool(pc.noise_pool);
  }
  fs::create_directories(aug_dir);
  return apply_recipe(src, r, wants_reverb ? &rirs : nullptr, wants_noise ? &noises : nullptr,
                      aug_dir, pc.jobs);
}

std::vector<TrainItem> build_train_items(const Manifest& m,
                                         const SpeakerEmbeddingExtractor& ext,
                                         const FeatureConfig& feat,
                                         const std::vector<std::string>& phone_set, int jobs) {
  std::map<std::string, int> phone_index;
  for (size_t k = 0; k < phone_set.size(); ++k) phone_index[phone_set[k]] = static_cast<int>(k);
  std::vector<TrainItem> items(m.entries.size());
  parallel_for(m.entries.size(), jobs, [&](size_t i) {
    const Utterance& u = m.entries[i];
    AudioSignal audio = read_wav(resolve_audio(m, u));
    FeatureMatrix mfcc = compute_mfcc(audio, feat);
    SpeakerEmbedding emb = embed_stats(utterance_stats(mfcc), ext);
    FeatureMatrix input = assemble_input(cepstral_mean_normalize(mfcc), emb, feat);
    std::vector<std::string> labels = read_labels(label_path_for(resolve_audio(m, u)));
    if (static_cast<long>(labels.size()) != input.frames()) {
      throw std::runtime_error("pipeline: label/frame count mismatch for " + u.id);
    }
    items[i].input = std::move(input.values);
    items[i].labels.resize(labels.size());
    for (size_t t = 0; t < labels.size(); ++t) {
      auto it = phone_index.find(labels[t]);
      if (it == phone_index.end()) {
        throw std::runtime_error("pipeline: label phone '" + labels[t] +
                                 "' missing from the stage phone set (" + u.id + ")");
      }
      items[i].labels[t] = it->second;
    }
  });
  return items;
}

void save_log(const TrainLog& log, const fs::path& path) {
  json j;
  j["initial_lr"] = log.initial_lr;
  j["final_lr"] = log.final_lr;
  j["dropout_rate"] = log.dropout_rate;
  j["steps"] = log.steps;
  j["epoch_loss"] = log.epoch_loss;
  j["epoch_lr"] = log.epoch_lr;
  j["first_step_lr"] = log.first_step_lr;
  j["last_step_lr"] = log.last_step_lr;
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("pipeline: cannot write " + path.string());
}

TrainLog load_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("pipeline: cannot open " + path.string());
  json j = json::parse(in);
  TrainLog log;
  log.initial_lr = j.at("initial_lr").get<double>();
  log.final_lr = j.at("final_lr").get<double>();
  log.dropout_rate = j.at("dropout_rate").get<double>();
  log.steps = j.at("steps").get<int>();
  log.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
  log.epoch_lr = j.at("epoch_lr").get<std::vector<double>>();
  log.first_step_lr = j.at("first_step_lr").get<double>();
  log.last_step_lr = j.at("last_step_lr").get<double>();
  return log;
}

int stage_slot(const std::string& name) {
  if (name == "Stage1") return 0;
  if (name == "Stage2") return 1;
  if (name == "Stage3") return 2;
  return -1;
}

std::string slugify(const std::string& name) {
  std::string s;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!s.empty() && s.back() != '-') {
      s.push_back('-');
    }
  }
  while (!s.empty() && s.back() == '-') s.pop_back();
  return s;
}

std::vector<TestSetReport> evaluate_test_sets(const PipelineConfig& pc, const AcousticModel& m,
                                              const SpeakerEmbeddingExtractor& ext,
                                              bool override_fingerprint) {
  if (pc.test_sets.empty()) throw std::runtime_error("pipeline: no test sets configured");
  std::vector<TestSetReport> out;
  NormalizationRules rules;
  for (const auto& ts : pc.test_sets) {
    Manifest test = load_manifest(ts.manifest);
    Lexicon lex = load_lexicon(ts.lexicon);
    EvalResult er =
        evaluate(m, ext, test, lex, pc.features, rules, override_fingerprint, pc.jobs);
    out.push_back({ts.name, er.pooled, er.frame_accuracy});
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("pipeline: cannot write " + path.string());
}

}  // namespace

StageResult run_stage(const PipelineConfig& pc, const StageConfig& cfg, int stage_index,
                      const StageResult* predecessor) {
  if (cfg.extractor == ExtractorMode::kInherit && predecessor == nullptr) {
    throw std::runtime_error("run_stage: extractor inherit requires a predecessor");
  }
  if (cfg.transfer != TransferMode::kNone && predecessor == nullptr) {
    throw std::runtime_error("run_stage: weight transfer requires a predecessor");
  }

  const fs::path cache = pc.out_dir / "cache";
  fs::create_directories(cache);
  const std::string desc =
      stage_descriptor(pc, cfg, stage_index, predecessor ? predecessor->cache_key : "");
  const std::string key = hex64(fnv1a(desc));
  const fs::path dir = cache / key;

  StageResult result;
  result.cache_key = key;
  result.cached = fs::exists(dir / "model.ckpt");

  if (!result.cached) {
    const fs::path work = cache / (key + ".tmp");
    fs::remove_all(work);
    fs::create_directories(work);
    write_text(work / "stage.desc", desc + "\n");

    Manifest train_m = prepare_train_manifest(pc, cfg, stage_index, work / "aug");

    SpeakerEmbeddingExtractor ext;
    if (cfg.extractor == ExtractorMode::kTrainNew) {
      ext = train_embedding_extractor(train_m, pc.features, pc.features.embedding_dim,
                                      mix_seed(pc.seed, "extractor", stage_index));
    } else {
      ext = predecessor->extractor;
    }

    std::vector<std::string> phones;
    if (cfg.transfer == TransferMode::kFull) {
      phones = predecessor->model.phone_set;
      if (!cfg.phone_set.empty() && load_phone_set(cfg.phone_set) != phones) {
        throw std::runtime_error("run_stage: full transfer cannot change the phone set (" +
                                 cfg.name + ")");
      }
    } else {
      if (cfg.phone_set.empty()) {
        throw std::runtime_error("run_stage: stage " + cfg.name + " needs a phone set");
      }
      phones = load_phone_set(cfg.phone_set);
    }

    AcousticModel model;
    switch (cfg.transfer) {
      case TransferMode::kNone:
        model = make_model(pc.features.input_dim(), pc.layers, phones,
                           mix_seed(pc.seed, "model-init", stage_index));
        model.extractor_fingerprint = ext.fingerprint;
        break;
      case TransferMode::kHidden:
        model = transfer_hidden(predecessor->model, phones,
                                mix_seed(pc.seed, "output-init", stage_index));
        break;
      case TransferMode::kFull:
        model = transfer_full(predecessor->model);
        break;
    }

    std::vector<TrainItem> items =
        build_train_items(train_m, ext, pc.features, model.phone_set, pc.jobs);

    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(pc.seed, "train", stage_index);
    if (cfg.name == "Stage3") {
      if (predecessor != nullptr) {
        // Fine-tuning starts 100x below where the previous stage ended; the
        // configured decay ratio is preserved.
        const double ratio = tc.final_lr / tc.initial_lr;
        tc.initial_lr = predecessor->log.last_step_lr / 100.0;
        tc.final_lr = tc.initial_lr * ratio;
      }
      tc.dropout_rate = 0.0;
    }

    TrainLog log = train(model, items, tc);

    TrainState state;
    state.last_lr = log.last_step_lr;
    state.epoch = static_cast<uint32_t>(tc.epochs);
    save_checkpoint(model, state, work / "model.ckpt");
    save_extractor(ext, work / "extractor.bin");
    save_log(log, work / "log.json");

    std::error_code ec;
    fs::rename(work, dir, ec);
    if (ec) {
      // A concurrent run published the same stage first; use its copy.
      if (fs::exists(dir / "model.ckpt")) {
        fs::remove_all(work);
      } else {
        throw std::runtime_error("run_stage: cannot publish cache entry " + dir.string() +
                                 ": " + ec.message());
      }
    }
  }

  result.model = load_checkpoint(dir / "model.ckpt").first;
  result.extractor = load_extractor(dir / "extractor.bin");
  result.log = load_log(dir / "log.json");
  result.checkpoint = dir / "model.ckpt";
  return result;
}

namespace {

RunReport run_chain(const PipelineConfig& pc, const std::vector<StageConfig>& stages,
                    const std::vector<int>& stage_indices, const std::string& setup_name,
                    const std::array<bool, 3>& included) {
  RunReport report;
  report.setup_name = setup_name;
  report.stages_included = included;

  const fs::path ckpt_dir = pc.out_dir / "checkpoints" / slugify(setup_name);
  fs::create_directories(ckpt_dir);

  StageResult prev;
  bool have_prev = false;
  for (size_t i = 0; i < stages.size(); ++i) {
    StageResult res = run_stage(pc, stages[i], stage_indices[i], have_prev ? &prev : nullptr);
    report.stage_names.push_back(stages[i].name);
    report.stage_logs.push_back(res.log);
    fs::copy_file(res.checkpoint, ckpt_dir / (slugify(stages[i].name) + ".ckpt"),
                  fs::copy_options::overwrite_existing);
    prev = std::move(res);
    have_prev = true;
  }
  if (!have_prev) throw std::runtime_error("pipeline: no stages to run");

  report.tests = evaluate_test_sets(pc, prev.model, prev.extractor, false);
  return report;
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg, const std::string& setup_name) {
  if (cfg.stages.empty()) throw std::runtime_error("pipeline: no stages configured");
  fs::create_directories(cfg.out_dir);
  std::array<bool, 3> included{false, false, false};
  std::vector<int> indices;
  for (size_t i = 0; i < cfg.stages.size(); ++i) {
    int slot = stage_slot(cfg.stages[i].name);
    if (slot >= 0) included[static_cast<size_t>(slot)] = true;
    indices.push_back(static_cast<int>(i));
  }
  RunReport report = run_chain(cfg, cfg.stages, indices, setup_name, included);
  std::vector<RunReport> reports{report};
  write_text(cfg.out_dir / "report.txt", render_table(reports));
  write_text(cfg.out_dir / "report.ndjson", render_records(reports));
  return report;
}

std::vector<AblationSpec> table2_setups() {
  return {
      {"Baseline Broadcast", {false, true, false}},
      {"Baseline Oral History", {false, false, true}},
      {"Removing Stage 1", {false, true, true}},
      {"Removing Stage 2", {true, false, true}},
      {"Removing Stage 3", {true, true, false}},
      {"Proposed", {true, true, true}},
  };
}

std::vector<RunReport> run_ablation(const PipelineConfig& base,
                                    const std::vector<AblationSpec>& specs) {
  if (specs.empty()) throw std::runtime_error("run_ablation: empty spec set");
  if (base.stages.size() != 3) {
    throw std::runtime_error("run_ablation: base config must define the three stages");
  }
  for (size_t i = 0; i < 3; ++i) {
    if (stage_slot(base.stages[i].name) != static_cast<int>(i)) {
      throw std::runtime_error("run_ablation: base stages must be Stage1, Stage2, Stage3");
    }
  }
  fs::create_directories(base.out_dir);

  std::vector<RunReport> reports;
  for (const auto& spec : specs) {
    std::vector<StageConfig> chain;
    std::vector<int> indices;
    for (int i = 0; i < 3; ++i) {
      if (!spec.include[static_cast<size_t>(i)]) continue;
      chain.push_back(base.stages[static_cast<size_t>(i)]);
      indices.push_back(i);
    }
    if (chain.empty()) throw std::runtime_error("run_ablation: spec includes no stages");

    // The first surviving stage starts from scratch with its own extractor.
    chain[0].transfer = TransferMode::kNone;
    chain[0].extractor = ExtractorMode::kTrainNew;

    // A full transfer across a phone-set change (Stage3 directly after
    // Stage1) becomes a hidden transfer with a fresh output layer. Phone sets
    // are compared by content: different corpora of the same language list
    // the same phones in distinct files.
    std::vector<std::string> prev_phones;
    if (!chain[0].phone_set.empty()) prev_phones = load_phone_set(chain[0].phone_set);
    for (size_t i = 1; i < chain.size(); ++i) {
      std::vector<std::string> cur =
          chain[i].phone_set.empty() ? prev_phones : load_phone_set(chain[i].phone_set);
      if (chain[i].transfer == TransferMode::kFull && cur != prev_phones) {
        chain[i].transfer = TransferMode::kHidden;
      }
      prev_phones = cur;
    }

    reports.push_back(run_chain(base, chain, indices, spec.name, spec.include));
  }

  write_text(base.out_dir / "ablation_report.txt", render_table(reports));
  write_text(base.out_dir / "ablation_report.ndjson", render_records(reports));
  return reports;
}

SwapReport extractor_swap_experiment(const PipelineConfig& cfg) {
  if (cfg.stages.size() < 2) {
    throw std::runtime_error("swap experiment: needs the first two stages configured");
  }
  fs::create_directories(cfg.out_dir);
  StageResult stage1 = run_stage(cfg, cfg.stages[0], 0, nullptr);

  const StageConfig& s2 = cfg.stages[1];
  Manifest train_m = prepare_train_manifest(cfg, s2, 1, cfg.out_dir / "swap" / "aug");
  if (s2.phone_set.empty()) {
    throw std::runtime_error("swap experiment: second stage needs a phone set");
  }
  std::vector<std::string> phones = load_phone_set(s2.phone_set);

  SpeakerEmbeddingExtractor ext_a = stage1.extractor;
  SpeakerEmbeddingExtractor ext_b = train_embedding_extractor(
      train_m, cfg.features, cfg.features.embedding_dim, mix_seed(cfg.seed, "extractor-b"));

  SwapReport report;
  int cell_index = 0;
  for (const std::string& init : {std::string("transferred"), std::string("random")}) {
    for (const std::string& which : {std::string("A"), std::string("B")}) {
      const SpeakerEmbeddingExtractor& ext = which == "A" ? ext_a : ext_b;
      AcousticModel model;
      if (init == "random") {
        model = make_model(cfg.features.input_dim(), cfg.layers, phones,
                           mix_seed(cfg.seed, "swap-init", cell_index));
        model.extractor_fingerprint = ext.fingerprint;
      } else {
        // Transferred models keep the fingerprint of the extractor their
        // source was trained with; pairing them with the other extractor is
        // the mismatched condition and needs the override at evaluation.
        model = transfer_hidden(stage1.model, phones,
                                mix_seed(cfg.seed, "swap-output", cell_index));
      }
      std::vector<TrainItem> items =
          build_train_items(train_m, ext, cfg.features, model.phone_set, cfg.jobs);
      TrainConfig tc = s2.train;
      tc.seed = mix_seed(cfg.seed, "swap-train", cell_index);
      train(model, items, tc);

      SwapCell cell;
      cell.init = init;
      cell.extractor = which;
      cell.override_used = model.extractor_fingerprint != ext.fingerprint;
      cell.tests = evaluate_test_sets(cfg, model, ext, cell.override_used);
      report.cells.push_back(std::move(cell));
      ++cell_index;
    }
  }
  write_text(cfg.out_dir / "swap_report.txt", render_swap_table(report));
  return report;
}

std::string render_table(const std::vector<RunReport>& reports) {
  std::vector<std::string> test_names;
  if (!reports.empty()) {
    for (const auto& t : reports.front().tests) test_names.push_back(t.name);
  }
  size_t name_w = std::string("Setup").size();
  for (const auto& r : reports) name_w = std::max(name_w, r.setup_name.size());

  std::ostringstream out;
  out << std::string(name_w - 5, ' ') << "Setup | S1 | S2 | S3";
  for (const auto& n : test_names) out << " | " << n;
  out << "\n";
  for (const auto& r : reports) {
    out << std::string(name_w - r.setup_name.size(), ' ') << r.setup_name;
    for (int i = 0; i < 3; ++i) {
      out << " |  " << (r.stages_included[static_cast<size_t>(i)] ? 'x' : ' ');
    }
    for (size_t i = 0; i < r.tests.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * r.tests[i].wer.wer());
      std::string v(buf);
      size_t w = std::max(test_names[i].size(), v.size());
      out << " | " << std::string(w - v.size(), ' ') << v;
    }
    out << "\n";
  }
  return out.str();
}

std::string render_swap_table(const SwapReport& report) {
  std::ostringstream out;
  out << "model init  | extractor | override";
  if (!report.cells.empty()) {
    for (const auto& t : report.cells.front().tests) out << " | " << t.name;
  }
  out << "\n";
  for (const auto& c : report.cells) {
    out << c.init << std::string(12 - c.init.size(), ' ') << "| " << c.extractor
        << "         | " << (c.override_used ? "yes     " : "no      ");
    for (const auto& t : c.tests) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * t.wer.wer());
      std::string v(buf);
      size_t w = std::max(t.name.size(), v.size());
      out << " | " << std::string(w - v.size(), ' ') << v;
    }
    out << "\n";
  }
  return out.str();
}

std::string render_records(const std::vector<RunReport>& reports) {
  std::ostringstream out;
  for (const auto& r : reports) {
    for (size_t i = 0; i < r.stage_logs.size(); ++i) {
      json j;
      j["type"] = "stage";
      j["setup"] = r.setup_name;
      j["stage"] = r.stage_names[i];
      j["initial_lr"] = r.stage_logs[i].initial_lr;
      j["final_lr"] = r.stage_logs[i].final_lr;
      j["dropout_rate"] = r.stage_logs[i].dropout_rate;
      j["steps"] = r.stage_logs[i].steps;
      j["first_step_lr"] = r.stage_logs[i].first_step_lr;
      j["last_step_lr"] = r.stage_logs[i].last_step_lr;
      j["epoch_loss"] = r.stage_logs[i].epoch_loss;
      out << j.dump() << "\n";
    }
    for (const auto& t : r.tests) {
      json j;
      j["type"] = "result";
      j["setup"] = r.setup_name;
      j["test_set"] = t.name;
      j["sub"] = t.wer.substitutions;
      j["del"] = t.wer.deletions;
      j["ins"] = t.wer.insertions;
      j["ref_words"] = t.wer.reference_words;
      j["wer"] = t.wer.wer();
      j["frame_accuracy"] = t.frame_accuracy;
      out << j.dump() << "\n";
    }
  }
  return out.str();
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("pipeline: cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("pipeline: bad config " + path.string() + ": " + e.what());
  }
  const fs::path base = fs::absolute(path).parent_path();
  auto resolve = [&](const std::string& p) -> fs::path {
    fs::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  PipelineConfig pc;
  pc.seed = j.value("seed", uint64_t{0});
  pc.jobs = j.value("jobs", 1);
  pc.out_dir = j.contains("out_dir") ? resolve(j.at("out_dir").get<std::string>()) : base;
  if (j.contains("rir_pool")) pc.rir_pool = resolve(j.at("rir_pool").get<std::string>());
  if (j.contains("noise_pool")) pc.noise_pool = resolve(j.at("noise_pool").get<std::string>());

  if (j.contains("features")) {
    const json& f = j.at("features");
    pc.features.mfcc_dim = f.value("mfcc_dim", pc.features.mfcc_dim);
    pc.features.frame_length_ms = f.value("frame_length_ms", pc.features.frame_length_ms);
    pc.features.frame_shift_ms = f.value("frame_shift_ms", pc.features.frame_shift_ms);
    pc.features.mel_filters = f.value("mel_filters", pc.features.mel_filters);
    pc.features.pre_emphasis = f.value("pre_emphasis", pc.features.pre_emphasis);
    pc.features.splice_width = f.value("splice_width", pc.features.splice_width);
    pc.features.mel_low_hz = f.value("mel_low_hz", pc.features.mel_low_hz);
    pc.features.embedding_dim = f.value("embedding_dim", pc.features.embedding_dim);
  }

  for (const json& l : j.at("layers")) {
    const std::string type = l.at("type").get<std::string>();
    if (type == "tdnn") {
      pc.layers.push_back(
          tdnn_spec(l.at("offsets").get<std::vector<int>>(), l.at("dim").get<int>()));
    } else if (type == "lstmp") {
      pc.layers.push_back(lstmp_spec(l.at("cell_dim").get<int>(), l.at("proj_dim").get<int>()));
    } else {
      throw std::runtime_error("pipeline: unknown layer type '" + type + "'");
    }
  }

  for (const json& s : j.at("stages")) {
    StageConfig sc;
    sc.name = s.at("name").get<std::string>();
    sc.train_manifest = resolve(s.at("train_manifest").get<std::string>());
    if (s.contains("phone_set")) sc.phone_set = resolve(s.at("phone_set").get<std::string>());
    const std::string transfer = s.value("transfer", std::string("none"));
    if (transfer == "none") {
      sc.transfer = TransferMode::kNone;
    } else if (transfer == "hidden") {
      sc.transfer = TransferMode::kHidden;
    } else if (transfer == "full") {
      sc.transfer = TransferMode::kFull;
    } else {
      throw std::runtime_error("pipeline: unknown transfer mode '" + transfer + "'");
    }
    const std::string ext = s.value("extractor", std::string("train-new"));
    if (ext == "train-new") {
      sc.extractor = ExtractorMode::kTrainNew;
    } else if (ext == "inherit") {
      sc.extractor = ExtractorMode::kInherit;
    } else {
      throw std::runtime_error("pipeline: unknown extractor mode '" + ext + "'");
    }
    if (s.contains("recipe")) {
      const json& r = s.at("recipe");
      sc.recipe.speed_factors = r.value("speed_factors", std::vector<double>{});
      sc.recipe.seed = r.value("seed", uint64_t{0});
      if (r.contains("copies")) {
        for (const json& c : r.at("copies")) {
          CopySpec cs;
          cs.reverb = c.value("reverb", false);
          cs.noise = c.value("noise", false);
          if (c.contains("snr")) {
            cs.snr.low_db = c.at("snr").at(0).get<double>();
            cs.snr.high_db = c.at("snr").at(1).get<double>();
          }
          cs.rir_ids = c.value("rir_ids", std::vector<std::string>{});
          sc.recipe.copies.push_back(std::move(cs));
        }
      }
    }
    const json& t = s.at("train");
    sc.train.initial_lr = t.at("initial_lr").get<double>();
    sc.train.final_lr = t.at("final_lr").get<double>();
    sc.train.epochs = t.at("epochs").get<int>();
    sc.train.batch = t.value("batch", sc.train.batch);
    sc.train.bptt_chunk = t.value("bptt_chunk", sc.train.bptt_chunk);
    sc.train.dropout_rate = t.value("dropout", sc.train.dropout_rate);
    pc.stages.push_back(std::move(sc));
  }

  for (const json& t : j.value("test_sets", json::array())) {
    TestSetConfig ts;
    ts.name = t.at("name").get<std::string>();
    ts.manifest = resolve(t.at("manifest").get<std::string>());
    ts.lexicon = resolve(t.at("lexicon").get<std::string>());
    pc.test_sets.push_back(std::move(ts));
  }

  // Stage invariants from the protocol definition.
  for (size_t i = 0; i < pc.stages.size(); ++i) {
    const StageConfig& sc = pc.stages[i];
    if ((sc.name == "Stage1" || sc.name == "Scratch") && sc.transfer != TransferMode::kNone) {
      throw std::runtime_error("pipeline: " + sc.name + " must use transfer none");
    }
    if (sc.name == "Stage3" && sc.transfer != TransferMode::kFull) {
      throw std::runtime_error("pipeline: Stage3 must use full transfer");
    }
  }
  return pc;
}

}  // namespace xladapt
