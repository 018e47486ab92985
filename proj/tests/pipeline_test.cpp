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

#include <cstring>
#include <filesystem>
#include <fstream>

#include <doctest.h>
#include <json.hpp>

#include "xladapt/benchmark_preset.hpp"

using namespace xladapt;
namespace fs = std::filesystem;

namespace {

fs::path tmp_root() {
  static fs::path d = [] {
    fs::path p = fs::temp_directory_path() / "xladapt_pipeline_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

// One miniature benchmark shared by all cases in this file.
const fs::path& bench_config() {
  static fs::path cfg = [] {
    BenchmarkPresetOptions opt;
    opt.hours_language_a = 0.015;
    opt.hours_broadcast_b = 0.012;
    opt.hours_target_b = 0.015;
    opt.jobs = 4;
    return make_benchmark(tmp_root() / "bench", 21, opt);
  }();
  return cfg;
}

PipelineConfig quick_config(const std::string& out_name, int epochs) {
  PipelineConfig pc = load_pipeline_config(bench_config());
  pc.out_dir = tmp_root() / out_name;
  pc.jobs = 4;
  for (auto& s : pc.stages) s.train.epochs = epochs;
  return pc;
}

bool layers_byte_equal(const std::vector<Layer>& a, const std::vector<Layer>& b) {
  std::string sa, sb;
  auto dump = [](const std::vector<Layer>& layers, std::string& out) {
    for (const auto& l : layers) {
      auto put = [&](const double* p, long n) {
        out.append(reinterpret_cast<const char*>(p), sizeof(double) * static_cast<size_t>(n));
      };
      if (l.spec.kind == LayerKind::kTdnn) {
        put(l.tdnn.weight.data(), l.tdnn.weight.size());
        put(l.tdnn.bias.data(), l.tdnn.bias.size());
      } else {
        put(l.lstmp.w_in.data(), l.lstmp.w_in.size());
        put(l.lstmp.w_rec.data(), l.lstmp.w_rec.size());
        put(l.lstmp.bias.data(), l.lstmp.bias.size());
        put(l.lstmp.peep_in.data(), l.lstmp.peep_in.size());
        put(l.lstmp.peep_forget.data(), l.lstmp.peep_forget.size());
        put(l.lstmp.peep_out.data(), l.lstmp.peep_out.size());
        put(l.lstmp.w_proj.data(), l.lstmp.w_proj.size());
      }
    }
  };
  dump(a, sa);
  dump(b, sb);
  return sa == sb;
}

}  // namespace

TEST_CASE("pipeline config parses the benchmark description") {
  PipelineConfig pc = load_pipeline_config(bench_config());
  REQUIRE(pc.stages.size() == 3);
  CHECK(pc.stages[0].name == "Stage1");
  CHECK(pc.stages[0].transfer == TransferMode::kNone);
  CHECK(pc.stages[1].transfer == TransferMode::kHidden);
  CHECK(pc.stages[1].extractor == ExtractorMode::kInherit);
  CHECK(pc.stages[2].transfer == TransferMode::kFull);
  CHECK(!pc.stages[0].recipe.copies.empty());
  CHECK(!pc.stages[1].recipe.copies.empty());
  REQUIRE(pc.test_sets.size() == 1);
  CHECK(pc.layers.size() == 3);

  // Protocol invariants are enforced at load time.
  std::ifstream in(bench_config());
  nlohmann::json j = nlohmann::json::parse(in);
  j["stages"][2]["transfer"] = "hidden";
  fs::path bad = tmp_root() / "bad.json";
  std::ofstream out(bad);
  out << j.dump();
  out.close();
  CHECK_THROWS(load_pipeline_config(bad));
}

TEST_CASE("stage surgery follows the transfer modes") {
  // Zero-epoch stages leave the initialization observable.
  PipelineConfig pc = quick_config("surgery", 0);

  StageResult s1 = run_stage(pc, pc.stages[0], 0, nullptr);
  CHECK(s1.model.phone_set == load_phone_set(pc.stages[0].phone_set));
  CHECK(s1.model.extractor_fingerprint == s1.extractor.fingerprint);

  StageResult s2 = run_stage(pc, pc.stages[1], 1, &s1);
  CHECK(layers_byte_equal(s1.model.layers, s2.model.layers));
  CHECK(s2.model.phone_set == load_phone_set(pc.stages[1].phone_set));
  CHECK(s2.extractor.fingerprint == s1.extractor.fingerprint);

  StageResult s3 = run_stage(pc, pc.stages[2], 2, &s2);
  CHECK(serialize_weights(s3.model) == serialize_weights(s2.model));

  // Chaining requirements.
  CHECK_THROWS(run_stage(pc, pc.stages[1], 1, nullptr));
}

TEST_CASE("identical stages are cached and reused") {
  PipelineConfig pc = quick_config("cache", 1);
  StageResult first = run_stage(pc, pc.stages[0], 0, nullptr);
  CHECK(!first.cached);
  StageResult again = run_stage(pc, pc.stages[0], 0, nullptr);
  CHECK(again.cached);
  CHECK(serialize_weights(again.model) == serialize_weights(first.model));
  CHECK(again.checkpoint == first.checkpoint);

  // A different seed is a different stage.
  PipelineConfig other = pc;
  other.seed = pc.seed + 1;
  StageResult fresh = run_stage(other, other.stages[0], 0, nullptr);
  CHECK(!fresh.cached);
}

TEST_CASE("full pipeline applies the Stage-3 rules and writes reports") {
  PipelineConfig pc = quick_config("full", 1);
  RunReport rep = run_pipeline(pc);

  REQUIRE(rep.stage_logs.size() == 3);
  CHECK(rep.stages_included == std::array<bool, 3>{true, true, true});
  const TrainLog& s2 = rep.stage_logs[1];
  const TrainLog& s3 = rep.stage_logs[2];
  CHECK(s3.dropout_rate == 0.0);
  CHECK(s3.initial_lr == s2.last_step_lr / 100.0);
  CHECK(s3.first_step_lr == s3.initial_lr);

  REQUIRE(rep.tests.size() == 1);
  CHECK(rep.tests[0].name == "Oral History");
  CHECK(rep.tests[0].wer.reference_words > 0);

  CHECK(fs::exists(pc.out_dir / "report.txt"));
  CHECK(fs::exists(pc.out_dir / "report.ndjson"));
  CHECK(fs::exists(pc.out_dir / "checkpoints" / "proposed" / "stage3.ckpt"));

  std::string table = render_table({rep});
  CHECK(table.find("Setup | S1 | S2 | S3 | Oral History") != std::string::npos);
  CHECK(table.find("Proposed |  x |  x |  x") != std::string::npos);
}

TEST_CASE("ablation derives the reduced chains") {
  PipelineConfig pc = quick_config("ablation", 1);
  std::vector<AblationSpec> specs;
  for (const auto& s : table2_setups()) {
    if (s.name == "Removing Stage 2" || s.name == "Removing Stage 3" || s.name == "Proposed") {
      specs.push_back(s);
    }
  }
  std::vector<RunReport> reports = run_ablation(pc, specs);
  REQUIRE(reports.size() == 3);

  CHECK(reports[0].setup_name == "Removing Stage 2");
  CHECK(reports[0].stage_names == std::vector<std::string>{"Stage1", "Stage3"});
  // Stage3 after Stage1 crosses a phone-set change, so the lr rule applies to
  // a hidden transfer; dropout still forced to zero.
  CHECK(reports[0].stage_logs[1].dropout_rate == 0.0);
  CHECK(reports[0].stage_logs[1].initial_lr ==
        reports[0].stage_logs[0].last_step_lr / 100.0);

  CHECK(reports[1].setup_name == "Removing Stage 3");
  CHECK(reports[1].stage_names == std::vector<std::string>{"Stage1", "Stage2"});

  for (const auto& r : reports) REQUIRE(r.tests.size() == 1);
  CHECK(fs::exists(pc.out_dir / "ablation_report.txt"));

  CHECK_THROWS(run_ablation(pc, {}));
}

TEST_CASE("evaluation rejects mismatched extractors unless overridden") {
  PipelineConfig pc = quick_config("mismatch", 1);
  StageResult s1 = run_stage(pc, pc.stages[0], 0, nullptr);
  StageResult s2 = run_stage(pc, pc.stages[1], 1, &s1);

  // An extractor trained on different data has a different fingerprint.
  Manifest target = load_manifest(pc.stages[2].train_manifest);
  SpeakerEmbeddingExtractor other = train_embedding_extractor(
      target, pc.features, pc.features.embedding_dim, 999);
  REQUIRE(other.fingerprint != s2.model.extractor_fingerprint);

  Manifest test = load_manifest(pc.test_sets[0].manifest);
  Lexicon lex = load_lexicon(pc.test_sets[0].lexicon);
  NormalizationRules rules;
  CHECK_THROWS(evaluate(s2.model, other, test, lex, pc.features, rules, false, 2));
  CHECK_NOTHROW(evaluate(s2.model, other, test, lex, pc.features, rules, true, 2));
}
