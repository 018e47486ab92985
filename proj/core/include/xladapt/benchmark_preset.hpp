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

#ifndef XLADAPT_BENCHMARK_PRESET_HPP_
#define XLADAPT_BENCHMARK_PRESET_HPP_

#include <cstdint>
#include <filesystem>

namespace xladapt {

// Sizing knobs for the default synthetic benchmark. The defaults are tuned
// so the full ablation matrix finishes in minutes on a laptop while keeping
// a clear transfer-vs-scratch margin.
struct BenchmarkPresetOptions {
  int sample_rate = 8000;
  double hours_language_a = 0.080;   // large source-language corpus (clean)
  double hours_broadcast_b = 0.080;  // target-language broadcast corpus (clean)
  double hours_target_b = 0.020;     // target-domain corpus (reverb+noise+tilt)
  double target_test_fraction = 0.4;
  int jobs = 1;
};

// Generates two related synthetic languages (A, and B sharing part of A's
// phone inventory), three corpora (A, B-broadcast, B-target with a domain
// shift), RIR/noise pools, a speaker-disjoint target train/test split, and a
// ready-to-run pipeline config. Fully deterministic given the seed.
// Returns the path of the written pipeline config.
std::filesystem::path make_benchmark(const std::filesystem::path& out_dir, uint64_t seed,
                                     const BenchmarkPresetOptions& opt = {});

}  // namespace xladapt

#endif  // XLADAPT_BENCHMARK_PRESET_HPP_
