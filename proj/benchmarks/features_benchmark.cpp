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

#include <benchmark/benchmark.h>

#include "xladapt/features.hpp"
#include "xladapt/rng.hpp"

namespace {

xladapt::AudioSignal random_audio(double seconds, int sr, uint64_t seed) {
  xladapt::AudioSignal x;
  x.sample_rate = sr;
  x.samples.resize(static_cast<size_t>(seconds * sr));
  xladapt::Rng rng(seed);
  for (auto& v : x.samples) v = rng.uniform(-0.5, 0.5);
  return x;
}

void BM_Mfcc(benchmark::State& state) {
  xladapt::FeatureConfig cfg;
  auto x = random_audio(static_cast<double>(state.range(0)), 16000, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(xladapt::compute_mfcc(x, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));  // audio seconds
}

}  // namespace

BENCHMARK(BM_Mfcc)->Arg(1)->Arg(5)->Arg(30);
