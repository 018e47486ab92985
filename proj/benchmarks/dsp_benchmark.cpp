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

#include <vector>

#include <benchmark/benchmark.h>

#include "xladapt/fft.hpp"
#include "xladapt/rng.hpp"

namespace {

std::vector<double> random_signal(size_t n, uint64_t seed) {
  xladapt::Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

void BM_DirectConvolve(benchmark::State& state) {
  auto x = random_signal(static_cast<size_t>(state.range(0)), 1);
  auto h = random_signal(512, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(xladapt::direct_convolve(x, h));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_OverlapAddConvolve(benchmark::State& state) {
  auto x = random_signal(static_cast<size_t>(state.range(0)), 1);
  auto h = random_signal(512, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(xladapt::overlap_add_convolve(x, h));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_DirectConvolve)->Arg(8000)->Arg(32000)->Arg(128000);
BENCHMARK(BM_OverlapAddConvolve)->Arg(8000)->Arg(32000)->Arg(128000);
