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

#ifndef XLADAPT_RECIPE_HPP_
#define XLADAPT_RECIPE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xladapt/dsp.hpp"
#include "xladapt/manifest.hpp"

namespace xladapt {

// Pool directories hold wav files plus an index.txt:
//   RIRs:   id <tab> file <tab> room_id <tab> position_id
//   noises: id <tab> file <tab> label
struct RirPool {
  std::vector<RoomImpulseResponse> rirs;
  // Rooms that have at least two positions (required to draw h and h_tilde).
  std::vector<std::string> room_ids() const;
};

struct NoisePool {
  std::vector<NoiseClip> clips;
};

RirPool load_rir_pool(const std::filesystem::path& dir);
NoisePool load_noise_pool(const std::filesystem::path& dir);

// Seeded exponentially-decaying-noise RIRs, `rooms` rooms at
// `positions_per_room` positions each, RT60 drawn in [0.2, 0.8] s per room.
void synthesize_rir_pool(const std::filesystem::path& dir, int rooms, int positions_per_room,
                         int sample_rate, uint64_t seed);

// Seeded one-pole-lowpassed noise clips.
void synthesize_noise_pool(const std::filesystem::path& dir, int clips, double clip_seconds,
                           int sample_rate, uint64_t seed);

struct CopySpec {
  bool reverb = false;
  bool noise = false;
  SnrRange snr{};
  std::vector<std::string> rir_ids;  // room_id/position_id filter; empty = whole pool
};

struct AugmentationRecipe {
  std::vector<CopySpec> copies;
  std::vector<double> speed_factors;  // 1.0 (the clean original) is always implied
  uint64_t seed = 0;
};

// Expands a manifest to clean + augmented entries. Each speed factor adds a
// resampled base version of every utterance; each copy spec adds one
// distorted entry per base version. Per-entry draws (room, position pair,
// noise clip, SNR, noise offset) are pure functions of
// (recipe.seed, utterance id, copy index), so results do not depend on
// execution order or job count. New audio is written under out_dir; frame
// label sidecars are copied (reverb/noise keep timing) or time-remapped
// (speed). Original entries are passed through untouched.
Manifest apply_recipe(const Manifest& m, const AugmentationRecipe& r, const RirPool* rirs,
                      const NoisePool* noises, const std::filesystem::path& out_dir,
                      int jobs = 1);

}  // namespace xladapt

#endif  // XLADAPT_RECIPE_HPP_
