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

#ifndef XLADAPT_DSP_HPP_
#define XLADAPT_DSP_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "xladapt/audio.hpp"

namespace xladapt {

struct RoomImpulseResponse {
  std::vector<double> samples;
  int sample_rate = 0;
  std::string room_id;
  std::string position_id;
};

struct NoiseClip {
  std::vector<double> samples;
  int sample_rate = 0;
  std::string label;
};

struct SnrRange {
  double low_db = 0.0;
  double high_db = 0.0;
};

// Reverberates x with h; the full convolution is truncated to len(x) so
// frame labels and transcripts stay time-aligned. Uses the direct form for
// short signals and overlap-add FFT convolution above 8192 samples (the two
// paths agree to 1e-6; see tests).
AudioSignal convolve(const AudioSignal& x, const RoomImpulseResponse& h);

// 10*log10(mean power of speech / mean power of noise), over whole signals
// (no voice-activity gating). Requires equal lengths and nonzero noise energy.
double measure_snr_db(const AudioSignal& speech, const AudioSignal& noise);

// Reverberant speech plus reverberant noise scaled to hit target_snr_db:
// (s * h) + g * (w * h_tilde), with g solved from the post-convolution
// powers so the measured SNR matches the target exactly. The noise clip is
// looped/cropped starting at noise_offset samples. The sum is peak-normalized
// only if it would exceed |1|.
AudioSignal augment_reverb_noise(const AudioSignal& s, const RoomImpulseResponse& h,
                                 const NoiseClip& w, const RoomImpulseResponse& h_tilde,
                                 double target_snr_db, uint64_t noise_offset = 0);

// Reverberation only (the zero-noise special case).
AudioSignal augment_reverb(const AudioSignal& s, const RoomImpulseResponse& h);

// Resample-style tempo+pitch perturbation: output sample n linearly
// interpolates x at position factor*n; output length is ceil(len/factor).
AudioSignal speed_perturb(const AudioSignal& x, double factor);

}  // namespace xladapt

#endif  // XLADAPT_DSP_HPP_
