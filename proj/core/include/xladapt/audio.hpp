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

#ifndef XLADAPT_AUDIO_HPP_
#define XLADAPT_AUDIO_HPP_

#include <filesystem>
#include <string>
#include <vector>

namespace xladapt {

// Canonical audio carrier: mono waveform, amplitudes nominally in [-1, 1].
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
  size_t size() const { return samples.size(); }
};

// Throws std::invalid_argument on non-positive rate or non-finite samples.
void validate_audio(const AudioSignal& x);

double rms(const AudioSignal& x);
double mean_power(const AudioSignal& x);
double peak_abs(const AudioSignal& x);

// 16-bit PCM mono RIFF WAV. Any other encoding is rejected.
AudioSignal read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioSignal& x);

// Reads only the header; returns (sample_count, sample_rate).
std::pair<uint64_t, int> read_wav_info(const std::filesystem::path& path);

}  // namespace xladapt

#endif  // XLADAPT_AUDIO_HPP_
