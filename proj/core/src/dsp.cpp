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

#include "xladapt/dsp.hpp"

#include <cmath>
#include <stdexcept>

#include "xladapt/fft.hpp"

namespace xladapt {

AudioSignal convolve(const AudioSignal& x, const RoomImpulseResponse& h) {
  if (x.samples.empty() || h.samples.empty()) {
    throw std::invalid_argument("convolve: empty input");
  }
  if (x.sample_rate != h.sample_rate) {
    throw std::invalid_argument("convolve: sample rate mismatch");
  }
  std::vector<double> full;
  if (x.samples.size() > 8192) {
    full = overlap_add_convolve(x.samples, h.samples);
  } else {
    full = direct_convolve(x.samples, h.samples);
  }
  full.resize(x.samples.size());
  return AudioSignal{std::move(full), x.sample_rate};
}

double measure_snr_db(const AudioSignal& speech, const AudioSignal& noise) {
  if (speech.samples.size() != noise.samples.size()) {
    throw std::invalid_argument("measure_snr_db: length mismatch");
  }
  double pn = mean_power(noise);
  if (pn <= 0.0) throw std::invalid_argument("measure_snr_db: zero-energy noise");
  return 10.0 * std::log10(mean_power(speech) / pn);
}

AudioSignal augment_reverb(const AudioSignal& s, const RoomImpulseResponse& h) {
  return convolve(s, h);
}

AudioSignal augment_reverb_noise(const AudioSignal& s, const RoomImpulseResponse& h,
                                 const NoiseClip& w, const RoomImpulseResponse& h_tilde,
                                 double target_snr_db, uint64_t noise_offset) {
  if (w.samples.empty()) throw std::invalid_argument("augment: empty noise clip");
  if (s.sample_rate != w.sample_rate || s.sample_rate != h.sample_rate ||
      s.sample_rate != h_tilde.sample_rate) {
    throw std::invalid_argument("augment: sample rate mismatch");
  }
  AudioSignal reverberant = convolve(s, h);

  // Loop or crop the noise to the speech length, starting at noise_offset.
  AudioSignal tiled;
  tiled.sample_rate = s.sample_rate;
  tiled.samples.resize(s.samples.size());
  const size_t wn = w.samples.size();
  for (size_t i = 0; i < tiled.samples.size(); ++i) {
    tiled.samples[i] = w.samples[(noise_offset + i) % wn];
  }
  AudioSignal noise = convolve(tiled, h_tilde);

  const double ps = mean_power(reverberant);
  const double pn = mean_power(noise);
  if (pn <= 0.0) throw std::invalid_argument("augment: zero-energy convolved noise");
  const double gain = std::sqrt(ps / (pn * std::pow(10.0, target_snr_db / 10.0)));

  AudioSignal out;
  out.sample_rate = s.sample_rate;
  out.samples.resize(s.samples.size());
  for (size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = reverberant.samples[i] + gain * noise.samples[i];
  }
  double peak = peak_abs(out);
  if (peak > 1.0) {
    for (double& v : out.samples) v /= peak;
  }
  return out;
}

AudioSignal speed_perturb(const AudioSignal& x, double factor) {
  if (factor <= 0.0) throw std::invalid_argument("speed_perturb: factor must be positive");
  if (x.samples.empty()) throw std::invalid_argument("speed_perturb: empty input");
  const size_t in_len = x.samples.size();
  const size_t out_len =
      static_cast<size_t>(std::ceil(static_cast<double>(in_len) / factor));
  AudioSignal out;
  out.sample_rate = x.sample_rate;
  out.samples.resize(out_len);
  for (size_t n = 0; n < out_len; ++n) {
    double pos = factor * static_cast<double>(n);
    size_t i0 = static_cast<size_t>(pos);
    if (i0 >= in_len - 1) {
      out.samples[n] = x.samples[in_len - 1];
      continue;
    }
    double frac = pos - static_cast<double>(i0);
    out.samples[n] = (1.0 - frac) * x.samples[i0] + frac * x.samples[i0 + 1];
  }
  return out;
}

}  // namespace xladapt
