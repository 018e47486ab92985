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
#include <vector>

#include <doctest.h>

#include "xladapt/fft.hpp"
#include "xladapt/rng.hpp"

using namespace xladapt;

namespace {

AudioSignal random_audio(Rng& rng, size_t n, int sr, double amp) {
  AudioSignal x;
  x.sample_rate = sr;
  x.samples.resize(n);
  for (auto& v : x.samples) v = rng.uniform(-amp, amp);
  return x;
}

RoomImpulseResponse random_rir(Rng& rng, size_t n, int sr, const std::string& room,
                               const std::string& pos) {
  RoomImpulseResponse h;
  h.sample_rate = sr;
  h.room_id = room;
  h.position_id = pos;
  h.samples.resize(n);
  h.samples[0] = 1.0;
  for (size_t i = 1; i < n; ++i) {
    h.samples[i] = rng.uniform(-0.3, 0.3) * std::exp(-static_cast<double>(i) / 50.0);
  }
  return h;
}

}  // namespace

TEST_CASE("measure_snr_db matches the power-ratio formula") {
  Rng rng(1);
  AudioSignal s = random_audio(rng, 4000, 8000, 0.5);
  AudioSignal n = random_audio(rng, 4000, 8000, 0.05);
  double expected = 10.0 * std::log10(mean_power(s) / mean_power(n));
  CHECK(measure_snr_db(s, n) == doctest::Approx(expected).epsilon(1e-12));

  AudioSignal zero = n;
  for (auto& v : zero.samples) v = 0.0;
  CHECK_THROWS(measure_snr_db(s, zero));
}

TEST_CASE("reverb-plus-noise augmentation hits the target SNR exactly") {
  Rng rng(2);
  const int sr = 8000;
  for (int trial = 0; trial < 40; ++trial) {
    AudioSignal s = random_audio(rng, 3000 + 100 * trial % 800, sr, 0.05);
    RoomImpulseResponse h = random_rir(rng, 200, sr, "r", "p0");
    RoomImpulseResponse h2 = random_rir(rng, 200, sr, "r", "p1");
    NoiseClip w;
    w.sample_rate = sr;
    w.label = "hum";
    w.samples = random_audio(rng, 1700, sr, 0.05).samples;

    // Both halves of the two-sided target range from the protocol.
    double target = trial % 2 == 0 ? rng.uniform(5.0, 10.0) : rng.uniform(10.0, 20.0);
    AudioSignal mixed = augment_reverb_noise(s, h, w, h2, target,
                                             static_cast<uint64_t>(trial) * 37);

    // Amplitudes are small enough that no peak normalization happens, so the
    // noise component is recoverable by subtracting the reverberant speech.
    AudioSignal speech = augment_reverb(s, h);
    AudioSignal noise = speech;
    for (size_t i = 0; i < noise.samples.size(); ++i) {
      noise.samples[i] = mixed.samples[i] - speech.samples[i];
    }
    CHECK(std::abs(measure_snr_db(speech, noise) - target) <= 0.01);
  }
}

TEST_CASE("reverb-only augmentation is plain truncated convolution") {
  Rng rng(3);
  AudioSignal s = random_audio(rng, 500, 8000, 0.3);
  RoomImpulseResponse h = random_rir(rng, 64, 8000, "r", "p");
  AudioSignal y = augment_reverb(s, h);
  REQUIRE(y.samples.size() == s.samples.size());
  std::vector<double> full = direct_convolve(s.samples, h.samples);
  for (size_t i = 0; i < y.samples.size(); ++i) {
    CHECK(y.samples[i] == doctest::Approx(full[i]).epsilon(1e-9));
  }
}

TEST_CASE("convolve rejects mismatched sample rates") {
  Rng rng(4);
  AudioSignal s = random_audio(rng, 100, 8000, 0.3);
  RoomImpulseResponse h = random_rir(rng, 16, 16000, "r", "p");
  CHECK_THROWS(convolve(s, h));
}

TEST_CASE("speed perturbation length and interpolation") {
  AudioSignal x;
  x.sample_rate = 8000;
  // A linear ramp is invariant under linear interpolation.
  for (int i = 0; i < 1000; ++i) x.samples.push_back(0.001 * i);

  for (double factor : {0.9, 1.1}) {
    AudioSignal y = speed_perturb(x, factor);
    CHECK(y.samples.size() ==
          static_cast<size_t>(std::ceil(static_cast<double>(x.samples.size()) / factor)));
    for (size_t n = 0; n < y.samples.size(); ++n) {
      double pos = factor * static_cast<double>(n);
      if (pos >= static_cast<double>(x.samples.size() - 1)) break;
      CHECK(y.samples[n] == doctest::Approx(0.001 * pos).epsilon(1e-9));
    }
  }

  AudioSignal same = speed_perturb(x, 1.0);
  CHECK(same.samples == x.samples);
}
