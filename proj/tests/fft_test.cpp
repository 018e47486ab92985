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

#include "xladapt/fft.hpp"

#include <cmath>
#include <vector>

#include <doctest.h>

#include "xladapt/rng.hpp"

using namespace xladapt;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<double> random_signal(Rng& rng, size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}
}  // namespace

TEST_CASE("next_pow2") {
  CHECK(next_pow2(1) == 1);
  CHECK(next_pow2(2) == 2);
  CHECK(next_pow2(3) == 4);
  CHECK(next_pow2(1000) == 1024);
  CHECK(next_pow2(1024) == 1024);
}

TEST_CASE("fft round trip recovers the input") {
  Rng rng(3);
  std::vector<std::complex<double>> a(256);
  for (auto& v : a) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  std::vector<std::complex<double>> orig = a;
  fft_inplace(a, false);
  fft_inplace(a, true);
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - orig[i]));
  CHECK(m < 1e-12);
}

TEST_CASE("fft and overlap-add convolution match the direct oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    size_t nx = static_cast<size_t>(rng.uniform_int(1, 3000));
    size_t nh = static_cast<size_t>(rng.uniform_int(1, 3000));
    if (trial % 3 == 0) std::swap(nx, nh);  // exercise len(h) > len(x) too
    std::vector<double> x = random_signal(rng, nx);
    std::vector<double> h = random_signal(rng, nh);

    std::vector<double> ref = direct_convolve(x, h);
    CHECK(max_abs_diff(fft_convolve(x, h), ref) <= 1e-6);
    CHECK(max_abs_diff(overlap_add_convolve(x, h, 512), ref) <= 1e-6);
  }
}

TEST_CASE("overlap-add handles filters longer than the block") {
  Rng rng(23);
  std::vector<double> x = random_signal(rng, 2000);
  std::vector<double> h = random_signal(rng, 1500);
  CHECK(max_abs_diff(overlap_add_convolve(x, h, 256), direct_convolve(x, h)) <= 1e-6);
}

TEST_CASE("magnitude spectrum peaks at the tone bin") {
  const size_t nfft = 512;
  const int k = 37;
  std::vector<double> frame(nfft);
  for (size_t n = 0; n < nfft; ++n) {
    frame[n] = std::sin(2.0 * kPi * k * static_cast<double>(n) / nfft);
  }
  std::vector<double> mag = magnitude_spectrum(frame, nfft);
  REQUIRE(mag.size() == nfft / 2 + 1);
  size_t argmax = 0;
  for (size_t i = 1; i < mag.size(); ++i) {
    if (mag[i] > mag[argmax]) argmax = i;
  }
  CHECK(argmax == static_cast<size_t>(k));
  CHECK(mag[argmax] == doctest::Approx(nfft / 2.0).epsilon(1e-9));
}
