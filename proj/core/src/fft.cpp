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
#include <stdexcept>

namespace xladapt {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("fft: size must be a nonzero power of two");
  }
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& v : a) v /= static_cast<double>(n);
  }
}

std::vector<double> direct_convolve(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) throw std::invalid_argument("convolve: empty input");
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (size_t i = 0; i < x.size(); ++i) {
    double xi = x[i];
    for (size_t j = 0; j < h.size(); ++j) y[i + j] += xi * h[j];
  }
  return y;
}

std::vector<double> fft_convolve(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) throw std::invalid_argument("convolve: empty input");
  const size_t out_len = x.size() + h.size() - 1;
  const size_t n = next_pow2(out_len);
  std::vector<std::complex<double>> a(n), b(n);
  for (size_t i = 0; i < x.size(); ++i) a[i] = x[i];
  for (size_t i = 0; i < h.size(); ++i) b[i] = h[i];
  fft_inplace(a, false);
  fft_inplace(b, false);
  for (size_t i = 0; i < n; ++i) a[i] *= b[i];
  fft_inplace(a, true);
  std::vector<double> y(out_len);
  for (size_t i = 0; i < out_len; ++i) y[i] = a[i].real();
  return y;
}

std::vector<double> overlap_add_convolve(std::span<const double> x, std::span<const double> h,
                                         size_t block) {
  if (x.empty() || h.empty()) throw std::invalid_argument("convolve: empty input");
  if (h.size() >= block) {
    // Kernel too long for blockwise processing; one big transform instead.
    return fft_convolve(x, h);
  }
  const size_t n = next_pow2(block);
  const size_t step = n - (h.size() - 1);
  std::vector<std::complex<double>> hf(n);
  for (size_t i = 0; i < h.size(); ++i) hf[i] = h[i];
  fft_inplace(hf, false);

  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  std::vector<std::complex<double>> buf(n);
  for (size_t start = 0; start < x.size(); start += step) {
    const size_t len = std::min(step, x.size() - start);
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (size_t i = 0; i < len; ++i) buf[i] = x[start + i];
    fft_inplace(buf, false);
    for (size_t i = 0; i < n; ++i) buf[i] *= hf[i];
    fft_inplace(buf, true);
    const size_t tail = std::min(len + h.size() - 1, y.size() - start);
    for (size_t i = 0; i < tail; ++i) y[start + i] += buf[i].real();
  }
  return y;
}

std::vector<double> magnitude_spectrum(std::span<const double> frame, size_t nfft) {
  if (nfft == 0 || (nfft & (nfft - 1)) != 0 || frame.size() > nfft) {
    throw std::invalid_argument("magnitude_spectrum: bad nfft");
  }
  std::vector<std::complex<double>> a(nfft);
  for (size_t i = 0; i < frame.size(); ++i) a[i] = frame[i];
  fft_inplace(a, false);
  std::vector<double> mag(nfft / 2 + 1);
  for (size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(a[i]);
  return mag;
}

}  // namespace xladapt
