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

#ifndef XLADAPT_FFT_HPP_
#define XLADAPT_FFT_HPP_

#include <complex>
#include <span>
#include <vector>

namespace xladapt {

// In-place iterative radix-2 FFT; size must be a power of two.
// Inverse transform includes the 1/N factor.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

size_t next_pow2(size_t n);

// Full linear convolution, length len(x) + len(h) - 1.
std::vector<double> direct_convolve(std::span<const double> x, std::span<const double> h);
std::vector<double> fft_convolve(std::span<const double> x, std::span<const double> h);

// Overlap-add convolution with fixed FFT block size; same result as above.
std::vector<double> overlap_add_convolve(std::span<const double> x, std::span<const double> h,
                                         size_t block = 8192);

// Magnitude spectrum of a real frame zero-padded to nfft (power of two);
// returns nfft/2 + 1 values.
std::vector<double> magnitude_spectrum(std::span<const double> frame, size_t nfft);

}  // namespace xladapt

#endif  // XLADAPT_FFT_HPP_
