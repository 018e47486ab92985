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

#include "xladapt/features.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "xladapt/embedding.hpp"
#include "xladapt/fft.hpp"

namespace xladapt {

namespace {
constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

void check_cfg(const FeatureConfig& cfg) {
  if (cfg.mfcc_dim <= 0 || cfg.mfcc_dim > cfg.mel_filters) {
    throw std::invalid_argument("features: mfcc_dim must be in [1, mel_filters]");
  }
  if (cfg.splice_width % 2 == 0 || cfg.splice_width < 1) {
    throw std::invalid_argument("features: splice_width must be odd");
  }
}

}  // namespace

void save_features(const FeatureMatrix& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("features: cannot write: " + path.string());
  int64_t frames = f.frames(), dims = f.dims();
  out.write(reinterpret_cast<const char*>(&frames), sizeof(frames));
  out.write(reinterpret_cast<const char*>(&dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(&f.frame_shift_ms), sizeof(f.frame_shift_ms));
  for (long r = 0; r < f.frames(); ++r) {
    for (long c = 0; c < f.dims(); ++c) {
      double v = f.values(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
  if (!out) throw std::runtime_error("features: write failed: " + path.string());
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("features: cannot open: " + path.string());
  int64_t frames = 0, dims = 0;
  FeatureMatrix f;
  in.read(reinterpret_cast<char*>(&frames), sizeof(frames));
  in.read(reinterpret_cast<char*>(&dims), sizeof(dims));
  in.read(reinterpret_cast<char*>(&f.frame_shift_ms), sizeof(f.frame_shift_ms));
  if (!in || frames < 0 || dims <= 0) {
    throw std::runtime_error("features: corrupt header: " + path.string());
  }
  f.values.resize(frames, dims);
  for (int64_t r = 0; r < frames; ++r) {
    for (int64_t c = 0; c < dims; ++c) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      f.values(r, c) = v;
    }
  }
  if (!in) throw std::runtime_error("features: truncated file: " + path.string());
  return f;
}

FeatureMatrix compute_mfcc(const AudioSignal& x, const FeatureConfig& cfg) {
  check_cfg(cfg);
  const int sr = x.sample_rate;
  const long window = static_cast<long>(cfg.frame_length_ms * sr / 1000.0);
  const long shift = static_cast<long>(cfg.frame_shift_ms * sr / 1000.0);
  if (static_cast<long>(x.samples.size()) < window) {
    throw std::invalid_argument("compute_mfcc: signal shorter than one frame");
  }
  const long n_frames = (static_cast<long>(x.samples.size()) - window) / shift + 1;
  const size_t nfft = next_pow2(static_cast<size_t>(window));
  const size_t n_bins = nfft / 2 + 1;

  // Pre-emphasis over the whole signal.
  std::vector<double> pre(x.samples.size());
  pre[0] = x.samples[0];
  for (size_t n = 1; n < x.samples.size(); ++n) {
    pre[n] = x.samples[n] - cfg.pre_emphasis * x.samples[n - 1];
  }

  std::vector<double> hamming(static_cast<size_t>(window));
  for (long n = 0; n < window; ++n) {
    hamming[static_cast<size_t>(n)] =
        0.54 - 0.46 * std::cos(2.0 * kPi * n / static_cast<double>(window - 1));
  }

  // Triangular mel filterbank on FFT bins, mel_low_hz .. Nyquist.
  const int M = cfg.mel_filters;
  std::vector<double> mel_points(static_cast<size_t>(M) + 2);
  double mel_lo = hz_to_mel(cfg.mel_low_hz);
  double mel_hi = hz_to_mel(sr / 2.0);
  for (int m = 0; m < M + 2; ++m) {
    mel_points[static_cast<size_t>(m)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (M + 1));
  }
  Eigen::MatrixXd fbank = Eigen::MatrixXd::Zero(M, static_cast<long>(n_bins));
  for (int m = 0; m < M; ++m) {
    double f_lo = mel_points[static_cast<size_t>(m)];
    double f_c = mel_points[static_cast<size_t>(m) + 1];
    double f_hi = mel_points[static_cast<size_t>(m) + 2];
    for (size_t k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * sr / static_cast<double>(nfft);
      if (f > f_lo && f < f_c) {
        fbank(m, static_cast<long>(k)) = (f - f_lo) / (f_c - f_lo);
      } else if (f >= f_c && f < f_hi) {
        fbank(m, static_cast<long>(k)) = (f_hi - f) / (f_hi - f_c);
      }
    }
  }

  // Orthonormal DCT-II rows.
  Eigen::MatrixXd dct(cfg.mfcc_dim, M);
  for (int k = 0; k < cfg.mfcc_dim; ++k) {
    double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / M);
    for (int m = 0; m < M; ++m) {
      dct(k, m) = scale * std::cos(kPi * k * (m + 0.5) / M);
    }
  }

  FeatureMatrix out;
  out.frame_shift_ms = cfg.frame_shift_ms;
  out.values.resize(n_frames, cfg.mfcc_dim);
  std::vector<double> frame(static_cast<size_t>(window));
  Eigen::VectorXd mel_energies(M), log_mel(M);
  for (long t = 0; t < n_frames; ++t) {
    const size_t start = static_cast<size_t>(t * shift);
    for (long n = 0; n < window; ++n) {
      frame[static_cast<size_t>(n)] = pre[start + static_cast<size_t>(n)] *
                                      hamming[static_cast<size_t>(n)];
    }
    std::vector<double> mag = magnitude_spectrum(frame, nfft);
    Eigen::Map<Eigen::VectorXd> mag_v(mag.data(), static_cast<long>(mag.size()));
    mel_energies = fbank * mag_v;
    for (int m = 0; m < M; ++m) {
      log_mel(m) = std::log(std::max(mel_energies(m), cfg.log_floor));
    }
    out.values.row(t) = (dct * log_mel).transpose();
  }
  return out;
}

FeatureMatrix cepstral_mean_normalize(const FeatureMatrix& f) {
  if (f.frames() == 0) {
    throw std::invalid_argument("cepstral_mean_normalize: empty feature matrix");
  }
  FeatureMatrix out = f;
  out.values.rowwise() -= f.values.colwise().mean();
  return out;
}

FeatureMatrix assemble_input(const FeatureMatrix& f, const SpeakerEmbedding& emb,
                             const FeatureConfig& cfg) {
  check_cfg(cfg);
  if (f.dims() != cfg.mfcc_dim) {
    throw std::invalid_argument("assemble_input: feature dim does not match config");
  }
  if (emb.values.size() != cfg.embedding_dim) {
    throw std::invalid_argument("assemble_input: embedding dim does not match config");
  }
  const int k = cfg.splice_width / 2;
  const long T = f.frames();
  FeatureMatrix out;
  out.frame_shift_ms = f.frame_shift_ms;
  out.values.resize(T, cfg.input_dim());
  for (long t = 0; t < T; ++t) {
    long col = 0;
    for (int o = -k; o <= k; ++o) {
      long src = std::clamp(t + o, 0L, T - 1);
      out.values.block(t, col, 1, cfg.mfcc_dim) = f.values.row(src);
      col += cfg.mfcc_dim;
    }
    for (int e = 0; e < cfg.embedding_dim; ++e) {
      out.values(t, col + e) = emb.values(e);
    }
  }
  return out;
}

}  // namespace xladapt
