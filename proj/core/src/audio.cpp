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

#include "xladapt/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace xladapt {

namespace {

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

struct WavHeader {
  int sample_rate = 0;
  uint64_t num_samples = 0;
  uint64_t data_offset = 0;
};

WavHeader parse_wav_header(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char buf[12];
  if (!in.read(reinterpret_cast<char*>(buf), 12)) {
    throw std::runtime_error("wav: truncated header: " + path.string());
  }
  if (std::memcmp(buf, "RIFF", 4) != 0 || std::memcmp(buf + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("wav: not a RIFF/WAVE file: " + path.string());
  }
  WavHeader h;
  bool have_fmt = false;
  uint16_t channels = 0, bits = 0, format = 0;
  while (true) {
    unsigned char chunk[8];
    if (!in.read(reinterpret_cast<char*>(chunk), 8)) {
      throw std::runtime_error("wav: missing data chunk: " + path.string());
    }
    uint32_t size = get_u32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      std::vector<unsigned char> fmt(size);
      if (!in.read(reinterpret_cast<char*>(fmt.data()), size)) {
        throw std::runtime_error("wav: truncated fmt chunk: " + path.string());
      }
      format = get_u16(fmt.data());
      channels = get_u16(fmt.data() + 2);
      h.sample_rate = static_cast<int>(get_u32(fmt.data() + 4));
      bits = get_u16(fmt.data() + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error("wav: data before fmt: " + path.string());
      if (format != 1 || bits != 16 || channels != 1) {
        throw std::runtime_error("wav: only 16-bit PCM mono supported: " + path.string());
      }
      h.num_samples = size / 2;
      h.data_offset = static_cast<uint64_t>(in.tellg());
      return h;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
}

}  // namespace

void validate_audio(const AudioSignal& x) {
  if (x.sample_rate <= 0) throw std::invalid_argument("audio: sample_rate must be positive");
  for (double v : x.samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("audio: non-finite sample");
  }
}

double rms(const AudioSignal& x) { return std::sqrt(mean_power(x)); }

double mean_power(const AudioSignal& x) {
  if (x.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x.samples) acc += v * v;
  return acc / static_cast<double>(x.samples.size());
}

double peak_abs(const AudioSignal& x) {
  double m = 0.0;
  for (double v : x.samples) m = std::max(m, std::abs(v));
  return m;
}

AudioSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("wav: cannot open: " + path.string());
  WavHeader h = parse_wav_header(in, path);
  std::vector<unsigned char> raw(h.num_samples * 2);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw std::runtime_error("wav: truncated data chunk: " + path.string());
  }
  AudioSignal x;
  x.sample_rate = h.sample_rate;
  x.samples.resize(h.num_samples);
  for (uint64_t i = 0; i < h.num_samples; ++i) {
    int16_t s = static_cast<int16_t>(get_u16(raw.data() + 2 * i));
    x.samples[i] = static_cast<double>(s) / 32767.0;
  }
  return x;
}

void write_wav(const std::filesystem::path& path, const AudioSignal& x) {
  validate_audio(x);
  std::string out;
  uint32_t data_bytes = static_cast<uint32_t>(x.samples.size() * 2);
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  put_u32(out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(x.sample_rate));
  put_u32(out, static_cast<uint32_t>(x.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.append("data");
  put_u32(out, data_bytes);
  for (double v : x.samples) {
    double c = std::clamp(v, -1.0, 1.0);
    int16_t s = static_cast<int16_t>(std::lrint(c * 32767.0));
    put_u16(out, static_cast<uint16_t>(s));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("wav: cannot write: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("wav: write failed: " + path.string());
}

std::pair<uint64_t, int> read_wav_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("wav: cannot open: " + path.string());
  WavHeader h = parse_wav_header(in, path);
  return {h.num_samples, h.sample_rate};
}

}  // namespace xladapt
