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

#include "xladapt/recipe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xladapt/labels.hpp"
#include "xladapt/rng.hpp"
#include "xladapt/util.hpp"

namespace xladapt {

namespace {

std::vector<std::vector<std::string>> read_index(const std::filesystem::path& dir,
                                                 size_t fields) {
  std::ifstream in(dir / "index.txt");
  if (!in) throw std::runtime_error("pool: missing index.txt in " + dir.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        row.push_back(line.substr(start));
        break;
      }
      row.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (row.size() != fields) {
      throw std::runtime_error("pool: malformed index line in " + dir.string());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string rir_key(const RoomImpulseResponse& r) { return r.room_id + "/" + r.position_id; }

std::string format_factor(double f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", f);
  return buf;
}

}  // namespace

std::vector<std::string> RirPool::room_ids() const {
  std::map<std::string, std::set<std::string>> positions;
  for (const auto& r : rirs) positions[r.room_id].insert(r.position_id);
  std::vector<std::string> out;
  for (const auto& [room, pos] : positions) {
    if (pos.size() >= 2) out.push_back(room);
  }
  return out;
}

RirPool load_rir_pool(const std::filesystem::path& dir) {
  RirPool pool;
  for (const auto& row : read_index(dir, 4)) {
    AudioSignal a = read_wav(dir / row[1]);
    RoomImpulseResponse r;
    r.samples = std::move(a.samples);
    r.sample_rate = a.sample_rate;
    r.room_id = row[2];
    r.position_id = row[3];
    if (r.samples.empty()) throw std::runtime_error("pool: empty RIR " + row[0]);
    pool.rirs.push_back(std::move(r));
  }
  if (pool.rirs.empty()) throw std::runtime_error("pool: no RIRs in " + dir.string());
  return pool;
}

NoisePool load_noise_pool(const std::filesystem::path& dir) {
  NoisePool pool;
  for (const auto& row : read_index(dir, 3)) {
    AudioSignal a = read_wav(dir / row[1]);
    NoiseClip c;
    c.samples = std::move(a.samples);
    c.sample_rate = a.sample_rate;
    c.label = row[2];
    if (c.samples.empty()) throw std::runtime_error("pool: empty noise clip " + row[0]);
    pool.clips.push_back(std::move(c));
  }
  if (pool.clips.empty()) throw std::runtime_error("pool: no noise clips in " + dir.string());
  return pool;
}

void synthesize_rir_pool(const std::filesystem::path& dir, int rooms, int positions_per_room,
                         int sample_rate, uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.txt", std::ios::trunc);
  for (int room = 0; room < rooms; ++room) {
    Rng room_rng(mix_seed(seed, "rir-room", static_cast<uint64_t>(room)));
    double rt60 = room_rng.uniform(0.2, 0.8);
    for (int pos = 0; pos < positions_per_room; ++pos) {
      Rng rng(mix_seed(seed, "rir", static_cast<uint64_t>(room) * 1000 + pos));
      size_t len = static_cast<size_t>(rt60 * sample_rate);
      AudioSignal h;
      h.sample_rate = sample_rate;
      h.samples.resize(len);
      // -60 dB decay over rt60 seconds.
      const double decay = 3.0 * std::log(10.0) / (rt60 * sample_rate);
      for (size_t n = 0; n < len; ++n) {
        h.samples[n] = std::exp(-decay * static_cast<double>(n)) * rng.normal();
      }
      h.samples[0] = 1.0;  // direct path
      double peak = peak_abs(h);
      for (double& v : h.samples) v = 0.5 * v / peak;
      char room_id[32], pos_id[32], file[64];
      std::snprintf(room_id, sizeof(room_id), "room%02d", room);
      std::snprintf(pos_id, sizeof(pos_id), "pos%02d", pos);
      std::snprintf(file, sizeof(file), "room%02d_pos%02d.wav", room, pos);
      write_wav(dir / file, h);
      index << room_id << "_" << pos_id << '\t' << file << '\t' << room_id << '\t' << pos_id
            << '\n';
    }
  }
  if (!index) throw std::runtime_error("pool: cannot write index in " + dir.string());
}

void synthesize_noise_pool(const std::filesystem::path& dir, int clips, double clip_seconds,
                           int sample_rate, uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.txt", std::ios::trunc);
  for (int c = 0; c < clips; ++c) {
    Rng rng(mix_seed(seed, "noise", static_cast<uint64_t>(c)));
    double a = rng.uniform(0.8, 0.995);  // one-pole lowpass coefficient
    size_t len = static_cast<size_t>(clip_seconds * sample_rate);
    AudioSignal w;
    w.sample_rate = sample_rate;
    w.samples.resize(len);
    double state = 0.0;
    for (size_t n = 0; n < len; ++n) {
      state = a * state + (1.0 - a) * rng.normal();
      w.samples[n] = state;
    }
    double r = rms(w);
    for (double& v : w.samples) v = 0.1 * v / r;
    char file[64], label[32];
    std::snprintf(file, sizeof(file), "noise%02d.wav", c);
    std::snprintf(label, sizeof(label), "noise%02d", c);
    write_wav(dir / file, w);
    index << label << '\t' << file << '\t' << label << '\n';
  }
  if (!index) throw std::runtime_error("pool: cannot write index in " + dir.string());
}

namespace {

struct Task {
  size_t entry_index;       // index in the source manifest
  double speed_factor;      // 1.0 = original timing
  int copy_index;           // -1 = clean (no distortion)
  std::string out_id;
};

// Picks a room with >= 2 positions and two distinct positions within it.
std::pair<const RoomImpulseResponse*, const RoomImpulseResponse*> draw_rir_pair(
    const RirPool& pool, const std::vector<std::string>& filter, Rng& rng) {
  std::map<std::string, std::vector<const RoomImpulseResponse*>> rooms;
  std::set<std::string> allowed(filter.begin(), filter.end());
  for (const auto& r : pool.rirs) {
    if (!allowed.empty() && !allowed.count(rir_key(r))) continue;
    rooms[r.room_id].push_back(&r);
  }
  std::vector<const std::vector<const RoomImpulseResponse*>*> eligible;
  for (const auto& [room, list] : rooms) {
    if (list.size() >= 2) eligible.push_back(&list);
  }
  if (eligible.empty()) {
    throw std::runtime_error("apply_recipe: no room with two positions in RIR pool");
  }
  const auto& list = *eligible[static_cast<size_t>(
      rng.uniform_int(0, static_cast<int64_t>(eligible.size()) - 1))];
  size_t i = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(list.size()) - 1));
  size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(list.size()) - 2));
  if (j >= i) ++j;
  return {list[i], list[j]};
}

const RoomImpulseResponse* draw_single_rir(const RirPool& pool,
                                           const std::vector<std::string>& filter, Rng& rng) {
  std::set<std::string> allowed(filter.begin(), filter.end());
  std::vector<const RoomImpulseResponse*> list;
  for (const auto& r : pool.rirs) {
    if (!allowed.empty() && !allowed.count(rir_key(r))) continue;
    list.push_back(&r);
  }
  if (list.empty()) throw std::runtime_error("apply_recipe: empty RIR pool after filtering");
  return list[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(list.size()) - 1))];
}

std::vector<std::string> remap_labels_for_speed(const std::vector<std::string>& labels,
                                                size_t out_samples, int sample_rate,
                                                double factor) {
  long out_frames =
      frame_count(out_samples, sample_rate, kLabelFrameLengthMs, kLabelFrameShiftMs);
  double window = kLabelFrameLengthMs * sample_rate / 1000.0;
  double shift = kLabelFrameShiftMs * sample_rate / 1000.0;
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(std::max(0L, out_frames)));
  for (long t = 0; t < out_frames; ++t) {
    double out_center = t * shift + window / 2.0;
    double in_center = factor * out_center;
    long in_frame = std::lround((in_center - window / 2.0) / shift);
    in_frame = std::clamp(in_frame, 0L, static_cast<long>(labels.size()) - 1);
    out.push_back(labels[static_cast<size_t>(in_frame)]);
  }
  return out;
}

}  // namespace

Manifest apply_recipe(const Manifest& m, const AugmentationRecipe& r, const RirPool* rirs,
                      const NoisePool* noises, const std::filesystem::path& out_dir,
                      int jobs) {
  for (const auto& copy : r.copies) {
    if (copy.reverb && (rirs == nullptr || rirs->rirs.empty())) {
      throw std::invalid_argument("apply_recipe: copy requires reverb but RIR pool is empty");
    }
    if (copy.noise && (noises == nullptr || noises->clips.empty())) {
      throw std::invalid_argument("apply_recipe: copy requires noise but noise pool is empty");
    }
    if (copy.noise && copy.snr.low_db > copy.snr.high_db) {
      throw std::invalid_argument("apply_recipe: SNR range is inverted");
    }
  }
  for (double f : r.speed_factors) {
    if (f <= 0.0) throw std::invalid_argument("apply_recipe: non-positive speed factor");
  }
  std::filesystem::create_directories(out_dir);

  // Base versions: original plus one per speed factor; every base version
  // yields one clean entry plus one entry per copy spec.
  std::vector<Task> tasks;
  for (size_t e = 0; e < m.entries.size(); ++e) {
    std::vector<std::pair<double, std::string>> bases{{1.0, m.entries[e].id}};
    for (double f : r.speed_factors) {
      bases.emplace_back(f, m.entries[e].id + "-sp" + format_factor(f));
    }
    for (const auto& [factor, base_id] : bases) {
      if (factor != 1.0) {
        tasks.push_back({e, factor, -1, base_id});
      }
      for (size_t c = 0; c < r.copies.size(); ++c) {
        tasks.push_back({e, factor, static_cast<int>(c),
                         base_id + "-c" + std::to_string(c + 1)});
      }
    }
  }

  std::vector<Utterance> produced(tasks.size());
  parallel_for(tasks.size(), jobs, [&](size_t ti) {
    const Task& task = tasks[ti];
    const Utterance& src = m.entries[task.entry_index];
    AudioSignal audio = read_wav(resolve_audio(m, src));

    std::vector<std::string> labels;
    auto src_lab = label_path_for(resolve_audio(m, src));
    bool have_labels = std::filesystem::exists(src_lab);
    if (have_labels) labels = read_labels(src_lab);

    if (task.speed_factor != 1.0) {
      audio = speed_perturb(audio, task.speed_factor);
      if (have_labels) {
        labels = remap_labels_for_speed(labels, audio.samples.size(), audio.sample_rate,
                                        task.speed_factor);
      }
    }

    if (task.copy_index >= 0) {
      const CopySpec& copy = r.copies[static_cast<size_t>(task.copy_index)];
      Rng rng(mix_seed(r.seed, src.id + "#" + format_factor(task.speed_factor),
                       static_cast<uint64_t>(task.copy_index)));
      if (copy.reverb && copy.noise) {
        auto [h, h_tilde] = draw_rir_pair(*rirs, copy.rir_ids, rng);
        size_t clip = static_cast<size_t>(
            rng.uniform_int(0, static_cast<int64_t>(noises->clips.size()) - 1));
        double snr = rng.uniform(copy.snr.low_db, copy.snr.high_db);
        uint64_t offset = rng.next_u64() % noises->clips[clip].samples.size();
        audio = augment_reverb_noise(audio, *h, noises->clips[clip], *h_tilde, snr, offset);
      } else if (copy.reverb) {
        const RoomImpulseResponse* h = draw_single_rir(*rirs, copy.rir_ids, rng);
        audio = augment_reverb(audio, *h);
        double peak = peak_abs(audio);
        if (peak > 1.0) {
          for (double& v : audio.samples) v /= peak;
        }
      } else if (copy.noise) {
        // Additive noise with no room simulation: unit-impulse RIRs.
        RoomImpulseResponse delta{{1.0}, audio.sample_rate, "none", "none"};
        size_t clip = static_cast<size_t>(
            rng.uniform_int(0, static_cast<int64_t>(noises->clips.size()) - 1));
        double snr = rng.uniform(copy.snr.low_db, copy.snr.high_db);
        uint64_t offset = rng.next_u64() % noises->clips[clip].samples.size();
        audio = augment_reverb_noise(audio, delta, noises->clips[clip], delta, snr, offset);
      }
    }

    std::string wav_name = task.out_id + ".wav";
    write_wav(out_dir / wav_name, audio);
    if (have_labels) write_labels(label_path_for(out_dir / wav_name), labels);

    Utterance u = src;
    u.id = task.out_id;
    u.audio = std::filesystem::absolute(out_dir / wav_name).string();
    u.duration_s = audio.duration_s();
    produced[ti] = std::move(u);
  });

  Manifest out;
  out.name = m.name + "-aug";
  out.base_dir = m.base_dir;
  out.entries = m.entries;  // originals pass through unmodified
  for (auto& u : out.entries) {
    u.audio = std::filesystem::absolute(resolve_audio(m, u)).string();
  }
  for (auto& u : produced) out.entries.push_back(std::move(u));
  return out;
}

}  // namespace xladapt
