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

#ifndef XLADAPT_LABELS_HPP_
#define XLADAPT_LABELS_HPP_

#include <filesystem>
#include <string>
#include <vector>

namespace xladapt {

// Canonical label framing; FeatureConfig defaults must match for frame
// labels to line up with feature frames.
inline constexpr double kLabelFrameLengthMs = 25.0;
inline constexpr double kLabelFrameShiftMs = 10.0;

// Number of feature/label frames for a signal of n samples.
inline long frame_count(size_t n_samples, int sample_rate, double frame_length_ms,
                        double frame_shift_ms) {
  long window = static_cast<long>(frame_length_ms * sample_rate / 1000.0);
  long shift = static_cast<long>(frame_shift_ms * sample_rate / 1000.0);
  if (static_cast<long>(n_samples) < window) return 0;
  return (static_cast<long>(n_samples) - window) / shift + 1;
}

// Frame-label sidecar: one "frame:phone" pair per line, frames 0..N-1 at the
// feature frame shift.
std::vector<std::string> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<std::string>& labels);

}  // namespace xladapt

#endif  // XLADAPT_LABELS_HPP_
