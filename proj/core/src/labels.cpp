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

#include "xladapt/labels.hpp"

#include <fstream>
#include <stdexcept>

namespace xladapt {

std::vector<std::string> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("labels: cannot open: " + path.string());
  std::vector<std::string> labels;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos) {
      throw std::runtime_error("labels: malformed line " + std::to_string(lineno + 1) + " in " +
                               path.string());
    }
    size_t frame = std::stoul(line.substr(0, colon));
    if (frame != lineno) {
      throw std::runtime_error("labels: non-contiguous frame index in " + path.string());
    }
    labels.push_back(line.substr(colon + 1));
    ++lineno;
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, const std::vector<std::string>& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("labels: cannot write: " + path.string());
  for (size_t i = 0; i < labels.size(); ++i) {
    out << i << ':' << labels[i] << '\n';
  }
  if (!out) throw std::runtime_error("labels: write failed: " + path.string());
}

}  // namespace xladapt
