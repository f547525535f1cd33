// Copyright 2026 The rfscope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <stdexcept>

#include "rfscope/metrics.hpp"

namespace rfscope {

class IOError : public std::runtime_error {
 public:
  explicit IOError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MaskImage {
  int width = 0, height = 0;
  BinaryImage pixels;  // foreground iff gray value >= 128
};

/// 8-bit grayscale image in [0, 1]; accepts binary (P5) and ASCII (P2)
/// PGM with maxval 255.
Eigen::MatrixXd load_pgm_gray(const std::filesystem::path& path);

/// Same formats, thresholded at 128.
MaskImage load_mask(const std::filesystem::path& path);

/// Writes a binary (P5) PGM with maxval 255; values clamped to [0, 1].
void save_pgm_gray(const std::filesystem::path& path, const Eigen::MatrixXd& image);

}  // namespace rfscope
