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

#include <stdexcept>
#include <string>
#include <vector>

namespace rfscope {

/// Raised when a configuration document or field fails validation.
/// The message always names the offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// One U-Net configuration: conv kernel size, number of pooling stages,
/// per-level output channels (level 0 .. level d-1, bottleneck), optional
/// attention gates on the skip connections, and the input resolution.
struct UNetConfig {
  int kernel_size = 3;
  int depth = 1;
  std::vector<int> channels;  // length depth + 1 for a buildable config
  bool attention = false;
  int input_height = 576;
  int input_width = 576;
};

/// Validates all invariants (kernel >= 2, depth >= 1, channel list length
/// == depth + 1, input divisible by 2^depth). Throws ConfigError naming
/// the field otherwise.
void validate(const UNetConfig& cfg);

/// Parses a UTF-8 JSON configuration document with keys kernel_size,
/// depth, channels, attention, input_size. Unknown keys are rejected.
UNetConfig parse_config(const std::string& text);

/// Serializes a config back to the document schema accepted by parse_config.
std::string config_to_json(const UNetConfig& cfg);

/// One reference row of the published configuration table. `buildable` is
/// true iff the channel list length equals depth + 1, i.e. the row maps
/// unambiguously onto the level structure.
struct CatalogRow {
  UNetConfig config;
  int published_trf = 0;
  long long published_params = 0;
  bool buildable = false;
};

/// The ten published reference configurations, in ascending TRF order.
const std::vector<CatalogRow>& catalog();

}  // namespace rfscope
