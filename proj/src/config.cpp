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

#include "rfscope/config.hpp"

#include <json.hpp>

namespace rfscope {

void validate(const UNetConfig& cfg) {
  if (cfg.kernel_size < 2)
    throw ConfigError("kernel_size: must be >= 2, got " + std::to_string(cfg.kernel_size));
  if (cfg.depth < 1)
    throw ConfigError("depth: must be >= 1, got " + std::to_string(cfg.depth));
  if (cfg.channels.size() != static_cast<size_t>(cfg.depth) + 1)
    throw ConfigError("channels: list length " + std::to_string(cfg.channels.size()) +
                      " != depth + 1 = " + std::to_string(cfg.depth + 1));
  for (int c : cfg.channels)
    if (c < 1) throw ConfigError("channels: entries must be positive, got " + std::to_string(c));
  if (cfg.input_height < 1 || cfg.input_width < 1)
    throw ConfigError("input_size: dimensions must be positive");
  const int div = 1 << cfg.depth;
  if (cfg.input_height % div != 0)
    throw ConfigError("input_size: height " + std::to_string(cfg.input_height) +
                      " not divisible by 2^depth = " + std::to_string(div));
  if (cfg.input_width % div != 0)
    throw ConfigError("input_size: width " + std::to_string(cfg.input_width) +
                      " not divisible by 2^depth = " + std::to_string(div));
}

UNetConfig parse_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("document: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("document: top level must be a JSON object");

  static const char* known[] = {"kernel_size", "depth", "channels", "attention", "input_size"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("document: unknown key '" + it.key() + "'");
  }

  UNetConfig cfg;
  try {
    cfg.kernel_size = doc.at("kernel_size").get<int>();
    cfg.depth = doc.at("depth").get<int>();
    cfg.channels = doc.at("channels").get<std::vector<int>>();
    cfg.attention = doc.value("attention", false);
    auto size = doc.at("input_size").get<std::vector<int>>();
    if (size.size() != 2) throw ConfigError("input_size: expected [height, width]");
    cfg.input_height = size[0];
    cfg.input_width = size[1];
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("document: missing or mistyped field: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::string config_to_json(const UNetConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["kernel_size"] = cfg.kernel_size;
  doc["depth"] = cfg.depth;
  doc["channels"] = cfg.channels;
  doc["attention"] = cfg.attention;
  doc["input_size"] = {cfg.input_height, cfg.input_width};
  return doc.dump(2);
}

const std::vector<CatalogRow>& catalog() {
  static const std::vector<CatalogRow> rows = [] {
    auto row = [](int k, int d, std::vector<int> ch, int trf, long long params) {
      CatalogRow r;
      r.config = UNetConfig{k, d, std::move(ch), false, 576, 576};
      r.published_trf = trf;
      r.published_params = params;
      r.buildable = r.config.channels.size() == static_cast<size_t>(d) + 1;
      return r;
    };
    return std::vector<CatalogRow>{
        row(3, 2, {230, 456, 765, 1245}, 54, 31013720),
        row(3, 3, {145, 256, 512, 1024}, 100, 31012268),
        row(3, 4, {133, 244, 355, 791}, 146, 31032960),
        row(4, 3, {64, 128, 256, 512, 1024}, 204, 31042369),
        row(3, 6, {63, 170, 256, 512}, 230, 31031345),
        row(4, 4, {25, 44, 110, 451, 756}, 298, 31043816),
        row(3, 8, {47, 83, 180, 360}, 360, 31062482),
        row(5, 3, {63, 64, 115, 255, 512, 1024}, 412, 31043945),
        row(4, 6, {28, 58, 146, 270, 510}, 486, 31027119),
        row(4, 7, {24, 55, 101, 223, 481}, 570, 31041124),
    };
  }();
  return rows;
}

}  // namespace rfscope
