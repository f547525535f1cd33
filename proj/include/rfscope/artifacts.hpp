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

#include <filesystem>
#include <json.hpp>
#include <string>

#include "rfscope/advisor.hpp"
#include "rfscope/engine.hpp"
#include "rfscope/metrics.hpp"
#include "rfscope/rfprop.hpp"

namespace rfscope {

using json = nlohmann::ordered_json;

json trf_report_to_json(const TRFReport& report);
json erf_sidecar_to_json(const ERFGrid& grid, int ti, int tj, std::uint64_t seed,
                         InitScheme scheme);
json scores_to_json(const SegmentationScores& scores);
json recommendation_to_json(const Recommendation& rec);
json candidates_to_json(const std::vector<Candidate>& candidates);
json catalog_to_json();

enum class ArtifactKind { TRFReport, ERFSidecar, MetricReport, ERFRate, ObjectRate,
                          Recommendation, Candidates, Catalog, Manifest };

/// Checks required fields and types for each artifact schema; used for the
/// emit/re-parse round trip. Throws IOError with the failing field.
void validate_artifact(const json& doc, ArtifactKind kind);

/// Run manifest written next to every command's outputs. The timestamp is
/// the only non-deterministic field of any artifact.
json make_manifest(const std::string& command, const std::string& config_path,
                   const std::string& dataset_path, std::uint64_t seed,
                   const std::string& scheme);

void write_json(const std::filesystem::path& path, const json& doc);
json read_json(const std::filesystem::path& path);

/// Row-major CSV of doubles, one image row per line.
void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_csv(const std::filesystem::path& path);

const char* tool_version();

}  // namespace rfscope
