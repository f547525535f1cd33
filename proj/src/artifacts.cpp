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

#include "rfscope/artifacts.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rfscope/pgm.hpp"

namespace rfscope {

const char* tool_version() { return "0.1.0"; }

namespace {

// 17 significant digits round-trips doubles exactly and keeps artifact
// diffs stable across platforms.
std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json num(double v) {
  // Store as a number; nlohmann emits the shortest round-trip form which
  // is byte-stable for a given value.
  return json(v);
}

}  // namespace

json trf_report_to_json(const TRFReport& report) {
  json doc;
  doc["trf_size"] = num(report.network_trf_size);
  doc["trf_size_pixels"] = num(report.network_trf_size_pixels);
  doc["center_box"] = {report.center_box.top, report.center_box.left, report.center_box.bottom,
                       report.center_box.right};
  json layers = json::array();
  for (const auto& [id, size] : report.per_layer_sizes) layers.push_back({id, num(size)});
  doc["per_layer"] = std::move(layers);
  return doc;
}

json erf_sidecar_to_json(const ERFGrid& grid, int ti, int tj, std::uint64_t seed,
                         InitScheme scheme) {
  json doc;
  doc["box"] = {grid.box.top, grid.box.left, grid.box.bottom, grid.box.right};
  doc["target"] = {ti, tj};
  doc["seed"] = seed;
  doc["scheme"] = scheme == InitScheme::AllOnes ? "all_ones" : "uniform_kaiming";
  return doc;
}

json scores_to_json(const SegmentationScores& s) {
  json doc;
  doc["dice"] = num(s.dice);
  doc["jaccard"] = num(s.jaccard);
  doc["sensitivity"] = num(s.sensitivity);
  doc["specificity"] = num(s.specificity);
  doc["accuracy"] = num(s.accuracy);
  return doc;
}

json recommendation_to_json(const Recommendation& rec) {
  json doc;
  doc["trf_window"] = {num(rec.low), num(rec.high)};
  doc["rationale"] = rec.rationale == Rationale::HighContrastMinimal
                         ? "high_contrast_minimal"
                         : "low_contrast_roi_matched";
  doc["confidence"] = rec.confidence == Confidence::Low ? "low" : "normal";
  doc["candidates"] = candidates_to_json(rec.candidates)["candidates"];
  return doc;
}

json candidates_to_json(const std::vector<Candidate>& candidates) {
  json doc;
  json arr = json::array();
  for (const auto& c : candidates) {
    json item;
    item["config"] = json::parse(config_to_json(c.config));
    item["trf"] = num(c.trf);
    item["params"] = c.params;
    arr.push_back(std::move(item));
  }
  doc["candidates"] = std::move(arr);
  return doc;
}

json catalog_to_json() {
  json doc;
  json rows = json::array();
  for (const auto& row : catalog()) {
    json item;
    item["config"] = json::parse(config_to_json(row.config));
    item["published_trf"] = row.published_trf;
    item["published_params"] = row.published_params;
    item["buildable"] = row.buildable;
    rows.push_back(std::move(item));
  }
  doc["rows"] = std::move(rows);
  return doc;
}

namespace {

void require(const json& doc, const char* key, bool ok) {
  if (!ok) throw IOError(std::string("artifact: missing or mistyped field '") + key + "'");
}

void check_box(const json& doc, const char* key) {
  require(doc, key, doc.contains(key) && doc[key].is_array() && doc[key].size() == 4);
  for (const auto& v : doc[key]) require(doc, key, v.is_number_integer());
}

}  // namespace

void validate_artifact(const json& doc, ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::TRFReport:
      require(doc, "trf_size", doc.contains("trf_size") && doc["trf_size"].is_number());
      check_box(doc, "center_box");
      require(doc, "per_layer", doc.contains("per_layer") && doc["per_layer"].is_array());
      break;
    case ArtifactKind::ERFSidecar:
      check_box(doc, "box");
      require(doc, "target", doc.contains("target") && doc["target"].is_array() &&
                                 doc["target"].size() == 2);
      require(doc, "seed", doc.contains("seed") && doc["seed"].is_number_integer());
      require(doc, "scheme", doc.contains("scheme") && doc["scheme"].is_string());
      break;
    case ArtifactKind::MetricReport:
      for (const char* key : {"dice", "jaccard", "sensitivity", "specificity", "accuracy"})
        require(doc, key, doc.contains(key) && doc[key].is_number());
      break;
    case ArtifactKind::ERFRate:
      require(doc, "erf_rate", doc.contains("erf_rate") && doc["erf_rate"].is_number());
      require(doc, "epsilon", doc.contains("epsilon") && doc["epsilon"].is_number());
      require(doc, "mode", doc.contains("mode") && doc["mode"].is_string());
      break;
    case ArtifactKind::ObjectRate:
      require(doc, "trf_size", doc.contains("trf_size") && doc["trf_size"].is_number());
      require(doc, "per_mask", doc.contains("per_mask") && doc["per_mask"].is_array());
      require(doc, "aggregate", doc.contains("aggregate") && doc["aggregate"].is_number());
      break;
    case ArtifactKind::Recommendation:
      require(doc, "trf_window", doc.contains("trf_window") && doc["trf_window"].is_array() &&
                                     doc["trf_window"].size() == 2);
      require(doc, "rationale", doc.contains("rationale") && doc["rationale"].is_string());
      require(doc, "confidence", doc.contains("confidence") && doc["confidence"].is_string());
      require(doc, "candidates", doc.contains("candidates") && doc["candidates"].is_array());
      break;
    case ArtifactKind::Candidates:
      require(doc, "candidates", doc.contains("candidates") && doc["candidates"].is_array());
      break;
    case ArtifactKind::Catalog:
      require(doc, "rows", doc.contains("rows") && doc["rows"].is_array() &&
                               doc["rows"].size() == 10);
      break;
    case ArtifactKind::Manifest:
      for (const char* key : {"command", "config", "dataset", "scheme", "version", "timestamp"})
        require(doc, key, doc.contains(key) && doc[key].is_string());
      require(doc, "seed", doc.contains("seed") && doc["seed"].is_number_integer());
      break;
  }
}

json make_manifest(const std::string& command, const std::string& config_path,
                   const std::string& dataset_path, std::uint64_t seed,
                   const std::string& scheme) {
  json doc;
  doc["command"] = command;
  doc["config"] = config_path;
  doc["dataset"] = dataset_path;
  doc["seed"] = seed;
  doc["scheme"] = scheme;
  doc["version"] = tool_version();
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  doc["timestamp"] = buf;
  return doc;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IOError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << fmt_double(m(i, j));
    }
    out << "\n";
  }
}

Eigen::MatrixXd read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IOError("invalid CSV cell in " + path.string());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IOError("ragged CSV in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IOError("empty CSV in " + path.string());
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  return m;
}

}  // namespace rfscope
