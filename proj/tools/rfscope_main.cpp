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

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "rfscope/advisor.hpp"
#include "rfscope/artifacts.hpp"
#include "rfscope/config.hpp"
#include "rfscope/engine.hpp"
#include "rfscope/graph.hpp"
#include "rfscope/metrics.hpp"
#include "rfscope/pgm.hpp"
#include "rfscope/rfprop.hpp"

namespace fs = std::filesystem;
using namespace rfscope;

namespace {

UNetConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot read config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

void ensure_out(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IOError("cannot create output directory " + dir.string());
}

void emit_manifest(const fs::path& out, const std::string& command,
                   const std::string& config_path, const std::string& dataset_path,
                   std::uint64_t seed, const std::string& scheme) {
  auto doc = make_manifest(command, config_path, dataset_path, seed, scheme);
  validate_artifact(doc, ArtifactKind::Manifest);
  write_json(out / "manifest.json", doc);
}

/// PGM files of a directory in lexicographic filename order, or the single
/// file itself.
std::vector<fs::path> list_pgms(const std::string& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".pgm")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
  } else {
    files.emplace_back(path);
  }
  if (files.empty()) throw IOError("no .pgm files under " + path);
  return files;
}

InitScheme parse_scheme(const std::string& name) {
  if (name == "kaiming" || name == "uniform_kaiming") return InitScheme::UniformKaiming;
  if (name == "all_ones") return InitScheme::AllOnes;
  throw ConfigError("scheme: expected kaiming or all_ones, got " + name);
}

const char* scheme_name(InitScheme s) {
  return s == InitScheme::AllOnes ? "all_ones" : "uniform_kaiming";
}

Eigen::MatrixXd noise_input(std::uint64_t seed, int h, int w) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) m(i, j) = dist(rng);
  return m;
}

int run_trf(const std::string& config_path, const std::string& out_dir, bool border_map) {
  const auto cfg = load_config(config_path);
  const auto report = analyze(build_unet(cfg), border_map);
  auto doc = trf_report_to_json(report);
  validate_artifact(doc, ArtifactKind::TRFReport);
  const fs::path out(out_dir);
  ensure_out(out);
  write_json(out / "trf_report.json", doc);
  if (border_map && report.border_map)
    write_csv(out / "border_map.csv", report.border_map->matrix());
  emit_manifest(out, "trf", config_path, "", 0, "");
  std::printf("trf_size %.6f\n", report.network_trf_size);
  return 0;
}

int run_params(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = load_config(config_path);
  const auto graph = build_unet(cfg);
  const long long total = count_parameters(graph);
  json doc;
  doc["total"] = total;
  json per_node = json::array();
  for (const auto& [id, p] : parameters_per_node(graph)) {
    json row;
    row["id"] = id;
    row["label"] = graph.nodes[id].label;
    row["kind"] = layer_kind_name(graph.nodes[id].kind);
    row["params"] = p;
    per_node.push_back(std::move(row));
  }
  doc["per_node"] = std::move(per_node);
  const fs::path out(out_dir);
  ensure_out(out);
  write_json(out / "params.json", doc);
  emit_manifest(out, "params", config_path, "", 0, "");
  std::printf("%lld\n", total);
  return 0;
}

int run_erf(const std::string& config_path, const std::string& out_dir, std::uint64_t seed,
            const std::string& scheme_str, const std::string& input_spec,
            std::vector<int> target, bool post_sigmoid) {
  const auto cfg = load_config(config_path);
  const auto graph = build_unet(cfg);
  const InitScheme scheme = parse_scheme(scheme_str);
  const auto weights = init_weights(graph, seed, scheme);

  Eigen::MatrixXd input;
  if (input_spec == "noise") {
    input = noise_input(seed, graph.input_height, graph.input_width);
  } else {
    input = load_pgm_gray(input_spec);
    if (input.rows() != graph.input_height || input.cols() != graph.input_width)
      throw ConfigError("input image dims do not match the config input_size");
  }

  int ti = graph.input_height / 2, tj = graph.input_width / 2;
  if (!target.empty()) {
    if (target.size() != 2) throw ConfigError("--target: expected two integers");
    ti = target[0];
    tj = target[1];
    if (ti < 0 || ti >= graph.input_height || tj < 0 || tj >= graph.input_width)
      throw ConfigError("--target: pixel outside the output grid");
  }

  const auto grid = compute_erf(graph, weights, input, ti, tj, post_sigmoid);
  auto sidecar = erf_sidecar_to_json(grid, ti, tj, seed, scheme);
  validate_artifact(sidecar, ArtifactKind::ERFSidecar);
  const fs::path out(out_dir);
  ensure_out(out);
  write_csv(out / "erf_grid.csv", grid.values);
  write_json(out / "erf_sidecar.json", sidecar);
  emit_manifest(out, "erf", config_path, input_spec, seed, scheme_name(scheme));
  std::printf("erf box [%d, %d, %d, %d]\n", grid.box.top, grid.box.left, grid.box.bottom,
              grid.box.right);
  return 0;
}

int run_erf_rate(const std::string& grid_path, const std::string& out_dir,
                 double epsilon_flag, bool epsilon_given) {
  const auto grid = read_csv(grid_path);
  json doc;
  double epsilon = epsilon_flag;
  if (epsilon_given) {
    doc["mode"] = "fixed";
  } else {
    std::vector<double> sample;
    sample.reserve(size_t(grid.size()));
    for (Eigen::Index j = 0; j < grid.cols(); ++j)
      for (Eigen::Index i = 0; i < grid.rows(); ++i) sample.push_back(std::abs(grid(i, j)));
    const auto decision = select_threshold(kde_estimate(sample, silverman_bandwidth(sample)));
    epsilon = decision.epsilon;
    doc["mode"] = decision.mode == ThresholdMode::BimodalTrough ? "bimodal_trough"
                                                                : "skewed_knee";
  }
  const double rate = erf_rate(grid, epsilon);
  doc["erf_rate"] = rate;
  doc["epsilon"] = epsilon;
  validate_artifact(doc, ArtifactKind::ERFRate);
  const fs::path out(out_dir);
  ensure_out(out);
  write_json(out / "erf_rate.json", doc);
  emit_manifest(out, "erf-rate", "", grid_path, 0, "");
  std::printf("erf_rate %.6f (epsilon %.6g)\n", rate, epsilon);
  return 0;
}

int run_object_rate(const std::string& masks_path, const std::string& out_dir, double trf_flag,
                    const std::string& config_path) {
  double trf = trf_flag;
  if (trf <= 0.0) {
    if (config_path.empty())
      throw ConfigError("object-rate: need --trf or --config to fix the receptive field size");
    trf = analyze(build_unet(load_config(config_path))).network_trf_size;
  }
  const auto files = list_pgms(masks_path);
  json per_mask = json::array();
  double sum = 0.0;
  int counted = 0, empty = 0;
  for (const auto& file : files) {
    const auto mask = load_mask(file);
    json row;
    row["file"] = file.filename().string();
    if (const auto box = foreground_bbox(mask.pixels)) {
      const double rate = object_rate(mask.pixels, trf);
      row["object_rate"] = rate;
      sum += rate;
      ++counted;
    } else {
      row["object_rate"] = nullptr;  // empty mask, excluded from the mean
      ++empty;
    }
    per_mask.push_back(std::move(row));
  }
  if (counted == 0) throw MetricError("object-rate: every mask is empty");
  json doc;
  doc["trf_size"] = trf;
  doc["per_mask"] = std::move(per_mask);
  doc["aggregate"] = sum / double(counted);
  doc["empty_masks"] = empty;
  validate_artifact(doc, ArtifactKind::ObjectRate);
  const fs::path out(out_dir);
  ensure_out(out);
  write_json(out / "object_rate.json", doc);
  emit_manifest(out, "object-rate", config_path, masks_path, 0, "");
  std::printf("object_rate %.6f over %d masks\n", sum / double(counted), counted);
  return 0;
}

int run_metrics(const std::string& pred_path, const std::string& truth_path,
                const std::string& out_dir) {
  const auto preds = list_pgms(pred_path);
  const auto truths = list_pgms(truth_path);
  if (preds.size() != truths.size())
    throw ConfigError("metrics: prediction and truth counts differ");
  json pairs = json::array();
  SegmentationScores mean;
  for (size_t i = 0; i < preds.size(); ++i) {
    const auto pred = load_mask(preds[i]);
    const auto truth = load_mask(truths[i]);
    const auto s = segmentation_scores(pred.pixels, truth.pixels);
    auto row = scores_to_json(s);
    validate_artifact(row, ArtifactKind::MetricReport);
    row["pred"] = preds[i].filename().string();
    row["truth"] = truths[i].filename().string();
    pairs.push_back(std::move(row));
    mean.dice += s.dice;
    mean.jaccard += s.jaccard;
    mean.sensitivity += s.sensitivity;
    mean.specificity += s.specificity;
    mean.accuracy += s.accuracy;
  }
  const double n = double(preds.size());
  mean.dice /= n;
  mean.jaccard /= n;
  mean.sensitivity /= n;
  mean.specificity /= n;
  mean.accuracy /= n;
  json doc;
  doc["pairs"] = std::move(pairs);
  doc["aggregate"] = scores_to_json(mean);
  validate_artifact(doc["aggregate"], ArtifactKind::MetricReport);
  const fs::path out(out_dir);
  ensure_out(out);
  write_json(out / "metrics.json", doc);
  emit_manifest(out, "metrics", "", pred_path + ";" + truth_path, 0, "");
  std::printf("dice %.6f jaccard %.6f over %zu pairs\n", mean.dice, mean.jaccard,
              preds.size());
  return 0;
}

int run_advise(const std::string& masks_path, const std::string& contrast_str,
               long long budget, const std::string& out_dir) {
  Contrast contrast;
  if (contrast_str == "high")
    contrast = Contrast::High;
  else if (contrast_str == "low")
    contrast = Contrast::Low;
  else
    throw ConfigError("--contrast: expected high or low, got " + contrast_str);

  const auto files = list_pgms(masks_path);
  std::vector<BinaryImage> masks;
  masks.reserve(files.size());
  for (const auto& file : files) masks.push_back(load_mask(file).pixels);
  const auto stats = roi_stats(masks);

  AdvisorOptions opts;
  if (budget > 0) opts.param_budget = budget;
  const auto rec = recommend_trf(stats, contrast, opts);
  auto doc = recommendation_to_json(rec);
  doc["average_roi_dimension"] = stats.average_dimension;
  doc["empty_masks"] = stats.empty_masks;
  validate_artifact(doc, ArtifactKind::Recommendation);
  const fs::path out(out_dir);
  ensure_out(out);
  write_json(out / "recommendation.json", doc);
  emit_manifest(out, "advise", "", masks_path, 0, "");
  std::printf("trf window [%.1f, %.1f] (%s confidence)\n", rec.low, rec.high,
              rec.confidence == Confidence::Low ? "low" : "normal");
  return 0;
}

int run_search_config(double target, long long budget, int k_min, int k_max, int d_min,
                      int d_max, const std::string& out_dir) {
  const auto cands = search_config(target, budget, k_min, k_max, d_min, d_max);
  auto doc = candidates_to_json(cands);
  validate_artifact(doc, ArtifactKind::Candidates);
  const fs::path out(out_dir);
  ensure_out(out);
  write_json(out / "candidates.json", doc);
  emit_manifest(out, "search-config", "", "", 0, "");
  std::printf("%zu candidates; best (k=%d, d=%d) trf %.3f params %lld\n", cands.size(),
              cands.front().config.kernel_size, cands.front().config.depth,
              cands.front().trf, cands.front().params);
  return 0;
}

int run_catalog(const std::string& out_dir) {
  auto doc = catalog_to_json();
  validate_artifact(doc, ArtifactKind::Catalog);
  const fs::path out(out_dir);
  ensure_out(out);
  write_json(out / "catalog.json", doc);
  emit_manifest(out, "catalog", "", "", 0, "");
  std::printf("%zu reference configurations\n", doc["rows"].size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Receptive-field analysis for U-Net style segmentation networks"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", input_spec = "noise", scheme = "kaiming";
  std::string grid_path, masks_path, pred_path, truth_path, contrast;
  std::uint64_t seed = 0;
  std::vector<int> target;
  bool border_map = false, post_sigmoid = false;
  double epsilon = 0.0, trf_flag = 0.0, search_target = 0.0;
  long long budget = 0, search_budget = 31000000;
  int k_min = 3, k_max = 5, d_min = 1, d_max = 6;

  auto* trf = app.add_subcommand("trf", "Theoretical receptive field of a configuration");
  trf->add_option("--config", config_path, "U-Net config JSON")->required();
  trf->add_option("--out", out_dir, "Output directory");
  trf->add_flag("--border-map", border_map, "Also emit the per-pixel size map CSV");

  auto* params = app.add_subcommand("params", "Trainable parameter count");
  params->add_option("--config", config_path)->required();
  params->add_option("--out", out_dir);

  auto* erf = app.add_subcommand("erf", "Effective receptive field (input gradient)");
  erf->add_option("--config", config_path)->required();
  erf->add_option("--out", out_dir);
  erf->add_option("--seed", seed, "Weight/noise seed");
  erf->add_option("--scheme", scheme, "kaiming | all_ones");
  erf->add_option("--input", input_spec, "PGM path or 'noise'");
  erf->add_option("--target", target, "Output pixel (row col); default center")->expected(2);
  erf->add_flag("--post-sigmoid", post_sigmoid, "Differentiate after the sigmoid");

  auto* erf_rate_cmd = app.add_subcommand("erf-rate", "Contributing-pixel rate of an ERF grid");
  erf_rate_cmd->add_option("--grid", grid_path, "ERF grid CSV")->required();
  erf_rate_cmd->add_option("--out", out_dir);
  auto* eps_opt = erf_rate_cmd->add_option("--epsilon", epsilon, "Fixed threshold");

  auto* object_rate_cmd = app.add_subcommand("object-rate", "RoI bbox area over squared TRF");
  object_rate_cmd->add_option("--masks", masks_path, "Mask PGM file or directory")->required();
  object_rate_cmd->add_option("--trf", trf_flag, "Receptive field size");
  object_rate_cmd->add_option("--config", config_path, "Config to derive the size from");
  object_rate_cmd->add_option("--out", out_dir);

  auto* metrics_cmd = app.add_subcommand("metrics", "Segmentation scores per (pred, truth)");
  metrics_cmd->add_option("--pred", pred_path, "Prediction PGM file or directory")->required();
  metrics_cmd->add_option("--truth", truth_path, "Ground-truth PGM file or directory")
      ->required();
  metrics_cmd->add_option("--out", out_dir);

  auto* advise = app.add_subcommand("advise", "Recommend a receptive-field window");
  advise->add_option("--masks", masks_path)->required();
  advise->add_option("--contrast", contrast, "high | low")->required();
  advise->add_option("--budget", budget, "Parameter budget for candidates");
  advise->add_option("--out", out_dir);

  auto* search = app.add_subcommand("search-config", "Configurations matching a target size");
  search->add_option("--target", search_target, "Target receptive-field size")->required();
  search->add_option("--budget", search_budget, "Parameter budget");
  search->add_option("--k-min", k_min);
  search->add_option("--k-max", k_max);
  search->add_option("--d-min", d_min);
  search->add_option("--d-max", d_max);
  search->add_option("--out", out_dir);

  auto* catalog_cmd = app.add_subcommand("catalog", "Reference configuration table");
  catalog_cmd->add_option("--out", out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (trf->parsed()) return run_trf(config_path, out_dir, border_map);
    if (params->parsed()) return run_params(config_path, out_dir);
    if (erf->parsed())
      return run_erf(config_path, out_dir, seed, scheme, input_spec, target, post_sigmoid);
    if (erf_rate_cmd->parsed())
      return run_erf_rate(grid_path, out_dir, epsilon, eps_opt->count() > 0);
    if (object_rate_cmd->parsed())
      return run_object_rate(masks_path, out_dir, trf_flag, config_path);
    if (metrics_cmd->parsed()) return run_metrics(pred_path, truth_path, out_dir);
    if (advise->parsed()) return run_advise(masks_path, contrast, budget, out_dir);
    if (search->parsed())
      return run_search_config(search_target, search_budget, k_min, k_max, d_min, d_max,
                               out_dir);
    if (catalog_cmd->parsed()) return run_catalog(out_dir);
  } catch (const IOError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
