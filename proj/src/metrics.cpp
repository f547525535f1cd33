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

#include "rfscope/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rfscope {

double silverman_bandwidth(const std::vector<double>& sample) {
  const size_t n = sample.size();
  if (n < 2) throw MetricError("silverman_bandwidth: need at least 2 samples");
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / double(n);
  double ss = 0.0;
  for (double v : sample) ss += (v - mean) * (v - mean);
  const double sigma = std::sqrt(ss / double(n - 1));
  if (sigma <= 0.0) throw MetricError("silverman_bandwidth: constant sample");
  return 1.06 * sigma * std::pow(double(n), -0.2);
}

KDEModel kde_estimate(const std::vector<double>& sample, double bandwidth, int grid_points,
                      double smooth_sigma) {
  if (bandwidth <= 0.0) throw MetricError("kde_estimate: bandwidth must be positive");
  if (grid_points < 16) throw MetricError("kde_estimate: need at least 16 grid points");
  if (sample.empty()) throw MetricError("kde_estimate: empty sample");

  KDEModel model;
  model.sample = sample;
  model.bandwidth = bandwidth;
  const double hi = *std::max_element(sample.begin(), sample.end());
  const double span = hi > 0.0 ? hi : 1.0;
  model.grid_x.resize(grid_points);
  for (int i = 0; i < grid_points; ++i)
    model.grid_x(i) = span * double(i) / double(grid_points - 1);

  const double norm = 1.0 / (double(sample.size()) * bandwidth * std::sqrt(2.0 * M_PI));
  auto kernel_sum = [&](double x) {
    double acc = 0.0;
    for (double y : sample) {
      // Reflect at both grid boundaries so the density mass stays on
      // [0, max]; magnitudes cannot fall outside that interval.
      const double d0 = (x - y) / bandwidth;
      const double d1 = (x + y) / bandwidth;
      const double d2 = (x - (2.0 * span - y)) / bandwidth;
      acc += std::exp(-0.5 * d0 * d0) + std::exp(-0.5 * d1 * d1) + std::exp(-0.5 * d2 * d2);
    }
    return norm * acc;
  };
  model.density.resize(grid_points);
  for (int i = 0; i < grid_points; ++i) model.density(i) = kernel_sum(model.grid_x(i));

  // Gaussian smoothing over grid cells, renormalized at the borders.
  const int radius = std::max(1, int(std::ceil(4.0 * smooth_sigma)));
  Eigen::VectorXd taps(2 * radius + 1);
  for (int t = -radius; t <= radius; ++t)
    taps(t + radius) = std::exp(-0.5 * double(t) * double(t) / (smooth_sigma * smooth_sigma));
  model.smoothed.resize(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    double acc = 0.0, wsum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
      const int j = i + t;
      if (j < 0 || j >= grid_points) continue;
      acc += taps(t + radius) * model.density(j);
      wsum += taps(t + radius);
    }
    model.smoothed(i) = acc / wsum;
  }
  return model;
}

namespace {

struct Peak {
  int index;
  double prominence;
};

// Topographic prominence: height above the higher of the two valley
// minima separating the peak from taller terrain.
std::vector<Peak> find_peaks(const Eigen::VectorXd& y, double min_prominence) {
  const int n = static_cast<int>(y.size());
  std::vector<Peak> peaks;
  for (int i = 0; i < n; ++i) {
    const double l = i > 0 ? y(i - 1) : -1.0;
    const double r = i + 1 < n ? y(i + 1) : -1.0;
    if (!(y(i) > l && y(i) >= r)) continue;
    // A scan that runs off the grid without meeting higher terrain does
    // not bound the peak; only valleys toward taller peaks count as bases.
    double left_min = y(i), right_min = y(i);
    bool left_bounded = false, right_bounded = false;
    for (int j = i - 1; j >= 0; --j) {
      if (y(j) > y(i)) {
        left_bounded = true;
        break;
      }
      left_min = std::min(left_min, y(j));
    }
    for (int j = i + 1; j < n; ++j) {
      if (y(j) > y(i)) {
        right_bounded = true;
        break;
      }
      right_min = std::min(right_min, y(j));
    }
    double base;
    if (left_bounded && right_bounded)
      base = std::max(left_min, right_min);
    else if (left_bounded)
      base = left_min;
    else if (right_bounded)
      base = right_min;
    else
      base = std::min(left_min, right_min);  // the global maximum
    const double prom = y(i) - base;
    if (prom >= min_prominence) peaks.push_back({i, prom});
  }
  return peaks;
}

}  // namespace

ThresholdDecision select_threshold(const KDEModel& model, const ThresholdOptions& opts) {
  const Eigen::VectorXd& y = model.smoothed;
  const int n = static_cast<int>(y.size());
  ThresholdDecision dec;

  const double global_peak = y.maxCoeff();
  std::vector<Peak> peaks = find_peaks(y, opts.peak_prominence_frac * global_peak);
  for (const Peak& p : peaks) dec.peaks.push_back(model.grid_x(p.index));

  if (peaks.size() >= 2) {
    std::vector<Peak> by_prom = peaks;
    std::stable_sort(by_prom.begin(), by_prom.end(),
                     [](const Peak& a, const Peak& b) { return a.prominence > b.prominence; });
    int a = by_prom[0].index, b = by_prom[1].index;
    if (a > b) std::swap(a, b);
    int trough = a;
    for (int i = a; i <= b; ++i)
      if (y(i) < y(trough)) trough = i;
    dec.mode = ThresholdMode::BimodalTrough;
    dec.epsilon = model.grid_x(trough);
    dec.trough = dec.epsilon;
    return dec;
  }

  // Single mode: walk down from the peak until the descent flattens to a
  // fraction of its steepest value.
  int peak = 0;
  y.maxCoeff(&peak);
  double steepest = 0.0;
  for (int i = peak; i + 1 < n; ++i) steepest = std::max(steepest, y(i) - y(i + 1));
  int knee = n - 1;
  for (int i = peak; i + 1 < n; ++i) {
    if (y(i) - y(i + 1) < opts.knee_slope_frac * steepest && i > peak) {
      knee = i;
      break;
    }
  }
  dec.mode = ThresholdMode::SkewedKnee;
  dec.epsilon = model.grid_x(knee);
  dec.knee = dec.epsilon;
  return dec;
}

double erf_rate(const Eigen::MatrixXd& grid, double epsilon) {
  if (grid.size() == 0) throw MetricError("erf_rate: empty grid");
  if (epsilon < 0.0) throw MetricError("erf_rate: epsilon must be non-negative");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < grid.cols(); ++j)
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
      const double a = std::abs(grid(i, j));
      if (a > epsilon) acc += 1.0 + a;
    }
  return acc / double(grid.size());
}

std::optional<RFBox> foreground_bbox(const BinaryImage& mask) {
  int top = -1, bottom = -1, left = -1, right = -1;
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      if (mask(i, j)) {
        if (top < 0) top = int(i);
        bottom = std::max(bottom, int(i));
        left = left < 0 ? int(j) : std::min(left, int(j));
        right = std::max(right, int(j));
      }
  if (top < 0) return std::nullopt;
  return RFBox{top, left, bottom, right};
}

double object_rate(const BinaryImage& mask, double trf_size) {
  if (trf_size <= 0.0) throw MetricError("object_rate: trf_size must be positive");
  const auto box = foreground_bbox(mask);
  if (!box) throw MetricError("object_rate: empty mask");
  return double(box->bottom - box->top) * double(box->right - box->left) /
         (trf_size * trf_size);
}

SegmentationScores segmentation_scores(const BinaryImage& pred, const BinaryImage& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw MetricError("segmentation_scores: dimension mismatch");
  long long tp = 0, tn = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      if (pred(i, j) && truth(i, j)) ++tp;
      else if (pred(i, j)) ++fp;
      else if (truth(i, j)) ++fn;
      else ++tn;
    }
  SegmentationScores s;
  s.dice = (tp + fp + fn) == 0 ? 1.0 : 2.0 * tp / double(2 * tp + fp + fn);
  s.jaccard = (tp + fp + fn) == 0 ? 1.0 : tp / double(tp + fp + fn);
  s.sensitivity = (tp + fn) == 0 ? 1.0 : tp / double(tp + fn);
  s.specificity = (tn + fp) == 0 ? 1.0 : tn / double(tn + fp);
  s.accuracy = (tp + tn) / double(pred.size());
  return s;
}

RoIStats roi_stats(const std::vector<BinaryImage>& masks) {
  if (masks.empty()) throw MetricError("roi_stats: need at least one mask");
  RoIStats stats;
  for (const auto& m : masks) {
    const auto box = foreground_bbox(m);
    if (!box) {
      ++stats.empty_masks;
      continue;
    }
    stats.boxes.push_back(*box);
    stats.dimensions.push_back(box->size());
  }
  if (stats.dimensions.empty()) throw MetricError("roi_stats: all masks empty");
  stats.average_dimension =
      std::accumulate(stats.dimensions.begin(), stats.dimensions.end(), 0.0) /
      double(stats.dimensions.size());
  return stats;
}

}  // namespace rfscope
