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
#include <optional>
#include <stdexcept>
#include <vector>

#include "rfscope/rfprop.hpp"

namespace rfscope {

class MetricError : public std::runtime_error {
 public:
  explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

using BinaryImage = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Gaussian kernel density estimate of a sample of magnitudes, evaluated
/// on a uniform grid over [0, max(sample)], plus a smoothed copy used for
/// threshold selection.
struct KDEModel {
  std::vector<double> sample;  // |y| values
  double bandwidth = 0.0;
  Eigen::VectorXd grid_x;      // grid abscissae
  Eigen::VectorXd density;     // raw estimate
  Eigen::VectorXd smoothed;    // after Gaussian smoothing
};

/// h = 1.06 * sigma * N^(-1/5) with the unbiased sample standard deviation.
double silverman_bandwidth(const std::vector<double>& sample);

/// Boundary-corrected (reflected) Gaussian KDE followed by a Gaussian
/// smoothing filter over the grid (sigma = smooth_sigma cells).
KDEModel kde_estimate(const std::vector<double>& sample, double bandwidth,
                      int grid_points = 512, double smooth_sigma = 2.0);

enum class ThresholdMode { BimodalTrough, SkewedKnee };

struct ThresholdDecision {
  double epsilon = 0.0;
  ThresholdMode mode = ThresholdMode::SkewedKnee;
  std::vector<double> peaks;             // detected mode locations
  std::optional<double> trough;          // bimodal: density minimum between modes
  std::optional<double> knee;            // skewed: where the descent levels off
};

struct ThresholdOptions {
  double peak_prominence_frac = 0.05;  // of the global smoothed peak
  double knee_slope_frac = 0.01;       // of the steepest initial descent
};

/// Picks the cutoff between non-contributing and contributing magnitudes:
/// the trough between the two most prominent modes when the smoothed
/// density is multimodal, otherwise the point where the initial descent
/// flattens out.
ThresholdDecision select_threshold(const KDEModel& model, const ThresholdOptions& opts = {});

/// Weighted fraction of contributing pixels: sum over grid entries y of
/// [|y| > epsilon] * (1 + |y|), divided by the grid area. May exceed 1.
double erf_rate(const Eigen::MatrixXd& grid, double epsilon);

/// Bounding-box area of the foreground divided by the squared receptive
/// field size. Throws MetricError on an empty mask.
double object_rate(const BinaryImage& mask, double trf_size);

struct SegmentationScores {
  double dice = 0.0, jaccard = 0.0, sensitivity = 0.0, specificity = 0.0, accuracy = 0.0;
};

/// Confusion-matrix scores. Empty prediction vs empty truth scores dice
/// and jaccard as 1; empty vs non-empty as 0.
SegmentationScores segmentation_scores(const BinaryImage& pred, const BinaryImage& truth);

struct RoIStats {
  std::vector<RFBox> boxes;            // per non-empty mask
  std::vector<double> dimensions;      // sqrt((b-t)*(r-l)) per non-empty mask
  double average_dimension = 0.0;
  int empty_masks = 0;
};

/// Per-mask bounding boxes and the mean RoI dimension over non-empty
/// masks. Throws MetricError when every mask is empty.
RoIStats roi_stats(const std::vector<BinaryImage>& masks);

/// Bounding box of the foreground, or nothing for an empty mask.
std::optional<RFBox> foreground_bbox(const BinaryImage& mask);

}  // namespace rfscope
