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

#include <vector>

#include "rfscope/config.hpp"
#include "rfscope/metrics.hpp"

namespace rfscope {

enum class Contrast { High, Low };
enum class Rationale { HighContrastMinimal, LowContrastRoiMatched };
enum class Confidence { Normal, Low };

struct Candidate {
  UNetConfig config;
  double trf = 0.0;
  long long params = 0;
};

struct Recommendation {
  double low = 0.0, high = 0.0;  // recommended receptive-field window
  Rationale rationale = Rationale::LowContrastRoiMatched;
  Confidence confidence = Confidence::Normal;
  std::vector<Candidate> candidates;
};

struct AdvisorOptions {
  double window_low_coeff = 0.6;    // of the average RoI dimension
  double window_high_coeff = 1.2;
  double low_confidence_dim = 150.0;  // below this, flag the heuristic
  long long param_budget = 31000000;
  double budget_tolerance = 0.005;  // +-0.5%
};

/// Receptive-field window recommendation. High contrast: up to the
/// smallest reference size. Low contrast: a window around the average RoI
/// dimension, intersected with the reference range; small RoIs and empty
/// intersections are flagged low confidence.
Recommendation recommend_trf(const RoIStats& stats, Contrast contrast,
                             const AdvisorOptions& opts = {});

/// For every (k, d) whose template receptive field is within 50% of the
/// target, scales a geometric channel profile by bisection until the
/// parameter count lands within the budget tolerance. Sorted by
/// |trf - target|. Throws ConfigError when no (k, d) qualifies or a
/// budget is unreachable.
std::vector<Candidate> search_config(double target_trf, long long param_budget, int k_min,
                                     int k_max, int d_min, int d_max,
                                     double budget_tolerance = 0.005);

/// Receptive-field size of a (k, d) template (channels set to 1) on the
/// smallest input divisible by 2^d that is at least 576 wide.
double template_trf(int k, int d);

}  // namespace rfscope
