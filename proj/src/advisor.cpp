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

#include "rfscope/advisor.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rfscope/rfprop.hpp"

namespace rfscope {

namespace {

int template_input_side(int d) {
  const int div = 1 << d;
  return ((576 + div - 1) / div) * div;
}

UNetConfig template_config(int k, int d) {
  UNetConfig cfg;
  cfg.kernel_size = k;
  cfg.depth = d;
  cfg.channels.assign(d + 1, 1);
  const int side = template_input_side(d);
  cfg.input_height = cfg.input_width = side;
  return cfg;
}

UNetConfig scaled_config(int k, int d, double multiplier) {
  UNetConfig cfg = template_config(k, d);
  for (int lvl = 0; lvl <= d; ++lvl)
    cfg.channels[lvl] = std::max(1, int(std::lround(multiplier * double(1 << lvl))));
  return cfg;
}

long long params_at(int k, int d, double multiplier) {
  return count_parameters(build_unet(scaled_config(k, d, multiplier)));
}

}  // namespace

double template_trf(int k, int d) {
  // Channel counts do not move receptive-field boxes, so a width-1
  // template stands in for any profile at this (k, d).
  static std::map<std::pair<int, int>, double> cache;
  auto it = cache.find({k, d});
  if (it != cache.end()) return it->second;
  const double trf = analyze(build_unet(template_config(k, d))).network_trf_size;
  cache[{k, d}] = trf;
  return trf;
}

std::vector<Candidate> search_config(double target_trf, long long param_budget, int k_min,
                                     int k_max, int d_min, int d_max,
                                     double budget_tolerance) {
  if (param_budget <= 0) throw ConfigError("param_budget: must be positive");
  if (k_min > k_max || d_min > d_max || k_min < 2 || d_min < 1)
    throw ConfigError("search ranges: empty or out of bounds");
  if (target_trf <= 0.0) throw ConfigError("target_trf: must be positive");

  std::vector<std::pair<int, int>> kept;
  for (int k = k_min; k <= k_max; ++k)
    for (int d = d_min; d <= d_max; ++d)
      if (std::abs(template_trf(k, d) - target_trf) <= 0.5 * target_trf) kept.emplace_back(k, d);
  if (kept.empty())
    throw ConfigError("search_config: no (k, d) within 50% of target receptive-field size");

  std::vector<Candidate> out;
  for (auto [k, d] : kept) {
    // Parameter count grows monotonically (roughly quadratically) with
    // the channel multiplier; bracket then bisect.
    if (params_at(k, d, 1.0) > param_budget)
      throw ConfigError("search_config: budget unreachable with >= 1 channel at d = " +
                        std::to_string(d));
    double lo = 1.0, hi = 2.0;
    while (params_at(k, d, hi) < param_budget) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e9) throw ConfigError("search_config: bisection bracket not found");
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-9 * hi; ++iter) {
      const double mid = 0.5 * (lo + hi);
      (params_at(k, d, mid) <= param_budget ? lo : hi) = mid;
    }
    const long long p_lo = params_at(k, d, lo);
    const long long p_hi = params_at(k, d, hi);
    const double m = std::abs(double(p_lo) - double(param_budget)) <=
                             std::abs(double(p_hi) - double(param_budget))
                         ? lo
                         : hi;
    const long long params = params_at(k, d, m);
    if (std::abs(double(params) - double(param_budget)) > budget_tolerance * double(param_budget))
      throw ConfigError("search_config: cannot land within budget tolerance at d = " +
                        std::to_string(d));
    out.push_back({scaled_config(k, d, m), template_trf(k, d), params});
  }
  std::stable_sort(out.begin(), out.end(), [&](const Candidate& a, const Candidate& b) {
    return std::abs(a.trf - target_trf) < std::abs(b.trf - target_trf);
  });
  return out;
}

Recommendation recommend_trf(const RoIStats& stats, Contrast contrast,
                             const AdvisorOptions& opts) {
  if (stats.dimensions.empty() || stats.average_dimension <= 0.0)
    throw MetricError("recommend_trf: degenerate RoI statistics");

  double cat_lo = catalog().front().published_trf, cat_hi = cat_lo;
  for (const auto& row : catalog()) {
    cat_lo = std::min(cat_lo, double(row.published_trf));
    cat_hi = std::max(cat_hi, double(row.published_trf));
  }

  Recommendation rec;
  if (contrast == Contrast::High) {
    rec.rationale = Rationale::HighContrastMinimal;
    rec.low = 0.0;
    rec.high = cat_lo;
  } else {
    rec.rationale = Rationale::LowContrastRoiMatched;
    const double avg = stats.average_dimension;
    rec.low = opts.window_low_coeff * avg;
    rec.high = opts.window_high_coeff * avg;
    if (avg < opts.low_confidence_dim) rec.confidence = Confidence::Low;
    // Intersect with the reference range; an empty intersection widens to
    // the nearest reference value and lowers confidence.
    const double ilo = std::max(rec.low, cat_lo), ihi = std::min(rec.high, cat_hi);
    if (ilo <= ihi) {
      rec.low = ilo;
      rec.high = ihi;
    } else {
      const double nearest = rec.high < cat_lo ? cat_lo : cat_hi;
      rec.low = std::min(rec.low, nearest);
      rec.high = std::max(rec.high, nearest);
      rec.confidence = Confidence::Low;
    }
  }

  // Candidate configurations inside the window, scaled to the budget.
  for (int k = 3; k <= 5; ++k)
    for (int d = 1; d <= 6; ++d) {
      const double trf = template_trf(k, d);
      if (trf < rec.low || trf > rec.high) continue;
      try {
        auto found = search_config(trf, opts.param_budget, k, k, d, d, opts.budget_tolerance);
        rec.candidates.insert(rec.candidates.end(), found.begin(), found.end());
      } catch (const ConfigError&) {
        // A (k, d) that cannot meet the budget is simply not offered.
      }
    }
  return rec;
}

}  // namespace rfscope
