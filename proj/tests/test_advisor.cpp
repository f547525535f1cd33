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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rfscope/advisor.hpp"
#include "rfscope/graph.hpp"

using namespace rfscope;

namespace {

RoIStats stats_with_dim(double avg) {
  RoIStats s;
  s.boxes = {{0, 0, int(avg), int(avg)}};
  s.dimensions = {avg};
  s.average_dimension = avg;
  return s;
}

}  // namespace

TEST_CASE("low contrast recommendations bracket the roi dimension") {
  const auto rec = recommend_trf(stats_with_dim(260.0), Contrast::Low);
  CHECK(rec.rationale == Rationale::LowContrastRoiMatched);
  CHECK(rec.confidence == Confidence::Normal);
  CHECK(rec.low == doctest::Approx(156.0));   // 0.6 * 260
  CHECK(rec.high == doctest::Approx(312.0));  // 1.2 * 260
}

TEST_CASE("high contrast recommendations stay small") {
  const auto rec = recommend_trf(stats_with_dim(260.0), Contrast::High);
  CHECK(rec.rationale == Rationale::HighContrastMinimal);
  CHECK(rec.low == 0.0);
  CHECK(rec.high == doctest::Approx(54.0));  // smallest catalog size
}

TEST_CASE("small rois are flagged low confidence") {
  const auto rec = recommend_trf(stats_with_dim(101.0), Contrast::Low);
  CHECK(rec.confidence == Confidence::Low);
  const auto ok = recommend_trf(stats_with_dim(150.0), Contrast::Low);
  CHECK(ok.confidence == Confidence::Normal);
}

TEST_CASE("the window is clipped to the reference range") {
  // 0.6 * 600 = 360 and 1.2 * 600 = 720, but the largest reference is 570.
  const auto rec = recommend_trf(stats_with_dim(600.0), Contrast::Low);
  CHECK(rec.low == doctest::Approx(360.0));
  CHECK(rec.high == doctest::Approx(570.0));
  // Way beyond anything in the reference set: empty intersection.
  const auto far = recommend_trf(stats_with_dim(2000.0), Contrast::Low);
  CHECK(far.confidence == Confidence::Low);
}

TEST_CASE("the recommendation window is monotone in the roi size") {
  double prev_low = -1.0, prev_high = -1.0;
  for (double dim : {160.0, 200.0, 260.0, 320.0, 400.0}) {
    const auto rec = recommend_trf(stats_with_dim(dim), Contrast::Low);
    CHECK(rec.low >= prev_low);
    CHECK(rec.high >= prev_high);
    prev_low = rec.low;
    prev_high = rec.high;
  }
}

TEST_CASE("template receptive fields grow with kernel and depth") {
  CHECK(template_trf(3, 3) > template_trf(3, 2));
  CHECK(template_trf(3, 4) > template_trf(3, 3));
  CHECK(template_trf(4, 3) > template_trf(3, 3));
}

TEST_CASE("search_config hits the parameter budget for every candidate") {
  const auto cands = search_config(100.0, 31000000, 3, 3, 1, 4);
  REQUIRE_FALSE(cands.empty());
  // The best depth for a size-100 target with k=3 is 3 (template size 91).
  CHECK(cands.front().config.depth == 3);
  CHECK(cands.front().config.kernel_size == 3);
  for (const auto& c : cands) {
    CHECK(std::abs(double(c.params) - 31000000.0) <= 0.005 * 31000000.0);
    CHECK(c.params == count_parameters(build_unet(c.config)));
    CHECK(std::abs(c.trf - 100.0) <= 50.0);
    CHECK(int(c.config.channels.size()) == c.config.depth + 1);
  }
  // Sorted by distance from the target.
  for (size_t i = 1; i < cands.size(); ++i)
    CHECK(std::abs(cands[i - 1].trf - 100.0) <= std::abs(cands[i].trf - 100.0));
}

TEST_CASE("search_config rejects unreachable targets and budgets") {
  CHECK_THROWS_AS(search_config(100.0, 31000000, 3, 3, 8, 8), ConfigError);
  // A deep network cannot fit in a thousand parameters.
  CHECK_THROWS_AS(search_config(281.0, 1000, 4, 4, 4, 4), ConfigError);
}

TEST_CASE("search_config is deterministic") {
  const auto a = search_config(200.0, 31000000, 3, 4, 2, 5);
  const auto b = search_config(200.0, 31000000, 3, 4, 2, 5);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].trf == b[i].trf);
    CHECK(a[i].params == b[i].params);
    CHECK(a[i].config.channels == b[i].config.channels);
  }
}
