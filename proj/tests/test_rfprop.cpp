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

#include <random>

#include "rfscope/rfprop.hpp"

using namespace rfscope;

namespace {

RFTensor random_boxes(std::mt19937_64& rng, int h, int w) {
  std::uniform_int_distribution<int> row(0, h - 1), col(0, w - 1);
  RFTensor t = RFTensor::zeros(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      int a = row(rng), b = row(rng), c = col(rng), d = col(rng);
      t.set(i, j, {std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)});
    }
  return t;
}

bool equal(const RFTensor& a, const RFTensor& b) {
  return a.height == b.height && a.width == b.width && (a.top == b.top).all() &&
         (a.left == b.left).all() && (a.bottom == b.bottom).all() && (a.right == b.right).all();
}

}  // namespace

TEST_CASE("input layer boxes are the pixels themselves") {
  const auto t = trf_input(2, 2);
  CHECK(t.box(0, 0) == RFBox{0, 0, 0, 0});
  CHECK(t.box(0, 1) == RFBox{0, 1, 0, 1});
  CHECK(t.box(1, 0) == RFBox{1, 0, 1, 0});
  CHECK(t.box(1, 1) == RFBox{1, 1, 1, 1});
  CHECK(trf_input(1, 1).box(0, 0) == RFBox{0, 0, 0, 0});
  const auto big = trf_input(576, 576);
  CHECK(big.box(288, 288) == RFBox{288, 288, 288, 288});
}

TEST_CASE("conv rule grows the box by the kernel footprint") {
  const auto t = trf_conv(trf_input(5, 5), 3, 1);
  CHECK(t.box(2, 2) == RFBox{1, 1, 3, 3});
  CHECK(t.box(0, 0) == RFBox{0, 0, 1, 1});  // clamped at the border
  const auto t2 = trf_conv(trf_conv(trf_input(9, 9), 3, 1), 3, 1);
  CHECK(t2.box(4, 4) == RFBox{2, 2, 6, 6});
}

TEST_CASE("maxpool rule unions the window corners") {
  const auto t = trf_maxpool(trf_input(4, 4), 2);
  CHECK(t.height == 2);
  CHECK(t.box(0, 0) == RFBox{0, 0, 1, 1});
  const auto t2 = trf_maxpool(trf_conv(trf_input(8, 8), 3, 1), 2);
  CHECK(t2.box(1, 1) == RFBox{1, 1, 4, 4});
  CHECK_THROWS(trf_maxpool(trf_input(5, 5), 2));
}

TEST_CASE("upsample with k equal to stride copies without overlap") {
  const auto t = trf_upsample(trf_input(2, 2), 2, 2);
  CHECK(t.height == 4);
  CHECK(t.box(0, 0) == RFBox{0, 0, 0, 0});
  CHECK(t.box(1, 1) == RFBox{0, 0, 0, 0});
  CHECK(t.box(2, 2) == RFBox{1, 1, 1, 1});
}

TEST_CASE("upsample with overlap merges writer boxes") {
  // k=3, s=2 on 3x3: output (2,2) is written by inputs (0,*) and (1,*).
  const auto t = trf_upsample(trf_input(3, 3), 3, 2);
  CHECK(t.height == 6);
  CHECK(t.box(2, 2) == RFBox{0, 0, 1, 1});
  CHECK(t.box(0, 0) == RFBox{0, 0, 0, 0});
}

TEST_CASE("upsample containment is preserved in the copy-only case") {
  std::mt19937_64 rng(7);
  const auto prev = random_boxes(rng, 5, 5);
  const auto t = trf_upsample(prev, 2, 2);
  for (int m = 0; m < t.height; ++m)
    for (int n = 0; n < t.width; ++n)
      CHECK(t.box(m, n) == prev.box(m / 2, n / 2));
}

TEST_CASE("upsample fills gaps when stride exceeds the kernel") {
  const auto t = trf_upsample(trf_input(2, 2), 1, 3);
  CHECK(t.height == 6);
  // Written pixels sit at multiples of the stride; everything else must
  // carry some neighbor's box.
  CHECK(t.box(0, 0) == RFBox{0, 0, 0, 0});
  CHECK(t.box(3, 3) == RFBox{1, 1, 1, 1});
  CHECK(t.box(1, 1) == RFBox{0, 0, 0, 0});  // nearest written neighbor
}

TEST_CASE("concat takes the per-pixel union") {
  std::mt19937_64 rng(11);
  const auto a = random_boxes(rng, 6, 6);
  const auto b = random_boxes(rng, 6, 6);
  CHECK(equal(trf_concat(a, a), a));
  CHECK(equal(trf_concat(a, b), trf_concat(b, a)));
  const auto c = random_boxes(rng, 6, 6);
  CHECK(equal(trf_concat(trf_concat(a, b), c), trf_concat(a, trf_concat(b, c))));

  RFTensor x = RFTensor::zeros(1, 1), y = RFTensor::zeros(1, 1);
  x.set(0, 0, {2, 2, 4, 4});
  y.set(0, 0, {1, 3, 3, 5});
  CHECK(trf_concat(x, y).box(0, 0) == RFBox{1, 2, 4, 5});
  CHECK_THROWS(trf_concat(trf_input(2, 2), trf_input(3, 3)));
}

TEST_CASE("attention merge equals the concat rule") {
  std::mt19937_64 rng(13);
  const auto a = random_boxes(rng, 4, 7);
  const auto b = random_boxes(rng, 4, 7);
  CHECK(equal(trf_attention(a, b), trf_concat(a, b)));
  CHECK(equal(trf_attention(a, a), a));
}

TEST_CASE("activation rule is the identity and idempotent") {
  std::mt19937_64 rng(17);
  const auto a = random_boxes(rng, 5, 5);
  CHECK(equal(trf_activation(a), a));
  CHECK(equal(trf_activation(trf_activation(a)), a));
  CHECK(equal(trf_conv(trf_activation(a), 3, 1), trf_conv(a, 3, 1)));
}

TEST_CASE("analyze of a single conv applies the size formula literally") {
  NetworkGraph g;
  g.input_height = g.input_width = 576;
  g.nodes.push_back({0, LayerKind::Input, 0, 1, 0, 1, 0, false, {}, "input"});
  g.nodes.push_back({1, LayerKind::Conv, 3, 1, 1, 1, 0, true, {0}, "conv"});
  const auto report = analyze(g);
  CHECK(report.center_box == RFBox{287, 287, 289, 289});
  CHECK(report.network_trf_size == doctest::Approx(2.0));
  CHECK(report.network_trf_size_pixels == doctest::Approx(3.0));
}

TEST_CASE("border map peaks at the center") {
  const auto g = build_unet({3, 2, {4, 8, 16}, false, 64, 64});
  const auto report = analyze(g, true);
  REQUIRE(report.border_map.has_value());
  const auto& map = *report.border_map;
  const double center = map(32, 32);
  CHECK(center == map.maxCoeff());
  // Sizes shrink toward the border along each axis from the center.
  for (int i = 1; i <= 32; ++i) CHECK(map(32 - i, 32) <= map(32 - i + 1, 32));
}

TEST_CASE("plain and attention variants report identical sizes") {
  for (const auto& row : catalog()) {
    if (!row.buildable) continue;
    UNetConfig small = row.config;  // shrink channels, geometry is unchanged
    for (auto& c : small.channels) c = 2;
    UNetConfig attn = small;
    attn.attention = true;
    CHECK(analyze(build_unet(small)).network_trf_size ==
          analyze(build_unet(attn)).network_trf_size);
  }
}
