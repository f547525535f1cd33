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

#include "test_support.hpp"

using namespace rfscope;
using namespace rfscope::testing;

namespace {

NetworkGraph single_conv(int k, int side) {
  NetworkGraph g;
  g.input_height = g.input_width = side;
  g.nodes.push_back({0, LayerKind::Input, 0, 1, 0, 1, 0, false, {}, "input"});
  g.nodes.push_back({1, LayerKind::Conv, k, 1, 1, 1, 0, true, {0}, "conv"});
  return g;
}

}  // namespace

TEST_CASE("weight initialization is a pure function of seed and scheme") {
  const auto g = build_unet({3, 1, {4, 8}, true, 16, 16});
  const auto a = init_weights(g, 42, InitScheme::UniformKaiming);
  const auto b = init_weights(g, 42, InitScheme::UniformKaiming);
  const auto c = init_weights(g, 43, InitScheme::UniformKaiming);
  bool identical = true, differs = false;
  for (size_t i = 0; i < a.nodes.size(); ++i) {
    if (const auto* wa = std::get_if<ConvWeights>(&a.nodes[i])) {
      const auto& wb = std::get<ConvWeights>(b.nodes[i]);
      const auto& wc = std::get<ConvWeights>(c.nodes[i]);
      for (size_t o = 0; o < wa->kernel.size(); ++o)
        for (size_t ci = 0; ci < wa->kernel[o].size(); ++ci) {
          identical = identical && wa->kernel[o][ci] == wb.kernel[o][ci];
          differs = differs || wa->kernel[o][ci] != wc.kernel[o][ci];
        }
    }
  }
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("all_ones scheme normalizes by fan-in") {
  const auto g = single_conv(3, 8);
  const auto w = init_weights(g, 0, InitScheme::AllOnes);
  const auto& conv = std::get<ConvWeights>(w.nodes[1]);
  CHECK(conv.kernel[0][0].isApproxToConstant(1.0 / 9.0));
  CHECK(conv.bias(0) == 0.0);
}

TEST_CASE("kaiming draws stay inside the fan-in bound") {
  const auto g = single_conv(3, 8);
  const auto w = init_weights(g, 123, InitScheme::UniformKaiming);
  const auto& conv = std::get<ConvWeights>(w.nodes[1]);
  const double bound = std::sqrt(6.0 / 9.0);
  CHECK((conv.kernel[0][0].array().abs() < bound).all());
}

TEST_CASE("identity 1x1 conv reproduces its input") {
  const auto g = single_conv(1, 6);
  const auto w = init_weights(g, 0, InitScheme::AllOnes);  // fan_in 1 -> weight 1
  std::mt19937_64 rng(5);
  const auto x = random_input(rng, 6, 6);
  const auto fp = forward(g, w, x);
  CHECK(fp.outputs[1].ch[0].isApprox(x));
}

TEST_CASE("zero input with zero biases stays zero pre-sigmoid") {
  const auto g = build_unet({3, 1, {2, 4}, true, 8, 8});
  const auto w = init_weights(g, 9, InitScheme::AllOnes);
  const auto fp = forward(g, w, Eigen::MatrixXd::Zero(8, 8));
  const int pre_sigmoid = g.nodes[g.terminal()].inputs[0];
  CHECK(fp.outputs[pre_sigmoid].ch[0].isZero(1e-12));
}

TEST_CASE("fan-in normalized conv preserves constants in the interior") {
  const auto g = single_conv(3, 7);
  const auto w = init_weights(g, 0, InitScheme::AllOnes);
  const auto fp = forward(g, w, Eigen::MatrixXd::Constant(7, 7, 0.37));
  CHECK(fp.outputs[1].ch[0].block(1, 1, 5, 5).isApproxToConstant(0.37));
}

TEST_CASE("the gradient of a linear conv is its kernel") {
  const auto g = single_conv(3, 5);
  const auto w = init_weights(g, 0, InitScheme::AllOnes);
  std::mt19937_64 rng(21);
  const auto grid = compute_erf(g, w, random_input(rng, 5, 5), 2, 2);
  CHECK(grid.box == RFBox{1, 1, 3, 3});
  CHECK(grid.values.isApproxToConstant(1.0 / 9.0));
}

TEST_CASE("reverse mode matches central finite differences") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = random_graph(rng, 3, 16);
    const auto w = init_weights(g, 1000 + trial, InitScheme::UniformKaiming);
    const auto fp = forward(g, w, Eigen::MatrixXd::Zero(g.input_height, g.input_width));
    const int ti = fp.outputs[g.terminal()].h / 2, tj = fp.outputs[g.terminal()].w / 2;
    const auto x = random_input(rng, g.input_height, g.input_width);
    const auto exact = input_gradient(g, w, x, ti, tj);
    const auto approx = finite_difference_gradient(g, w, x, ti, tj);
    double max_rel = 0.0;
    for (Eigen::Index i = 0; i < exact.rows(); ++i)
      for (Eigen::Index j = 0; j < exact.cols(); ++j) {
        const double denom = std::max({std::abs(exact(i, j)), std::abs(approx(i, j)), 1e-8});
        max_rel = std::max(max_rel, std::abs(exact(i, j) - approx(i, j)) / denom);
      }
    CHECK(max_rel <= 1e-4);
  }
}

TEST_CASE("purely linear graphs have input-independent gradients") {
  NetworkGraph g;
  g.input_height = g.input_width = 8;
  g.nodes.push_back({0, LayerKind::Input, 0, 1, 0, 1, 0, false, {}, "input"});
  g.nodes.push_back({1, LayerKind::Conv, 3, 1, 1, 2, 0, true, {0}, "c1"});
  g.nodes.push_back({2, LayerKind::BatchNormAffine, 0, 1, 2, 2, 0, false, {1}, "bn"});
  g.nodes.push_back({3, LayerKind::Conv, 3, 1, 2, 1, 0, true, {2}, "c2"});
  const auto w = init_weights(g, 77, InitScheme::UniformKaiming);
  std::mt19937_64 rng(3);
  const auto g1 = input_gradient(g, w, random_input(rng, 8, 8), 4, 4);
  const auto g2 = input_gradient(g, w, random_input(rng, 8, 8), 4, 4);
  CHECK(g1.isApprox(g2, 1e-12));
}

TEST_CASE("nan poisoning finds the conv window") {
  const auto g = single_conv(3, 5);
  const auto w = init_weights(g, 0, InitScheme::AllOnes);
  std::mt19937_64 rng(41);
  const auto deps = nan_poison_dependency(g, w, random_input(rng, 5, 5), 2, 2);
  REQUIRE(deps.size() == 9);
  for (const auto& [i, j] : deps) {
    CHECK(i >= 1);
    CHECK(i <= 3);
    CHECK(j >= 1);
    CHECK(j <= 3);
  }
}

TEST_CASE("nan beats argmax masking in max pooling") {
  NetworkGraph g;
  g.input_height = g.input_width = 2;
  g.nodes.push_back({0, LayerKind::Input, 0, 1, 0, 1, 0, false, {}, "input"});
  g.nodes.push_back({1, LayerKind::MaxPool, 2, 2, 1, 1, 0, false, {0}, "pool"});
  const auto w = init_weights(g, 0, InitScheme::AllOnes);
  std::mt19937_64 rng(43);
  const auto deps = nan_poison_dependency(g, w, random_input(rng, 2, 2), 0, 0);
  CHECK(deps.size() == 4);
}

TEST_CASE("gradients are deterministic for identical inputs") {
  std::mt19937_64 rng(53);
  const auto g = random_graph(rng, 4, 16);
  const auto w = init_weights(g, 99, InitScheme::UniformKaiming);
  const auto x = random_input(rng, g.input_height, g.input_width);
  const auto fp = forward(g, w, x);
  const int ti = fp.outputs[g.terminal()].h / 2, tj = fp.outputs[g.terminal()].w / 2;
  const auto a = input_gradient(g, w, x, ti, tj);
  const auto b = input_gradient(g, w, x, ti, tj);
  CHECK(a == b);
}

TEST_CASE("attention u-net forward and backward run end to end") {
  const auto g = build_unet({3, 2, {2, 4, 8}, true, 16, 16});
  const auto w = init_weights(g, 7, InitScheme::UniformKaiming);
  std::mt19937_64 rng(61);
  const auto x = random_input(rng, 16, 16);
  const auto grid = compute_erf_center(g, w, x);
  CHECK(grid.values.allFinite());
  const auto exact = input_gradient(g, w, x, 8, 8);
  const auto approx = finite_difference_gradient(g, w, x, 8, 8);
  double max_rel = 0.0;
  for (Eigen::Index i = 0; i < exact.rows(); ++i)
    for (Eigen::Index j = 0; j < exact.cols(); ++j) {
      const double denom = std::max({std::abs(exact(i, j)), std::abs(approx(i, j)), 1e-8});
      max_rel = std::max(max_rel, std::abs(exact(i, j) - approx(i, j)) / denom);
    }
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("post-sigmoid gradients differ by the sigmoid slope") {
  const auto g = build_unet({3, 1, {2, 4}, false, 8, 8});
  const auto w = init_weights(g, 17, InitScheme::UniformKaiming);
  std::mt19937_64 rng(71);
  const auto x = random_input(rng, 8, 8);
  const auto pre = input_gradient(g, w, x, 4, 4, false);
  const auto post = input_gradient(g, w, x, 4, 4, true);
  const double logit = forward(g, w, x).outputs[g.terminal() - 1].ch[0](4, 4);
  const double slope = 1.0 / (1.0 + std::exp(-logit));
  CHECK(post.isApprox(pre * slope * (1.0 - slope), 1e-10));
}
