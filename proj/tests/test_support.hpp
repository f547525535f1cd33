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

#include <random>

#include "rfscope/engine.hpp"
#include "rfscope/graph.hpp"

namespace rfscope::testing {

// Random small graph: a chain of conv / maxpool / transposed-conv /
// concat-with-branch nodes with occasional activations, always ending in
// a 1x1 conv down to one channel so every path reaches the scalar output.
inline NetworkGraph random_graph(std::mt19937_64& rng, int max_structural = 4,
                                 int max_input_side = 24) {
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  NetworkGraph g;
  const int sides[] = {8, 12, 16, 20, 24};
  g.input_height = sides[pick(0, 4)] <= max_input_side ? sides[pick(0, 4)] : 8;
  g.input_width = sides[pick(0, 4)] <= max_input_side ? sides[pick(0, 4)] : 8;
  g.input_height = std::min(g.input_height, max_input_side);
  g.input_width = std::min(g.input_width, max_input_side);

  LayerNode input;
  input.id = 0;
  input.kind = LayerKind::Input;
  input.out_ch = 1;
  g.nodes.push_back(input);

  int cur = 0, ch = 1, h = g.input_height, w = g.input_width;
  auto add = [&](LayerNode n) {
    n.id = int(g.nodes.size());
    g.nodes.push_back(n);
    return n.id;
  };
  auto conv = [&](int src, int k, int in_c, int out_c) {
    LayerNode n;
    n.kind = LayerKind::Conv;
    n.kernel = k;
    n.stride = 1;
    n.in_ch = in_c;
    n.out_ch = out_c;
    n.bias = true;
    n.inputs = {src};
    return add(n);
  };

  const int n_ops = pick(1, max_structural);
  for (int op = 0; op < n_ops; ++op) {
    const int choice = pick(0, 4);
    if (choice == 0 || choice == 1) {
      const int ks[] = {1, 2, 3, 5};
      const int out_c = pick(1, 2);
      cur = conv(cur, ks[pick(0, 3)], ch, out_c);
      ch = out_c;
    } else if (choice == 2 && h % 2 == 0 && w % 2 == 0 && h >= 4 && w >= 4) {
      LayerNode n;
      n.kind = LayerKind::MaxPool;
      n.kernel = 2;
      n.stride = 2;
      n.in_ch = n.out_ch = ch;
      n.inputs = {cur};
      cur = add(n);
      h /= 2;
      w /= 2;
    } else if (choice == 3 && h * 2 <= 48 && w * 2 <= 48) {
      LayerNode n;
      n.kind = LayerKind::TransposedConv;
      n.kernel = pick(0, 1) ? 2 : 3;
      n.stride = 2;
      n.in_ch = ch;
      n.out_ch = pick(1, 2);
      n.bias = true;
      n.inputs = {cur};
      cur = add(n);
      ch = n.out_ch;
      h *= 2;
      w *= 2;
    } else {
      const int branch = conv(cur, pick(0, 1) ? 1 : 3, ch, 1);
      LayerNode n;
      n.kind = LayerKind::Concat;
      n.in_ch = n.out_ch = ch + 1;
      n.inputs = {branch, cur};
      cur = add(n);
      ch += 1;
    }
    if (pick(0, 2) == 0) {
      LayerNode n;
      n.kind = pick(0, 1) ? LayerKind::ReLU : LayerKind::BatchNormAffine;
      n.in_ch = n.out_ch = ch;
      n.inputs = {cur};
      cur = add(n);
    }
  }
  conv(cur, 1, ch, 1);
  check_graph(g);
  return g;
}

inline Eigen::MatrixXd random_input(std::mt19937_64& rng, int h, int w, double lo = 0.1,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::MatrixXd m(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) m(i, j) = dist(rng);
  return m;
}

// Central finite difference of the target output pixel with respect to
// every input pixel; independent of the reverse-mode path.
inline Eigen::MatrixXd finite_difference_gradient(const NetworkGraph& g, const WeightSet& w,
                                                  const Eigen::MatrixXd& input, int ti, int tj,
                                                  double step = 1e-5) {
  int target = g.terminal();
  if (g.nodes[target].kind == LayerKind::Sigmoid) target = g.nodes[target].inputs[0];
  auto eval = [&](const Eigen::MatrixXd& x) {
    return forward(g, w, x).outputs[target].ch[0](ti, tj);
  };
  Eigen::MatrixXd grad(input.rows(), input.cols());
  Eigen::MatrixXd probe = input;
  for (Eigen::Index i = 0; i < input.rows(); ++i)
    for (Eigen::Index j = 0; j < input.cols(); ++j) {
      probe(i, j) = input(i, j) + step;
      const double up = eval(probe);
      probe(i, j) = input(i, j) - step;
      const double down = eval(probe);
      probe(i, j) = input(i, j);
      grad(i, j) = (up - down) / (2.0 * step);
    }
  return grad;
}

}  // namespace rfscope::testing
