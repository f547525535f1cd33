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
#include <cstdint>
#include <variant>
#include <vector>

#include "rfscope/graph.hpp"
#include "rfscope/rfprop.hpp"

namespace rfscope {

/// Multi-channel activation map, double precision throughout.
struct Tensor {
  int h = 0, w = 0;
  std::vector<Eigen::MatrixXd> ch;

  static Tensor zeros(int channels, int h, int w) {
    Tensor t;
    t.h = h;
    t.w = w;
    t.ch.assign(channels, Eigen::MatrixXd::Zero(h, w));
    return t;
  }
  int channels() const { return static_cast<int>(ch.size()); }
};

struct ConvWeights {
  // kernel[out][in] is a k x k matrix.
  std::vector<std::vector<Eigen::MatrixXd>> kernel;
  Eigen::VectorXd bias;
};

struct AffineWeights {
  Eigen::VectorXd scale, shift;
};

struct GateWeights {
  ConvWeights wx, wg, psi;  // three 1x1 convolutions
};

using NodeWeights = std::variant<std::monostate, ConvWeights, AffineWeights, GateWeights>;

enum class InitScheme { UniformKaiming, AllOnes };

struct WeightSet {
  std::uint64_t seed = 0;
  InitScheme scheme = InitScheme::UniformKaiming;
  std::vector<NodeWeights> nodes;  // indexed by node id
};

/// Deterministic function of (graph, seed, scheme). UniformKaiming draws
/// U(-b, b) with b = sqrt(6 / fan_in); AllOnes sets kernels to 1/fan_in
/// and biases to 0. Batch-norm defaults are scale 1, shift 0 either way.
WeightSet init_weights(const NetworkGraph& graph, std::uint64_t seed, InitScheme scheme);

/// Forward-pass cache: per-node output plus max-pool argmax routing
/// (encoded ai * window + aj inside each window, ties first row-major).
struct ForwardPass {
  std::vector<Tensor> outputs;                      // by node id
  std::vector<std::vector<Eigen::ArrayXXi>> argmax; // by node id, per channel

  const Tensor& terminal(const NetworkGraph& g) const { return outputs[g.terminal()]; }
};

ForwardPass forward(const NetworkGraph& graph, const WeightSet& weights,
                    const Eigen::MatrixXd& input);

/// Exact reverse-mode gradient of one scalar output pixel with respect to
/// every input pixel. By default the scalar is the pre-sigmoid value when
/// the terminal node is a Sigmoid.
Eigen::MatrixXd input_gradient(const NetworkGraph& graph, const WeightSet& weights,
                               const Eigen::MatrixXd& input, int ti, int tj,
                               bool post_sigmoid = false);

/// Gradient grid cropped to the target pixel's propagated receptive-field box.
struct ERFGrid {
  RFBox box;
  Eigen::MatrixXd values;  // (bottom-top+1) x (right-left+1)
};

ERFGrid compute_erf(const NetworkGraph& graph, const WeightSet& weights,
                    const Eigen::MatrixXd& input, int ti, int tj,
                    bool post_sigmoid = false);

/// Center-pixel convenience overloads (target = output center h/2, w/2).
ERFGrid compute_erf_center(const NetworkGraph& graph, const WeightSet& weights,
                           const Eigen::MatrixXd& input, bool post_sigmoid = false);

/// Dependency oracle: reruns the forward pass once per input pixel with
/// that pixel set to NaN and reports every pixel whose poison reaches the
/// target output. Max pooling propagates NaN so argmax masking cannot hide
/// a dependency. Pixels are returned in row-major order.
std::vector<std::pair<int, int>> nan_poison_dependency(const NetworkGraph& graph,
                                                       const WeightSet& weights,
                                                       const Eigen::MatrixXd& input,
                                                       int ti, int tj);

}  // namespace rfscope
