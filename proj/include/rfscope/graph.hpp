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

#include <cstdint>
#include <string>
#include <vector>

#include "rfscope/config.hpp"

namespace rfscope {

enum class LayerKind {
  Input,
  Conv,            // stride-1 "same" convolution unless stated otherwise
  BatchNormAffine, // per-channel scale + shift (inference semantics)
  ReLU,
  Sigmoid,
  MaxPool,         // stride == kernel
  TransposedConv,  // output dims = input dims * stride
  Concat,          // channel concatenation of two aligned tensors
  AttentionGate,   // inputs: {skip x', gating signal g}
  ElementwiseAdd,
  ElementwiseMul,
};

const char* layer_kind_name(LayerKind kind);

struct LayerNode {
  int id = 0;
  LayerKind kind = LayerKind::Input;
  int kernel = 0;
  int stride = 1;
  int in_ch = 0;
  int out_ch = 0;
  int inter_ch = 0;  // attention gate internal channel count
  bool bias = false;
  std::vector<int> inputs;  // predecessor node ids
  std::string label;        // human-readable role, e.g. "enc0.conv1"
};

/// Acyclic layer graph in topological order; node ids equal their index
/// in `nodes`. Exactly one Input (id 0) and one terminal (last node).
struct NetworkGraph {
  std::vector<LayerNode> nodes;
  int input_height = 0;
  int input_width = 0;

  int terminal() const { return static_cast<int>(nodes.size()) - 1; }
};

/// Expands a validated config into the explicit layer graph: per encoder
/// level two Conv+BN+ReLU then MaxPool(2); bottleneck two Conv+BN+ReLU;
/// per decoder level TransposedConv(2, stride 2) halving channels, Concat
/// with the same-level encoder output (gated when attention is set), then
/// two Conv+BN+ReLU; terminal 1x1 Conv plus Sigmoid.
NetworkGraph build_unet(const UNetConfig& cfg);

/// Trainable parameter count: Conv and TransposedConv contribute
/// out*(in*k^2 + 1), BatchNormAffine 2*ch, AttentionGate its three 1x1
/// convs, everything else 0.
long long count_parameters(const NetworkGraph& graph);

/// Per-node breakdown, same totals as count_parameters.
std::vector<std::pair<int, long long>> parameters_per_node(const NetworkGraph& graph);

/// Structural sanity checks (single input, topological edge order,
/// channel arithmetic along every edge). Throws ConfigError on violation.
void check_graph(const NetworkGraph& graph);

}  // namespace rfscope
