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

#include "rfscope/graph.hpp"

#include <algorithm>

namespace rfscope {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Input: return "Input";
    case LayerKind::Conv: return "Conv";
    case LayerKind::BatchNormAffine: return "BatchNormAffine";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::Sigmoid: return "Sigmoid";
    case LayerKind::MaxPool: return "MaxPool";
    case LayerKind::TransposedConv: return "TransposedConv";
    case LayerKind::Concat: return "Concat";
    case LayerKind::AttentionGate: return "AttentionGate";
    case LayerKind::ElementwiseAdd: return "ElementwiseAdd";
    case LayerKind::ElementwiseMul: return "ElementwiseMul";
  }
  return "?";
}

namespace {

class GraphBuilder {
 public:
  explicit GraphBuilder(int h, int w) {
    g_.input_height = h;
    g_.input_width = w;
    LayerNode input;
    input.id = 0;
    input.kind = LayerKind::Input;
    input.out_ch = 1;
    input.label = "input";
    g_.nodes.push_back(input);
  }

  int add(LayerNode node) {
    node.id = static_cast<int>(g_.nodes.size());
    g_.nodes.push_back(std::move(node));
    return g_.nodes.back().id;
  }

  int conv(int src, int k, int in_ch, int out_ch, const std::string& label) {
    LayerNode n;
    n.kind = LayerKind::Conv;
    n.kernel = k;
    n.stride = 1;
    n.in_ch = in_ch;
    n.out_ch = out_ch;
    n.bias = true;
    n.inputs = {src};
    n.label = label;
    return add(std::move(n));
  }

  // Conv + BN + ReLU, the standard block unit.
  int conv_bn_relu(int src, int k, int in_ch, int out_ch, const std::string& label) {
    int c = conv(src, k, in_ch, out_ch, label);
    LayerNode bn;
    bn.kind = LayerKind::BatchNormAffine;
    bn.in_ch = bn.out_ch = out_ch;
    bn.inputs = {c};
    bn.label = label + ".bn";
    int b = add(std::move(bn));
    LayerNode relu;
    relu.kind = LayerKind::ReLU;
    relu.in_ch = relu.out_ch = out_ch;
    relu.inputs = {b};
    relu.label = label + ".relu";
    return add(std::move(relu));
  }

  NetworkGraph take() { return std::move(g_); }

 private:
  NetworkGraph g_;
};

}  // namespace

NetworkGraph build_unet(const UNetConfig& cfg) {
  validate(cfg);
  const int k = cfg.kernel_size;
  const int d = cfg.depth;
  GraphBuilder b(cfg.input_height, cfg.input_width);

  int cur = 0;
  int prev_ch = 1;
  std::vector<int> skips(d);  // encoder output node per level

  for (int lvl = 0; lvl < d; ++lvl) {
    const int c = cfg.channels[lvl];
    const std::string tag = "enc" + std::to_string(lvl);
    cur = b.conv_bn_relu(cur, k, prev_ch, c, tag + ".conv1");
    cur = b.conv_bn_relu(cur, k, c, c, tag + ".conv2");
    skips[lvl] = cur;
    LayerNode pool;
    pool.kind = LayerKind::MaxPool;
    pool.kernel = 2;
    pool.stride = 2;
    pool.in_ch = pool.out_ch = c;
    pool.inputs = {cur};
    pool.label = tag + ".pool";
    cur = b.add(std::move(pool));
    prev_ch = c;
  }

  const int cb = cfg.channels[d];
  cur = b.conv_bn_relu(cur, k, prev_ch, cb, "bottleneck.conv1");
  cur = b.conv_bn_relu(cur, k, cb, cb, "bottleneck.conv2");
  prev_ch = cb;

  for (int lvl = d - 1; lvl >= 0; --lvl) {
    const int c = cfg.channels[lvl];
    const std::string tag = "dec" + std::to_string(lvl);
    LayerNode up;
    up.kind = LayerKind::TransposedConv;
    up.kernel = 2;
    up.stride = 2;
    up.in_ch = prev_ch;
    up.out_ch = c;
    up.bias = true;
    up.inputs = {cur};
    up.label = tag + ".up";
    int upsampled = b.add(std::move(up));

    int skip = skips[lvl];
    if (cfg.attention) {
      LayerNode gate;
      gate.kind = LayerKind::AttentionGate;
      gate.in_ch = gate.out_ch = c;
      gate.inter_ch = std::max(1, c / 2);
      gate.inputs = {skip, upsampled};  // {x', g}
      gate.label = tag + ".gate";
      skip = b.add(std::move(gate));
    }

    LayerNode cat;
    cat.kind = LayerKind::Concat;
    cat.in_ch = 2 * c;
    cat.out_ch = 2 * c;
    cat.inputs = {skip, upsampled};
    cat.label = tag + ".concat";
    cur = b.add(std::move(cat));

    cur = b.conv_bn_relu(cur, k, 2 * c, c, tag + ".conv1");
    cur = b.conv_bn_relu(cur, k, c, c, tag + ".conv2");
    prev_ch = c;
  }

  cur = b.conv(cur, 1, prev_ch, 1, "head.conv");
  LayerNode sig;
  sig.kind = LayerKind::Sigmoid;
  sig.in_ch = sig.out_ch = 1;
  sig.inputs = {cur};
  sig.label = "head.sigmoid";
  b.add(std::move(sig));

  NetworkGraph g = b.take();
  check_graph(g);
  return g;
}

static long long node_parameters(const LayerNode& n) {
  auto conv_params = [](long long out, long long in, long long k, bool bias) {
    return out * (in * k * k + (bias ? 1 : 0));
  };
  switch (n.kind) {
    case LayerKind::Conv:
    case LayerKind::TransposedConv:
      return conv_params(n.out_ch, n.in_ch, n.kernel, n.bias);
    case LayerKind::BatchNormAffine:
      return 2LL * n.out_ch;
    case LayerKind::AttentionGate:
      // W_x and W_g (1x1, ch -> inter, bias) plus psi (1x1, inter -> 1, bias).
      return 2 * conv_params(n.inter_ch, n.in_ch, 1, true) + conv_params(1, n.inter_ch, 1, true);
    default:
      return 0;
  }
}

long long count_parameters(const NetworkGraph& graph) {
  long long total = 0;
  for (const auto& n : graph.nodes) total += node_parameters(n);
  return total;
}

std::vector<std::pair<int, long long>> parameters_per_node(const NetworkGraph& graph) {
  std::vector<std::pair<int, long long>> out;
  out.reserve(graph.nodes.size());
  for (const auto& n : graph.nodes) out.emplace_back(n.id, node_parameters(n));
  return out;
}

void check_graph(const NetworkGraph& graph) {
  if (graph.nodes.empty()) throw ConfigError("graph: empty");
  int inputs = 0;
  std::vector<int> out_degree(graph.nodes.size(), 0);
  for (size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& n = graph.nodes[i];
    if (n.id != static_cast<int>(i)) throw ConfigError("graph: node id does not match position");
    if (n.kind == LayerKind::Input) {
      ++inputs;
      if (!n.inputs.empty()) throw ConfigError("graph: input node has predecessors");
      continue;
    }
    if (n.inputs.empty()) throw ConfigError("graph: non-input node without predecessors");
    long long in_sum = 0;
    for (int p : n.inputs) {
      if (p < 0 || p >= n.id) throw ConfigError("graph: edge violates topological order");
      ++out_degree[p];
      in_sum += graph.nodes[p].out_ch;
    }
    switch (n.kind) {
      case LayerKind::Concat:
        if (n.inputs.size() != 2 || in_sum != n.in_ch)
          throw ConfigError("graph: concat channel mismatch at node " + std::to_string(n.id));
        break;
      case LayerKind::AttentionGate:
        if (n.inputs.size() != 2 || graph.nodes[n.inputs[0]].out_ch != n.in_ch ||
            graph.nodes[n.inputs[1]].out_ch != n.in_ch)
          throw ConfigError("graph: attention gate channel mismatch at node " + std::to_string(n.id));
        break;
      case LayerKind::ElementwiseAdd:
      case LayerKind::ElementwiseMul:
        if (n.inputs.size() != 2) throw ConfigError("graph: binary node arity");
        break;
      default:
        if (n.inputs.size() != 1 || graph.nodes[n.inputs[0]].out_ch != n.in_ch)
          throw ConfigError("graph: channel mismatch at node " + std::to_string(n.id) + " (" +
                            n.label + ")");
    }
  }
  if (inputs != 1) throw ConfigError("graph: expected exactly one input node");
  for (size_t i = 0; i + 1 < graph.nodes.size(); ++i)
    if (out_degree[i] == 0)
      throw ConfigError("graph: node " + std::to_string(i) + " does not reach the terminal");
}

}  // namespace rfscope
