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

#include "rfscope/rfprop.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace rfscope {

RFTensor trf_input(int h, int w) {
  if (h < 1 || w < 1) throw std::invalid_argument("trf_input: dims must be >= 1");
  RFTensor t = RFTensor::zeros(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) t.set(i, j, {i, j, i, j});
  return t;
}

RFTensor trf_conv(const RFTensor& prev, int k, int s) {
  if (k < 1 || s < 1) throw std::invalid_argument("trf_conv: k and s must be >= 1");
  const int h = prev.height, w = prev.width;
  const int py = ((h - 1) * s + k - h) / 2;
  const int px = ((w - 1) * s + k - w) / 2;
  // Padded grid replicates edge boxes: P(m, n) = prev(clamp(m - p), clamp(n - p)).
  auto cy = [&](int m) { return std::clamp(m - py, 0, h - 1); };
  auto cx = [&](int n) { return std::clamp(n - px, 0, w - 1); };
  RFTensor out = RFTensor::zeros(h, w);
  for (int i = 0; i < h; ++i) {
    const int ty = cy(i * s), by = cy(i * s + k - 1);
    for (int j = 0; j < w; ++j) {
      const int lx = cx(j * s), rx = cx(j * s + k - 1);
      out.top(i, j) = prev.top(ty, lx);
      out.left(i, j) = prev.left(ty, lx);
      out.bottom(i, j) = prev.bottom(by, rx);
      out.right(i, j) = prev.right(by, rx);
    }
  }
  return out;
}

RFTensor trf_maxpool(const RFTensor& prev, int k) {
  if (k < 1) throw std::invalid_argument("trf_maxpool: k must be >= 1");
  if (prev.height % k != 0 || prev.width % k != 0)
    throw std::invalid_argument("trf_maxpool: dims not divisible by kernel");
  const int h = prev.height / k, w = prev.width / k;
  RFTensor out = RFTensor::zeros(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      out.top(i, j) = prev.top(i * k, j * k);
      out.left(i, j) = prev.left(i * k, j * k);
      out.bottom(i, j) = prev.bottom(i * k + k - 1, j * k + k - 1);
      out.right(i, j) = prev.right(i * k + k - 1, j * k + k - 1);
    }
  return out;
}

RFTensor trf_upsample(const RFTensor& prev, int k, int s) {
  if (k < 1 || s < 1) throw std::invalid_argument("trf_upsample: k and s must be >= 1");
  const int h = prev.height * s, w = prev.width * s;
  RFTensor out = RFTensor::zeros(h, w);
  Eigen::ArrayXX<bool> written = Eigen::ArrayXX<bool>::Constant(h, w, false);
  for (int i = 0; i < prev.height; ++i)
    for (int j = 0; j < prev.width; ++j) {
      const RFBox b = prev.box(i, j);
      for (int m = i * s; m < i * s + k && m < h; ++m)
        for (int n = j * s; n < j * s + k && n < w; ++n) {
          if (!written(m, n)) {
            out.set(m, n, b);
            written(m, n) = true;
          } else {
            out.top(m, n) = std::min(out.top(m, n), b.top);
            out.left(m, n) = std::min(out.left(m, n), b.left);
            out.bottom(m, n) = std::max(out.bottom(m, n), b.bottom);
            out.right(m, n) = std::max(out.right(m, n), b.right);
          }
        }
    }
  if (s > k) {
    // Footprints leave gaps; fill each gap from its nearest written
    // neighbor, scanning up/left before down/right on distance ties.
    for (int m = 0; m < h; ++m)
      for (int n = 0; n < w; ++n) {
        if (written(m, n)) continue;
        for (int dist = 1; dist < h + w; ++dist) {
          bool found = false;
          for (int dm = -dist; dm <= dist && !found; ++dm) {
            const int dn = dist - std::abs(dm);
            for (int sign : {-1, 1}) {
              const int mm = m + dm, nn = n + sign * dn;
              if (mm >= 0 && mm < h && nn >= 0 && nn < w && written(mm, nn)) {
                out.set(m, n, out.box(mm, nn));
                found = true;
                break;
              }
              if (dn == 0) break;
            }
          }
          if (found) break;
        }
      }
  }
  return out;
}

RFTensor trf_concat(const RFTensor& a, const RFTensor& b) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("trf_concat: spatial dims mismatch");
  RFTensor out;
  out.height = a.height;
  out.width = a.width;
  out.top = a.top.min(b.top);
  out.left = a.left.min(b.left);
  out.bottom = a.bottom.max(b.bottom);
  out.right = a.right.max(b.right);
  return out;
}

namespace {

RFTensor propagate_node(const NetworkGraph& graph, const LayerNode& n,
                        const std::vector<const RFTensor*>& in) {
  switch (n.kind) {
    case LayerKind::Input:
      return trf_input(graph.input_height, graph.input_width);
    case LayerKind::Conv:
      return trf_conv(*in[0], n.kernel, n.stride);
    case LayerKind::MaxPool:
      return trf_maxpool(*in[0], n.kernel);
    case LayerKind::TransposedConv:
      return trf_upsample(*in[0], n.kernel, n.stride);
    case LayerKind::Concat:
    case LayerKind::AttentionGate:
    case LayerKind::ElementwiseAdd:
    case LayerKind::ElementwiseMul:
      return in.size() == 2 ? trf_concat(*in[0], *in[1]) : trf_activation(*in[0]);
    case LayerKind::BatchNormAffine:
    case LayerKind::ReLU:
    case LayerKind::Sigmoid:
      return trf_activation(*in[0]);
  }
  throw std::logic_error("propagate_node: unknown layer kind");
}

template <typename PerNode>
RFTensor traverse(const NetworkGraph& graph, PerNode&& per_node) {
  // Consumer counts let us drop tensors as soon as their last user ran.
  std::vector<int> remaining(graph.nodes.size(), 0);
  for (const auto& n : graph.nodes)
    for (int p : n.inputs) ++remaining[p];
  remaining[graph.terminal()] = 1;

  std::unordered_map<int, RFTensor> live;
  RFTensor terminal;
  for (const auto& n : graph.nodes) {
    std::vector<const RFTensor*> in;
    in.reserve(n.inputs.size());
    for (int p : n.inputs) in.push_back(&live.at(p));
    RFTensor t = propagate_node(graph, n, in);
    per_node(n, t);
    for (int p : n.inputs)
      if (--remaining[p] == 0) live.erase(p);
    if (n.id == graph.terminal()) terminal = t;
    if (remaining[n.id] > 0) live.emplace(n.id, std::move(t));
  }
  return terminal;
}

}  // namespace

RFTensor propagate(const NetworkGraph& graph) {
  return traverse(graph, [](const LayerNode&, const RFTensor&) {});
}

TRFReport analyze(const NetworkGraph& graph, bool with_border_map) {
  TRFReport report;
  RFTensor terminal = traverse(graph, [&](const LayerNode& n, const RFTensor& t) {
    report.per_layer_sizes.emplace_back(n.id, t.box(t.height / 2, t.width / 2).size());
  });
  const RFBox center = terminal.box(terminal.height / 2, terminal.width / 2);
  report.center_box = center;
  report.network_trf_size = center.size();
  report.network_trf_size_pixels =
      std::sqrt(double(center.bottom - center.top + 1) * double(center.right - center.left + 1));
  if (with_border_map) {
    Eigen::ArrayXXd map(terminal.height, terminal.width);
    for (int i = 0; i < terminal.height; ++i)
      for (int j = 0; j < terminal.width; ++j) map(i, j) = terminal.box(i, j).size();
    report.border_map = std::move(map);
  }
  return report;
}

}  // namespace rfscope
