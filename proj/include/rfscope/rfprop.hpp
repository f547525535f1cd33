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
#include <optional>
#include <utility>
#include <vector>

#include "rfscope/graph.hpp"

namespace rfscope {

/// Inclusive pixel box in input-image coordinates, clamped to the image.
struct RFBox {
  int top = 0, left = 0, bottom = 0, right = 0;

  bool operator==(const RFBox&) const = default;
  bool contains(int i, int j) const {
    return i >= top && i <= bottom && j >= left && j <= right;
  }
  bool contains(const RFBox& other) const {
    return other.top >= top && other.bottom <= bottom && other.left >= left &&
           other.right <= right;
  }
  // Extent convention: differences of coordinates, no +1.
  double size() const {
    return std::sqrt(double(bottom - top) * double(right - left));
  }
};

/// Per-pixel receptive-field boxes of one layer, stored as four integer
/// coordinate planes of the layer's spatial dims.
struct RFTensor {
  int height = 0, width = 0;
  Eigen::ArrayXXi top, left, bottom, right;

  RFBox box(int i, int j) const {
    return {top(i, j), left(i, j), bottom(i, j), right(i, j)};
  }
  void set(int i, int j, const RFBox& b) {
    top(i, j) = b.top;
    left(i, j) = b.left;
    bottom(i, j) = b.bottom;
    right(i, j) = b.right;
  }
  static RFTensor zeros(int h, int w) {
    RFTensor t;
    t.height = h;
    t.width = w;
    t.top = Eigen::ArrayXXi::Zero(h, w);
    t.left = Eigen::ArrayXXi::Zero(h, w);
    t.bottom = Eigen::ArrayXXi::Zero(h, w);
    t.right = Eigen::ArrayXXi::Zero(h, w);
    return t;
  }
};

/// Input-layer initialization: every pixel's box is the pixel itself.
RFTensor trf_input(int h, int w);

/// "Same"-padded convolution rule: fetch top-left at (i*s, j*s) and
/// bottom-right at (i*s+k-1, j*s+k-1) from the edge-replicated padded grid.
RFTensor trf_conv(const RFTensor& prev, int k, int s = 1);

/// Max pooling with stride == kernel; prev dims must divide by k.
RFTensor trf_maxpool(const RFTensor& prev, int k);

/// Transposed-convolution rule: each input pixel writes its box into the
/// kernel footprint [i*s, i*s+k) x [j*s, j*s+k) of the k*s-sized output,
/// merging overlaps by min(top,left)/max(bottom,right). Output pixels the
/// footprint never reaches (s > k) inherit the nearest written neighbor.
RFTensor trf_upsample(const RFTensor& prev, int k, int s);

/// Per-pixel union (min top/left, max bottom/right) of two aligned grids.
RFTensor trf_concat(const RFTensor& a, const RFTensor& b);

/// Attention gates merge their two inputs exactly like a concatenation.
inline RFTensor trf_attention(const RFTensor& x_skip, const RFTensor& g) {
  return trf_concat(x_skip, g);
}

/// Element-wise layers leave the receptive field untouched.
inline RFTensor trf_activation(const RFTensor& prev) { return prev; }

struct TRFReport {
  double network_trf_size = 0.0;       // sqrt((b-t)*(r-l)) at the center pixel
  double network_trf_size_pixels = 0.0;  // pixel-count convention, extent+1
  RFBox center_box;
  std::vector<std::pair<int, double>> per_layer_sizes;  // (node id, center size)
  std::optional<Eigen::ArrayXXd> border_map;            // per-pixel output sizes
};

/// Propagates boxes through every node in topological order and reports
/// the center-pixel receptive field of the terminal node.
TRFReport analyze(const NetworkGraph& graph, bool with_border_map = false);

/// Terminal-layer box grid, for callers that need per-pixel boxes.
RFTensor propagate(const NetworkGraph& graph);

}  // namespace rfscope
