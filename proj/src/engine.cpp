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

#include "rfscope/engine.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>

#include "rfscope/parallel.hpp"

namespace rfscope {

namespace {

ConvWeights make_conv(int out_ch, int in_ch, int k, InitScheme scheme, std::mt19937_64& rng) {
  ConvWeights w;
  w.kernel.assign(out_ch, std::vector<Eigen::MatrixXd>(in_ch));
  w.bias = Eigen::VectorXd::Zero(out_ch);
  const double fan_in = double(in_ch) * k * k;
  if (scheme == InitScheme::AllOnes) {
    for (auto& row : w.kernel)
      for (auto& m : row) m = Eigen::MatrixXd::Constant(k, k, 1.0 / fan_in);
  } else {
    const double b = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-b, b);
    for (auto& row : w.kernel)
      for (auto& m : row) {
        m.resize(k, k);
        for (int a = 0; a < k; ++a)
          for (int c = 0; c < k; ++c) m(a, c) = dist(rng);
      }
  }
  return w;
}

}  // namespace

WeightSet init_weights(const NetworkGraph& graph, std::uint64_t seed, InitScheme scheme) {
  WeightSet ws;
  ws.seed = seed;
  ws.scheme = scheme;
  ws.nodes.resize(graph.nodes.size());
  std::mt19937_64 rng(seed);
  for (const auto& n : graph.nodes) {
    switch (n.kind) {
      case LayerKind::Conv:
      case LayerKind::TransposedConv:
        ws.nodes[n.id] = make_conv(n.out_ch, n.in_ch, n.kernel, scheme, rng);
        break;
      case LayerKind::BatchNormAffine: {
        AffineWeights a;
        a.scale = Eigen::VectorXd::Ones(n.out_ch);
        a.shift = Eigen::VectorXd::Zero(n.out_ch);
        ws.nodes[n.id] = std::move(a);
        break;
      }
      case LayerKind::AttentionGate: {
        GateWeights g;
        g.wx = make_conv(n.inter_ch, n.in_ch, 1, scheme, rng);
        g.wg = make_conv(n.inter_ch, n.in_ch, 1, scheme, rng);
        g.psi = make_conv(1, n.inter_ch, 1, scheme, rng);
        ws.nodes[n.id] = std::move(g);
        break;
      }
      default:
        break;
    }
  }
  return ws;
}

namespace {

// Stride-1 "same" convolution, zero padding p = (k-1)/2 on top/left and
// k-1-p on bottom/right, matching the box-propagation geometry.
Tensor conv_same(const Tensor& x, const ConvWeights& w, int k) {
  const int out_ch = static_cast<int>(w.kernel.size());
  const int in_ch = static_cast<int>(w.kernel[0].size());
  const int h = x.h, ww = x.w;
  const int p = (k - 1) / 2;
  Tensor out = Tensor::zeros(out_ch, h, ww);
  for (int o = 0; o < out_ch; ++o) {
    out.ch[o].array() += w.bias(o);
    for (int c = 0; c < in_ch; ++c)
      for (int a = 0; a < k; ++a) {
        const int i0 = std::max(0, p - a);
        const int i1 = std::min(h - 1, h - 1 + p - a);
        if (i0 > i1) continue;
        for (int b = 0; b < k; ++b) {
          const int j0 = std::max(0, p - b);
          const int j1 = std::min(ww - 1, ww - 1 + p - b);
          if (j0 > j1) continue;
          out.ch[o].block(i0, j0, i1 - i0 + 1, j1 - j0 + 1) +=
              w.kernel[o][c](a, b) *
              x.ch[c].block(i0 + a - p, j0 + b - p, i1 - i0 + 1, j1 - j0 + 1);
        }
      }
  }
  return out;
}

Tensor conv_same_backward(const Tensor& gout, const ConvWeights& w, int k, int in_ch) {
  const int out_ch = static_cast<int>(w.kernel.size());
  const int h = gout.h, ww = gout.w;
  const int p = (k - 1) / 2;
  Tensor gin = Tensor::zeros(in_ch, h, ww);
  for (int o = 0; o < out_ch; ++o)
    for (int c = 0; c < in_ch; ++c)
      for (int a = 0; a < k; ++a) {
        const int i0 = std::max(0, p - a);
        const int i1 = std::min(h - 1, h - 1 + p - a);
        if (i0 > i1) continue;
        for (int b = 0; b < k; ++b) {
          const int j0 = std::max(0, p - b);
          const int j1 = std::min(ww - 1, ww - 1 + p - b);
          if (j0 > j1) continue;
          gin.ch[c].block(i0 + a - p, j0 + b - p, i1 - i0 + 1, j1 - j0 + 1) +=
              w.kernel[o][c](a, b) * gout.ch[o].block(i0, j0, i1 - i0 + 1, j1 - j0 + 1);
        }
      }
  return gin;
}

// Transposed convolution; output cropped to (h*s) x (w*s).
Tensor tconv(const Tensor& x, const ConvWeights& w, int k, int s) {
  const int out_ch = static_cast<int>(w.kernel.size());
  const int in_ch = static_cast<int>(w.kernel[0].size());
  const int H = x.h * s, W = x.w * s;
  Tensor out = Tensor::zeros(out_ch, H, W);
  for (int o = 0; o < out_ch; ++o) {
    out.ch[o].array() += w.bias(o);
    for (int c = 0; c < in_ch; ++c)
      for (int a = 0; a < k; ++a) {
        const int ni = std::min(x.h, (H - 1 - a) / s + 1);
        if (ni <= 0 || a >= H) continue;
        for (int b = 0; b < k; ++b) {
          const int nj = std::min(x.w, (W - 1 - b) / s + 1);
          if (nj <= 0 || b >= W) continue;
          out.ch[o](Eigen::seqN(a, ni, s), Eigen::seqN(b, nj, s)) +=
              w.kernel[o][c](a, b) * x.ch[c].topLeftCorner(ni, nj);
        }
      }
  }
  return out;
}

Tensor tconv_backward(const Tensor& gout, const ConvWeights& w, int k, int s, int in_ch,
                      int xh, int xw) {
  const int out_ch = static_cast<int>(w.kernel.size());
  const int H = gout.h, W = gout.w;
  Tensor gin = Tensor::zeros(in_ch, xh, xw);
  for (int o = 0; o < out_ch; ++o)
    for (int c = 0; c < in_ch; ++c)
      for (int a = 0; a < k; ++a) {
        const int ni = std::min(xh, a < H ? (H - 1 - a) / s + 1 : 0);
        if (ni <= 0) continue;
        for (int b = 0; b < k; ++b) {
          const int nj = std::min(xw, b < W ? (W - 1 - b) / s + 1 : 0);
          if (nj <= 0) continue;
          gin.ch[c].topLeftCorner(ni, nj) +=
              w.kernel[o][c](a, b) * gout.ch[o](Eigen::seqN(a, ni, s), Eigen::seqN(b, nj, s));
        }
      }
  return gin;
}

// NaN-propagating max pool; argmax is the first maximum in row-major
// window order.
void maxpool(const Tensor& x, int k, Tensor& out, std::vector<Eigen::ArrayXXi>& argmax) {
  if (x.h % k != 0 || x.w % k != 0)
    throw std::invalid_argument("maxpool: dims not divisible by kernel");
  const int h = x.h / k, w = x.w / k;
  out = Tensor::zeros(x.channels(), h, w);
  argmax.assign(x.channels(), Eigen::ArrayXXi::Zero(h, w));
  for (int c = 0; c < x.channels(); ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        int best_idx = 0;
        bool poisoned = false;
        for (int a = 0; a < k && !poisoned; ++a)
          for (int b = 0; b < k; ++b) {
            const double v = x.ch[c](i * k + a, j * k + b);
            if (std::isnan(v)) {
              poisoned = true;
              break;
            }
            if (v > best) {
              best = v;
              best_idx = a * k + b;
            }
          }
        out.ch[c](i, j) = poisoned ? std::numeric_limits<double>::quiet_NaN() : best;
        argmax[c](i, j) = best_idx;
      }
}

// 1x1 convolution: a per-pixel linear map across channels.
Tensor mix(const Tensor& x, const ConvWeights& w) {
  const int out_ch = static_cast<int>(w.kernel.size());
  Tensor out = Tensor::zeros(out_ch, x.h, x.w);
  for (int o = 0; o < out_ch; ++o) {
    out.ch[o].array() += w.bias(o);
    for (int c = 0; c < x.channels(); ++c) out.ch[o] += w.kernel[o][c](0, 0) * x.ch[c];
  }
  return out;
}

Tensor mix_backward(const Tensor& gout, const ConvWeights& w, int in_ch) {
  Tensor gin = Tensor::zeros(in_ch, gout.h, gout.w);
  for (int o = 0; o < gout.channels(); ++o)
    for (int c = 0; c < in_ch; ++c) gin.ch[c] += w.kernel[o][c](0, 0) * gout.ch[o];
  return gin;
}

inline double relu1(double v) { return v <= 0.0 ? 0.0 : v; }
inline double sigmoid1(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Tensor apply(const Tensor& x, double (*fn)(double)) {
  Tensor out = x;
  for (auto& m : out.ch) m = m.unaryExpr(fn);
  return out;
}

Tensor gate_forward(const Tensor& x, const Tensor& g, const GateWeights& w) {
  Tensor ax = mix(x, w.wx);
  const Tensor ag = mix(g, w.wg);
  for (int c = 0; c < ax.channels(); ++c) ax.ch[c] += ag.ch[c];
  const Tensor act = apply(ax, relu1);
  const Tensor logits = mix(act, w.psi);
  const Eigen::MatrixXd alpha = logits.ch[0].unaryExpr(&sigmoid1);
  Tensor out = x;
  for (auto& m : out.ch) m = m.cwiseProduct(alpha);
  return out;
}

}  // namespace

ForwardPass forward(const NetworkGraph& graph, const WeightSet& weights,
                    const Eigen::MatrixXd& input) {
  if (input.rows() != graph.input_height || input.cols() != graph.input_width)
    throw std::invalid_argument("forward: input dims do not match graph input shape");
  ForwardPass fp;
  fp.outputs.resize(graph.nodes.size());
  fp.argmax.resize(graph.nodes.size());
  for (const auto& n : graph.nodes) {
    auto& out = fp.outputs[n.id];
    const Tensor* in0 = n.inputs.empty() ? nullptr : &fp.outputs[n.inputs[0]];
    switch (n.kind) {
      case LayerKind::Input:
        out.h = static_cast<int>(input.rows());
        out.w = static_cast<int>(input.cols());
        out.ch = {input};
        break;
      case LayerKind::Conv:
        out = conv_same(*in0, std::get<ConvWeights>(weights.nodes[n.id]), n.kernel);
        break;
      case LayerKind::TransposedConv:
        out = tconv(*in0, std::get<ConvWeights>(weights.nodes[n.id]), n.kernel, n.stride);
        break;
      case LayerKind::BatchNormAffine: {
        const auto& a = std::get<AffineWeights>(weights.nodes[n.id]);
        out = *in0;
        for (int c = 0; c < out.channels(); ++c)
          out.ch[c] = (out.ch[c].array() * a.scale(c) + a.shift(c)).matrix();
        break;
      }
      case LayerKind::ReLU:
        out = apply(*in0, relu1);
        break;
      case LayerKind::Sigmoid:
        out = apply(*in0, sigmoid1);
        break;
      case LayerKind::MaxPool:
        maxpool(*in0, n.kernel, out, fp.argmax[n.id]);
        break;
      case LayerKind::Concat: {
        const Tensor& b = fp.outputs[n.inputs[1]];
        if (in0->h != b.h || in0->w != b.w)
          throw std::invalid_argument("concat: spatial dims mismatch");
        out = *in0;
        out.ch.insert(out.ch.end(), b.ch.begin(), b.ch.end());
        break;
      }
      case LayerKind::AttentionGate:
        out = gate_forward(*in0, fp.outputs[n.inputs[1]],
                           std::get<GateWeights>(weights.nodes[n.id]));
        break;
      case LayerKind::ElementwiseAdd: {
        const Tensor& b = fp.outputs[n.inputs[1]];
        out = *in0;
        for (int c = 0; c < out.channels(); ++c) out.ch[c] += b.ch[c];
        break;
      }
      case LayerKind::ElementwiseMul: {
        const Tensor& b = fp.outputs[n.inputs[1]];
        out = *in0;
        for (int c = 0; c < out.channels(); ++c) out.ch[c] = out.ch[c].cwiseProduct(b.ch[c]);
        break;
      }
    }
  }
  return fp;
}

namespace {

void add_grad(std::vector<std::optional<Tensor>>& grads, int id, Tensor&& g) {
  if (!grads[id]) {
    grads[id] = std::move(g);
    return;
  }
  Tensor& acc = *grads[id];
  for (int c = 0; c < acc.channels(); ++c) acc.ch[c] += g.ch[c];
}

void gate_backward(const LayerNode& n, const GateWeights& w, const Tensor& x, const Tensor& gsig,
                   const Tensor& g, Tensor& gx, Tensor& gg) {
  // Recompute the cheap per-pixel intermediates instead of caching them.
  Tensor ax = mix(x, w.wx);
  const Tensor ag = mix(gsig, w.wg);
  for (int c = 0; c < ax.channels(); ++c) ax.ch[c] += ag.ch[c];
  const Tensor act = apply(ax, relu1);
  const Tensor logits = mix(act, w.psi);
  const Eigen::MatrixXd alpha = logits.ch[0].unaryExpr(&sigmoid1);

  gx = Tensor::zeros(n.in_ch, x.h, x.w);
  Eigen::MatrixXd galpha = Eigen::MatrixXd::Zero(x.h, x.w);
  for (int c = 0; c < n.in_ch; ++c) {
    gx.ch[c] = g.ch[c].cwiseProduct(alpha);
    galpha += g.ch[c].cwiseProduct(x.ch[c]);
  }
  Tensor glogits = Tensor::zeros(1, x.h, x.w);
  glogits.ch[0] =
      galpha.cwiseProduct(alpha.cwiseProduct((1.0 - alpha.array()).matrix()));
  Tensor gact = mix_backward(glogits, w.psi, n.inter_ch);
  for (int c = 0; c < gact.channels(); ++c)
    gact.ch[c] = (ax.ch[c].array() > 0.0).select(gact.ch[c], 0.0);
  const Tensor gax = gact;  // add node: same grad to both 1x1 conv outputs
  Tensor gx_lin = mix_backward(gax, w.wx, n.in_ch);
  gg = mix_backward(gax, w.wg, n.in_ch);
  for (int c = 0; c < n.in_ch; ++c) gx.ch[c] += gx_lin.ch[c];
}

}  // namespace

Eigen::MatrixXd input_gradient(const NetworkGraph& graph, const WeightSet& weights,
                               const Eigen::MatrixXd& input, int ti, int tj,
                               bool post_sigmoid) {
  const ForwardPass fp = forward(graph, weights, input);

  int target = graph.terminal();
  if (!post_sigmoid && graph.nodes[target].kind == LayerKind::Sigmoid)
    target = graph.nodes[target].inputs[0];
  const Tensor& tout = fp.outputs[target];
  if (ti < 0 || ti >= tout.h || tj < 0 || tj >= tout.w)
    throw std::invalid_argument("input_gradient: target pixel outside output dims");

  std::vector<std::optional<Tensor>> grads(graph.nodes.size());
  Tensor seed = Tensor::zeros(tout.channels(), tout.h, tout.w);
  seed.ch[0](ti, tj) = 1.0;
  grads[target] = std::move(seed);

  for (int id = target; id >= 0; --id) {
    if (!grads[id]) continue;
    const LayerNode& n = graph.nodes[id];
    if (n.kind == LayerKind::Input) continue;
    const Tensor& g = *grads[id];
    const int src = n.inputs[0];
    const Tensor& x = fp.outputs[src];
    switch (n.kind) {
      case LayerKind::Conv:
        add_grad(grads, src,
                 conv_same_backward(g, std::get<ConvWeights>(weights.nodes[id]), n.kernel,
                                    n.in_ch));
        break;
      case LayerKind::TransposedConv:
        add_grad(grads, src,
                 tconv_backward(g, std::get<ConvWeights>(weights.nodes[id]), n.kernel, n.stride,
                                n.in_ch, x.h, x.w));
        break;
      case LayerKind::BatchNormAffine: {
        const auto& a = std::get<AffineWeights>(weights.nodes[id]);
        Tensor gin = g;
        for (int c = 0; c < gin.channels(); ++c) gin.ch[c] *= a.scale(c);
        add_grad(grads, src, std::move(gin));
        break;
      }
      case LayerKind::ReLU: {
        Tensor gin = g;
        for (int c = 0; c < gin.channels(); ++c)
          gin.ch[c] = (x.ch[c].array() > 0.0).select(gin.ch[c], 0.0);
        add_grad(grads, src, std::move(gin));
        break;
      }
      case LayerKind::Sigmoid: {
        const Tensor& y = fp.outputs[id];
        Tensor gin = g;
        for (int c = 0; c < gin.channels(); ++c)
          gin.ch[c] = gin.ch[c].cwiseProduct(
              y.ch[c].cwiseProduct((1.0 - y.ch[c].array()).matrix()));
        add_grad(grads, src, std::move(gin));
        break;
      }
      case LayerKind::MaxPool: {
        Tensor gin = Tensor::zeros(n.in_ch, x.h, x.w);
        const int k = n.kernel;
        for (int c = 0; c < n.in_ch; ++c)
          for (int i = 0; i < g.h; ++i)
            for (int j = 0; j < g.w; ++j) {
              const int idx = fp.argmax[id][c](i, j);
              gin.ch[c](i * k + idx / k, j * k + idx % k) += g.ch[c](i, j);
            }
        add_grad(grads, src, std::move(gin));
        break;
      }
      case LayerKind::Concat: {
        const int c0 = graph.nodes[n.inputs[0]].out_ch;
        Tensor ga = Tensor::zeros(c0, g.h, g.w);
        Tensor gb = Tensor::zeros(n.in_ch - c0, g.h, g.w);
        for (int c = 0; c < c0; ++c) ga.ch[c] = g.ch[c];
        for (int c = c0; c < g.channels(); ++c) gb.ch[c - c0] = g.ch[c];
        add_grad(grads, n.inputs[0], std::move(ga));
        add_grad(grads, n.inputs[1], std::move(gb));
        break;
      }
      case LayerKind::AttentionGate: {
        Tensor gx, gg;
        gate_backward(n, std::get<GateWeights>(weights.nodes[id]), x,
                      fp.outputs[n.inputs[1]], g, gx, gg);
        add_grad(grads, n.inputs[0], std::move(gx));
        add_grad(grads, n.inputs[1], std::move(gg));
        break;
      }
      case LayerKind::ElementwiseAdd: {
        Tensor ga = g;
        Tensor gb = g;
        add_grad(grads, n.inputs[0], std::move(ga));
        add_grad(grads, n.inputs[1], std::move(gb));
        break;
      }
      case LayerKind::ElementwiseMul: {
        const Tensor& b = fp.outputs[n.inputs[1]];
        Tensor ga = g, gb = g;
        for (int c = 0; c < g.channels(); ++c) {
          ga.ch[c] = g.ch[c].cwiseProduct(b.ch[c]);
          gb.ch[c] = g.ch[c].cwiseProduct(x.ch[c]);
        }
        add_grad(grads, n.inputs[0], std::move(ga));
        add_grad(grads, n.inputs[1], std::move(gb));
        break;
      }
      case LayerKind::Input:
        break;
    }
    if (id != 0) grads[id].reset();
  }
  if (!grads[0]) return Eigen::MatrixXd::Zero(input.rows(), input.cols());
  return grads[0]->ch[0];
}

ERFGrid compute_erf(const NetworkGraph& graph, const WeightSet& weights,
                    const Eigen::MatrixXd& input, int ti, int tj, bool post_sigmoid) {
  const Eigen::MatrixXd full = input_gradient(graph, weights, input, ti, tj, post_sigmoid);
  const RFTensor terminal = propagate(graph);
  const RFBox box = terminal.box(ti, tj);
  ERFGrid grid;
  grid.box = box;
  grid.values = full.block(box.top, box.left, box.bottom - box.top + 1, box.right - box.left + 1);
  return grid;
}

ERFGrid compute_erf_center(const NetworkGraph& graph, const WeightSet& weights,
                           const Eigen::MatrixXd& input, bool post_sigmoid) {
  return compute_erf(graph, weights, input, graph.input_height / 2, graph.input_width / 2,
                     post_sigmoid);
}

std::vector<std::pair<int, int>> nan_poison_dependency(const NetworkGraph& graph,
                                                       const WeightSet& weights,
                                                       const Eigen::MatrixXd& input,
                                                       int ti, int tj) {
  const int h = static_cast<int>(input.rows());
  const int w = static_cast<int>(input.cols());
  std::vector<char> hit(static_cast<size_t>(h) * w, 0);
  parallel_for(static_cast<size_t>(h) * w, [&](size_t idx) {
    Eigen::MatrixXd poisoned = input;
    poisoned(idx % h, idx / h) = std::numeric_limits<double>::quiet_NaN();
    const ForwardPass fp = forward(graph, weights, poisoned);
    const Tensor& out = fp.terminal(graph);
    if (std::isnan(out.ch[0](ti, tj))) hit[(idx % h) * w + idx / h] = 1;
  });
  std::vector<std::pair<int, int>> deps;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      if (hit[static_cast<size_t>(i) * w + j]) deps.emplace_back(i, j);
  return deps;
}

}  // namespace rfscope
