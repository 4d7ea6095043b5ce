// Copyright 2026 The Declutter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "declutter/diff/evaluate.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace declutter::diff {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

[[noreturn]] void fail(const Graph& graph, NodeId id, const std::string& what) {
  const Node& node = graph.node(id);
  std::string label = "node " + std::to_string(id) + " (" + std::string(op_name(node.kind));
  if (!node.name.empty()) label += " '" + node.name + "'";
  throw Error(label + "): " + what);
}

struct ConvGeometry {
  int in_c = 0;
  int in_h = 0;  // after upsampling
  int in_w = 0;
  int out_c = 0;
  int k_h = 0;
  int k_w = 0;
  int stride = 1;
  int pad_top = 0;
  int pad_left = 0;
  int out_h = 0;
  int out_w = 0;
  int upsample = 1;

  int col_rows() const { return in_c * k_h * k_w; }
  int col_cols() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const Shape& x, const Shape& w, const Shape& b, const Conv2dAttrs& attrs,
                           const Graph& graph, NodeId id) {
  if (x.size() != 3) fail(graph, id, "input must be CHW, got " + shape_string(x));
  if (w.size() != 4) fail(graph, id, "weight must be OIHW, got " + shape_string(w));
  if (b.size() != 1 || b[0] != w[0]) fail(graph, id, "bias shape " + shape_string(b) + " vs weight " + shape_string(w));
  if (w[1] != x[0]) {
    fail(graph, id, "input channels " + std::to_string(x[0]) + " != weight channels " + std::to_string(w[1]));
  }
  ConvGeometry g;
  g.upsample = attrs.upsample;
  g.in_c = x[0];
  g.in_h = x[1] * attrs.upsample;
  g.in_w = x[2] * attrs.upsample;
  g.out_c = w[0];
  g.k_h = w[2];
  g.k_w = w[3];
  g.stride = attrs.stride;
  if (attrs.padding == Padding::kSame) {
    g.out_h = (g.in_h + g.stride - 1) / g.stride;
    g.out_w = (g.in_w + g.stride - 1) / g.stride;
    int pad_h = std::max((g.out_h - 1) * g.stride + g.k_h - g.in_h, 0);
    int pad_w = std::max((g.out_w - 1) * g.stride + g.k_w - g.in_w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  } else {
    if (g.in_h < g.k_h || g.in_w < g.k_w) fail(graph, id, "valid convolution kernel larger than input");
    g.out_h = (g.in_h - g.k_h) / g.stride + 1;
    g.out_w = (g.in_w - g.k_w) / g.stride + 1;
  }
  return g;
}

template <typename T>
void upsample_nearest(const T* in, int c, int h, int w, int factor, T* out) {
  const int oh = h * factor;
  const int ow = w * factor;
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < oh; ++y) {
      const T* src = in + (static_cast<std::size_t>(ch) * h + y / factor) * w;
      T* dst = out + (static_cast<std::size_t>(ch) * oh + y) * ow;
      for (int x = 0; x < ow; ++x) dst[x] = src[x / factor];
    }
  }
}

template <typename T>
void upsample_nearest_backward(const T* grad_up, int c, int h, int w, int factor, T* grad) {
  const int oh = h * factor;
  const int ow = w * factor;
  std::fill(grad, grad + static_cast<std::size_t>(c) * h * w, T{0});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < oh; ++y) {
      const T* src = grad_up + (static_cast<std::size_t>(ch) * oh + y) * ow;
      T* dst = grad + (static_cast<std::size_t>(ch) * h + y / factor) * w;
      for (int x = 0; x < ow; ++x) dst[x / factor] += src[x];
    }
  }
}

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  const std::size_t cols = static_cast<std::size_t>(g.col_cols());
  for (int c = 0; c < g.in_c; ++c) {
    const T* plane = x + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ki = 0; ki < g.k_h; ++ki) {
      for (int kj = 0; kj < g.k_w; ++kj) {
        T* row = col + (static_cast<std::size_t>(c * g.k_h + ki) * g.k_w + kj) * cols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad_top + ki;
          T* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad_left + kj;
            dst[ox] = (ix < 0 || ix >= g.in_w) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* dx) {
  const std::size_t cols = static_cast<std::size_t>(g.col_cols());
  std::fill(dx, dx + static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w, T{0});
  for (int c = 0; c < g.in_c; ++c) {
    T* plane = dx + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ki = 0; ki < g.k_h; ++ki) {
      for (int kj = 0; kj < g.k_w; ++kj) {
        const T* row = col + (static_cast<std::size_t>(c * g.k_h + ki) * g.k_w + kj) * cols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad_top + ki;
          if (iy < 0 || iy >= g.in_h) continue;
          const T* src = row + static_cast<std::size_t>(oy) * g.out_w;
          T* dst = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad_left + kj;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// Operand layout for broadcasting binary ops.
struct Broadcast {
  Shape out;
  bool same = false;
  std::vector<std::size_t> a_strides;  // per output axis, 0 where broadcast
  std::vector<std::size_t> b_strides;
};

std::vector<std::size_t> contiguous_strides(const Shape& dims) {
  std::vector<std::size_t> s(dims.size(), 1);
  for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * static_cast<std::size_t>(dims[i + 1]);
  return s;
}

Broadcast broadcast_layout(const Shape& a, const Shape& b, const Graph& graph, NodeId id) {
  Broadcast bc;
  if (a == b) {
    bc.out = a;
    bc.same = true;
    return bc;
  }
  const std::size_t na = element_count(a);
  const std::size_t nb = element_count(b);
  if (nb == 1 || na == 1) {
    bc.out = nb == 1 ? a : b;
    bc.a_strides = na == 1 ? std::vector<std::size_t>(bc.out.size(), 0) : contiguous_strides(a);
    bc.b_strides = nb == 1 ? std::vector<std::size_t>(bc.out.size(), 0) : contiguous_strides(b);
    return bc;
  }
  if (a.size() != b.size()) fail(graph, id, "cannot broadcast " + shape_string(a) + " with " + shape_string(b));
  bc.out.resize(a.size());
  auto sa = contiguous_strides(a);
  auto sb = contiguous_strides(b);
  bc.a_strides.resize(a.size());
  bc.b_strides.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i] && a[i] != 1 && b[i] != 1) {
      fail(graph, id, "cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
    bc.out[i] = std::max(a[i], b[i]);
    bc.a_strides[i] = a[i] == 1 ? 0 : sa[i];
    bc.b_strides[i] = b[i] == 1 ? 0 : sb[i];
  }
  return bc;
}

// Calls fn(out_index, a_index, b_index) for every output element.
template <typename Fn>
void for_each_broadcast(const Broadcast& bc, Fn&& fn) {
  const std::size_t n = element_count(bc.out);
  if (bc.same) {
    for (std::size_t i = 0; i < n; ++i) fn(i, i, i);
    return;
  }
  const std::size_t rank = bc.out.size();
  std::vector<int> index(rank, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fn(i, ia, ib);
    for (int axis = static_cast<int>(rank) - 1; axis >= 0; --axis) {
      if (++index[axis] < bc.out[axis]) {
        ia += bc.a_strides[axis];
        ib += bc.b_strides[axis];
        break;
      }
      ia -= bc.a_strides[axis] * static_cast<std::size_t>(bc.out[axis] - 1);
      ib -= bc.b_strides[axis] * static_cast<std::size_t>(bc.out[axis] - 1);
      index[axis] = 0;
    }
  }
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
BasicTensor<T> eval_node(const Graph& graph, NodeId id, const std::vector<const BasicTensor<T>*>& slots) {
  const Node& node = graph.node(id);
  auto in = [&](std::size_t i) -> const BasicTensor<T>& { return *slots[static_cast<std::size_t>(node.inputs[i])]; };

  switch (node.kind) {
    case OpKind::kConv2d: {
      const auto& x = in(0);
      const auto& w = in(1);
      const auto& b = in(2);
      const ConvGeometry g = conv_geometry(x.dims(), w.dims(), b.dims(), node.conv, graph, id);
      AlignedVector<T> upsampled;
      const T* src = x.data();
      if (g.upsample > 1) {
        upsampled.resize(static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w);
        upsample_nearest(x.data(), x.dim(0), x.dim(1), x.dim(2), g.upsample, upsampled.data());
        src = upsampled.data();
      }
      AlignedVector<T> col(static_cast<std::size_t>(g.col_rows()) * g.col_cols());
      im2col(src, g, col.data());
      BasicTensor<T> out(Shape{g.out_c, g.out_h, g.out_w});
      MatMap<T> y(out.data(), g.out_c, g.col_cols());
      y.noalias() = ConstMatMap<T>(w.data(), g.out_c, g.col_rows()) * ConstMatMap<T>(col.data(), g.col_rows(), g.col_cols());
      for (int o = 0; o < g.out_c; ++o) y.row(o).array() += b[static_cast<std::size_t>(o)];
      return out;
    }
    case OpKind::kFullyConnected: {
      const auto& x = in(0);
      const auto& w = in(1);
      const auto& b = in(2);
      if (x.rank() != 1) fail(graph, id, "input must be rank 1, got " + shape_string(x.dims()));
      if (w.rank() != 2 || w.dim(1) != x.dim(0)) {
        fail(graph, id, "weight " + shape_string(w.dims()) + " incompatible with input " + shape_string(x.dims()));
      }
      if (b.rank() != 1 || b.dim(0) != w.dim(0)) fail(graph, id, "bias shape " + shape_string(b.dims()));
      BasicTensor<T> out(Shape{w.dim(0)});
      Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> y(out.data(), w.dim(0));
      y.noalias() = ConstMatMap<T>(w.data(), w.dim(0), w.dim(1)) *
                    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(x.data(), x.dim(0));
      y += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(b.data(), b.dim(0));
      return out;
    }
    case OpKind::kRelu: {
      BasicTensor<T> out = in(0);
      for (T& v : out.values()) v = v > T{0} ? v : T{0};
      return out;
    }
    case OpKind::kSigmoid: {
      BasicTensor<T> out = in(0);
      for (T& v : out.values()) v = stable_sigmoid(v);
      return out;
    }
    case OpKind::kSoftmax: {
      BasicTensor<T> out = in(0);
      const std::size_t width = static_cast<std::size_t>(out.dims().back());
      for (std::size_t row = 0; row < out.size(); row += width) {
        T* v = out.data() + row;
        const T peak = *std::max_element(v, v + width);
        T total{0};
        for (std::size_t i = 0; i < width; ++i) {
          v[i] = std::exp(v[i] - peak);
          total += v[i];
        }
        for (std::size_t i = 0; i < width; ++i) v[i] /= total;
      }
      return out;
    }
    case OpKind::kFlatten:
      return in(0).reshaped(Shape{static_cast<int>(in(0).size())});
    case OpKind::kAdd:
    case OpKind::kMultiply:
    case OpKind::kSubtract: {
      const auto& a = in(0);
      const auto& b = in(1);
      const Broadcast bc = broadcast_layout(a.dims(), b.dims(), graph, id);
      BasicTensor<T> out(bc.out);
      T* o = out.data();
      const T* pa = a.data();
      const T* pb = b.data();
      if (node.kind == OpKind::kAdd) {
        for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = pa[ia] + pb[ib]; });
      } else if (node.kind == OpKind::kMultiply) {
        for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = pa[ia] * pb[ib]; });
      } else {
        for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = pa[ia] - pb[ib]; });
      }
      return out;
    }
    case OpKind::kMean: {
      const auto& x = in(0);
      T total{0};
      for (T v : x.values()) total += v;
      return BasicTensor<T>::scalar(total / static_cast<T>(x.size()));
    }
    case OpKind::kAbs: {
      BasicTensor<T> out = in(0);
      for (T& v : out.values()) v = std::abs(v);
      return out;
    }
    case OpKind::kSquare: {
      BasicTensor<T> out = in(0);
      for (T& v : out.values()) v = v * v;
      return out;
    }
    case OpKind::kConcat: {
      const auto& first = in(0);
      Shape dims = first.dims();
      AlignedVector<T> data;
      dims[0] = 0;
      for (std::size_t i = 0; i < node.inputs.size(); ++i) {
        const auto& part = in(i);
        if (part.rank() != first.rank() || !std::equal(part.dims().begin() + 1, part.dims().end(), first.dims().begin() + 1)) {
          fail(graph, id, "concat part " + shape_string(part.dims()) + " incompatible with " + shape_string(first.dims()));
        }
        dims[0] += part.dim(0);
        data.insert(data.end(), part.values().begin(), part.values().end());
      }
      return BasicTensor<T>(std::move(dims), std::move(data));
    }
    case OpKind::kInput:
    case OpKind::kParam:
      break;
  }
  fail(graph, id, "unexpected node kind");
}

template <typename T>
void accumulate(BasicTensor<T>& slot, BasicTensor<T>&& grad) {
  if (slot.empty()) {
    slot = std::move(grad);
    return;
  }
  T* dst = slot.data();
  const T* src = grad.data();
  for (std::size_t i = 0; i < slot.size(); ++i) dst[i] += src[i];
}

// Sums a broadcast gradient back onto an operand shape.
template <typename T>
BasicTensor<T> reduce_to(const Shape& operand, const Broadcast& bc, const AlignedVector<T>& full, bool use_a) {
  if (bc.same) return BasicTensor<T>(operand, full);
  BasicTensor<T> out(operand);
  T* o = out.data();
  for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) { o[use_a ? ia : ib] += full[i]; });
  return out;
}

}  // namespace

template <typename T>
BasicTensorMap<T> Evaluation<T>::outputs() const {
  BasicTensorMap<T> out;
  for (const auto& [name, id] : graph_->outputs()) out.emplace(name, value(id));
  return out;
}

template <typename T>
Evaluation<T> forward(const Graph& graph, const BasicTensorMap<T>& inputs, const BasicTensorMap<T>& params) {
  Evaluation<T> eval;
  eval.graph_ = &graph;
  const std::size_t n = graph.size();
  eval.owned_.resize(n);
  eval.slots_.assign(n, nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    const NodeId id = static_cast<NodeId>(i);
    const Node& node = graph.node(id);
    if (node.kind == OpKind::kInput || node.kind == OpKind::kParam) {
      const auto& source = node.kind == OpKind::kInput ? inputs : params;
      auto it = source.find(node.name);
      if (it == source.end()) fail(graph, id, "no value supplied");
      eval.slots_[i] = &it->second;
      continue;
    }
    eval.owned_[i] = eval_node<T>(graph, id, eval.slots_);
    eval.slots_[i] = &eval.owned_[i];
  }
  return eval;
}

template <typename T>
BasicTensorMap<T> backward(const Evaluation<T>& eval, NodeId loss, const BackwardOptions& options) {
  const Graph& graph = eval.graph();
  const std::size_t n = graph.size();
  if (loss < 0 || static_cast<std::size_t>(loss) >= n) throw Error("backward: unknown loss node");
  if (eval.value(loss).size() != 1) {
    fail(graph, loss, "loss must be scalar, got " + shape_string(eval.value(loss).dims()));
  }

  std::vector<char> needs(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = graph.node(static_cast<NodeId>(i));
    if (node.kind == OpKind::kParam) {
      needs[i] = !options.wrt || options.wrt(node.name);
    } else if (node.kind != OpKind::kInput) {
      for (NodeId in : node.inputs) needs[i] = needs[i] || needs[static_cast<std::size_t>(in)];
    }
  }

  std::vector<BasicTensor<T>> grads(n);
  grads[static_cast<std::size_t>(loss)] = BasicTensor<T>(eval.value(loss).dims(), T{1});

  for (NodeId id = loss; id >= 0; --id) {
    const std::size_t slot = static_cast<std::size_t>(id);
    const Node& node = graph.node(id);
    if (!needs[slot] || grads[slot].empty() || node.kind == OpKind::kParam || node.kind == OpKind::kInput) continue;
    const BasicTensor<T>& dy = grads[slot];
    const BasicTensor<T>& y = eval.value(id);
    auto x = [&](std::size_t i) -> const BasicTensor<T>& { return eval.value(node.inputs[i]); };
    auto wants = [&](std::size_t i) { return needs[static_cast<std::size_t>(node.inputs[i])] != 0; };
    auto emit = [&](std::size_t i, BasicTensor<T>&& g) {
      if (options.fault_injection && *options.fault_injection == node.kind) {
        for (T& v : g.values()) v *= T{1.5};
      }
      accumulate(grads[static_cast<std::size_t>(node.inputs[i])], std::move(g));
    };

    switch (node.kind) {
      case OpKind::kConv2d: {
        const auto& in = x(0);
        const auto& w = x(1);
        const ConvGeometry g = conv_geometry(in.dims(), w.dims(), x(2).dims(), node.conv, graph, id);
        ConstMatMap<T> dy_mat(dy.data(), g.out_c, g.col_cols());
        if (wants(1) || wants(0)) {
          AlignedVector<T> upsampled;
          const T* src = in.data();
          if (g.upsample > 1) {
            upsampled.resize(static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w);
            upsample_nearest(in.data(), in.dim(0), in.dim(1), in.dim(2), g.upsample, upsampled.data());
            src = upsampled.data();
          }
          AlignedVector<T> col(static_cast<std::size_t>(g.col_rows()) * g.col_cols());
          if (wants(1)) {
            im2col(src, g, col.data());
            BasicTensor<T> dw(w.dims());
            MatMap<T>(dw.data(), g.out_c, g.col_rows()).noalias() =
                dy_mat * ConstMatMap<T>(col.data(), g.col_rows(), g.col_cols()).transpose();
            emit(1, std::move(dw));
          }
          if (wants(0)) {
            MatMap<T>(col.data(), g.col_rows(), g.col_cols()).noalias() =
                ConstMatMap<T>(w.data(), g.out_c, g.col_rows()).transpose() * dy_mat;
            if (g.upsample > 1) {
              AlignedVector<T> dx_up(static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w);
              col2im(col.data(), g, dx_up.data());
              BasicTensor<T> dx(in.dims());
              upsample_nearest_backward(dx_up.data(), in.dim(0), in.dim(1), in.dim(2), g.upsample, dx.data());
              emit(0, std::move(dx));
            } else {
              BasicTensor<T> dx(in.dims());
              col2im(col.data(), g, dx.data());
              emit(0, std::move(dx));
            }
          }
        }
        if (wants(2)) {
          BasicTensor<T> db(x(2).dims());
          Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(db.data(), g.out_c) = dy_mat.rowwise().sum();
          emit(2, std::move(db));
        }
        break;
      }
      case OpKind::kFullyConnected: {
        const auto& in = x(0);
        const auto& w = x(1);
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> dy_vec(dy.data(), w.dim(0));
        if (wants(0)) {
          BasicTensor<T> dx(in.dims());
          Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(dx.data(), w.dim(1)).noalias() =
              ConstMatMap<T>(w.data(), w.dim(0), w.dim(1)).transpose() * dy_vec;
          emit(0, std::move(dx));
        }
        if (wants(1)) {
          BasicTensor<T> dw(w.dims());
          MatMap<T>(dw.data(), w.dim(0), w.dim(1)).noalias() =
              dy_vec * Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(in.data(), w.dim(1)).transpose();
          emit(1, std::move(dw));
        }
        if (wants(2)) emit(2, BasicTensor<T>(dy));
        break;
      }
      case OpKind::kRelu: {
        BasicTensor<T> dx = dy;
        const auto& in = x(0);
        for (std::size_t i = 0; i < dx.size(); ++i) {
          if (!(in[i] > T{0})) dx[i] = T{0};
        }
        emit(0, std::move(dx));
        break;
      }
      case OpKind::kSigmoid: {
        BasicTensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= y[i] * (T{1} - y[i]);
        emit(0, std::move(dx));
        break;
      }
      case OpKind::kSoftmax: {
        BasicTensor<T> dx(y.dims());
        const std::size_t width = static_cast<std::size_t>(y.dims().back());
        for (std::size_t row = 0; row < y.size(); row += width) {
          T dot{0};
          for (std::size_t i = 0; i < width; ++i) dot += dy[row + i] * y[row + i];
          for (std::size_t i = 0; i < width; ++i) dx[row + i] = y[row + i] * (dy[row + i] - dot);
        }
        emit(0, std::move(dx));
        break;
      }
      case OpKind::kFlatten:
        emit(0, dy.reshaped(x(0).dims()));
        break;
      case OpKind::kAdd:
      case OpKind::kSubtract:
      case OpKind::kMultiply: {
        const auto& a = x(0);
        const auto& b = x(1);
        const Broadcast bc = broadcast_layout(a.dims(), b.dims(), graph, id);
        const std::size_t count = element_count(bc.out);
        AlignedVector<T> full(count);
        if (wants(0)) {
          if (node.kind == OpKind::kMultiply) {
            for_each_broadcast(bc, [&](std::size_t i, std::size_t, std::size_t ib) { full[i] = dy[i] * b[ib]; });
          } else {
            std::copy(dy.values().begin(), dy.values().end(), full.begin());
          }
          emit(0, reduce_to(a.dims(), bc, full, true));
        }
        if (wants(1)) {
          if (node.kind == OpKind::kMultiply) {
            for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t) { full[i] = dy[i] * a[ia]; });
          } else if (node.kind == OpKind::kSubtract) {
            for (std::size_t i = 0; i < count; ++i) full[i] = -dy[i];
          } else {
            std::copy(dy.values().begin(), dy.values().end(), full.begin());
          }
          emit(1, reduce_to(b.dims(), bc, full, false));
        }
        break;
      }
      case OpKind::kMean: {
        const auto& in = x(0);
        emit(0, BasicTensor<T>(in.dims(), dy[0] / static_cast<T>(in.size())));
        break;
      }
      case OpKind::kAbs: {
        BasicTensor<T> dx = dy;
        const auto& in = x(0);
        for (std::size_t i = 0; i < dx.size(); ++i) {
          dx[i] *= in[i] > T{0} ? T{1} : (in[i] < T{0} ? T{-1} : T{0});
        }
        emit(0, std::move(dx));
        break;
      }
      case OpKind::kSquare: {
        BasicTensor<T> dx = dy;
        const auto& in = x(0);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= T{2} * in[i];
        emit(0, std::move(dx));
        break;
      }
      case OpKind::kConcat: {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < node.inputs.size(); ++i) {
          const auto& part = x(i);
          if (wants(i)) {
            AlignedVector<T> slice(dy.values().begin() + static_cast<std::ptrdiff_t>(offset),
                                 dy.values().begin() + static_cast<std::ptrdiff_t>(offset + part.size()));
            emit(i, BasicTensor<T>(part.dims(), std::move(slice)));
          }
          offset += part.size();
        }
        break;
      }
      case OpKind::kInput:
      case OpKind::kParam:
        break;
    }
  }

  BasicTensorMap<T> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = graph.node(static_cast<NodeId>(i));
    if (node.kind != OpKind::kParam) continue;
    if (options.wrt && !options.wrt(node.name)) continue;
    if (grads[i].empty()) {
      out.emplace(node.name, BasicTensor<T>(eval.value(static_cast<NodeId>(i)).dims()));
    } else {
      out.emplace(node.name, std::move(grads[i]));
    }
  }
  return out;
}

template class Evaluation<float>;
template class Evaluation<double>;
template Evaluation<float> forward(const Graph&, const BasicTensorMap<float>&, const BasicTensorMap<float>&);
template Evaluation<double> forward(const Graph&, const BasicTensorMap<double>&, const BasicTensorMap<double>&);
template BasicTensorMap<float> backward(const Evaluation<float>&, NodeId, const BackwardOptions&);
template BasicTensorMap<double> backward(const Evaluation<double>&, NodeId, const BackwardOptions&);

}  // namespace declutter::diff
