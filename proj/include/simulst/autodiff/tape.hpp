// Copyright 2026 The simulst Authors
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

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "simulst/autodiff/kernels.hpp"
#include "simulst/autodiff/tensor.hpp"

namespace simulst::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Records operations in execution order for reverse-mode differentiation.
///
/// A tape and the values on it belong to one thread. With recording disabled
/// the tape only evaluates (no backward rules are kept), which is how the
/// inference paths run.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  explicit Tape(bool record = true) : record_(record) { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  /// Owned value that never receives a gradient.
  Var constant(Tensor value) { return push(std::move(value), false, nullptr); }

  /// Non-owning constant; `value` must outlive the tape.
  Var view(const Tensor& value) {
    Node n;
    n.external = &value;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  /// Non-owning leaf that accumulates a gradient (model parameters).
  Var parameter(const Tensor& value) {
    Var v = view(value);
    nodes_.back().requires_grad = record_;
    return v;
  }

  /// Owned leaf that accumulates a gradient.
  Var leaf(Tensor value) {
    Var v = push(std::move(value), false, nullptr);
    nodes_.back().requires_grad = record_;
    return v;
  }

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external != nullptr ? *n.external : n.value;
  }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient of a node; zeros if nothing flowed into it.
  Tensor grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.empty()) return Tensor(value(v.id).shape());
    return n.grad;
  }
  bool has_grad(Var v) const { return !nodes_[v.id].grad.empty(); }

  /// Zero-initialised gradient buffer of a node, allocated on first use.
  Tensor& grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor(value(id).shape());
    return n.grad;
  }

  Var push(Tensor value, bool requires_grad, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = record_ && requires_grad;
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  /// Fills the gradient buffers of every node the loss depends on.
  void backward(Var loss) {
    if (loss.tape != this) throw ContractError("backward: loss belongs to another tape");
    if (value(loss.id).size() != 1)
      throw ContractError("backward: loss must be a scalar, got shape " +
                          shape_str(value(loss.id).shape()));
    if (!record_) throw ContractError("backward: tape was created with recording disabled");
    grad_buffer(loss.id)[0] = 1.0f;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && !n.grad.empty()) {
        // Copy: rules may grow other grad buffers, never this one.
        const Tensor& g = n.grad;
        n.backward(*this, g);
      }
    }
  }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  bool record_;
  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

namespace detail {

inline Tape& same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw ContractError("operands live on different tapes");
  return *a.tape;
}

inline bool any_grad(std::initializer_list<Var> vars) {
  for (Var v : vars)
    if (v.tape->requires_grad(v.id)) return true;
  return false;
}

inline void accumulate(Tape& t, Var v, std::span<const float> g) {
  if (!t.requires_grad(v.id)) return;
  Tensor& buf = t.grad_buffer(v.id);
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

/// b broadcasts against a when it equals a or a trailing suffix of a's shape.
inline std::size_t broadcast_inner(const Shape& a, const Shape& b, const char* op) {
  bool ok = b.size() <= a.size();
  for (std::size_t i = 0; ok && i < b.size(); ++i)
    ok = b[b.size() - 1 - i] == a[a.size() - 1 - i];
  if (!ok || numel(b) == 0)
    throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(b) + " onto " +
                     shape_str(a));
  return numel(b);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

inline Var matmul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
    throw ShapeError("matmul: inner dimensions disagree for " + shape_str(av.shape()) + " x " +
                     shape_str(bv.shape()));
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  kernels::matmul(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  return t.push(std::move(out), detail::any_grad({a, b}),
                [a, b, m, k, n](Tape& tp, const Tensor& g) {
                  if (tp.requires_grad(a.id))
                    kernels::matmul_a_bt_acc(g.data().data(), tp.value(b.id).data().data(),
                                             tp.grad_buffer(a.id).data().data(), m, n, k);
                  if (tp.requires_grad(b.id))
                    kernels::matmul_at_b_acc(tp.value(a.id).data().data(), g.data().data(),
                                             tp.grad_buffer(b.id).data().data(), m, k, n);
                });
}

// ---------------------------------------------------------------------------
// Elementwise binary ops with trailing-axis broadcast of the right operand.

enum class Binary { kAdd, kSub, kMul };

inline Var binary(Binary kind, Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const char* name = kind == Binary::kAdd ? "add" : kind == Binary::kSub ? "sub" : "mul";
  const std::size_t inner = detail::broadcast_inner(av.shape(), bv.shape(), name);
  Tensor out(av.shape());
  const std::size_t total = av.size();
  for (std::size_t i = 0; i < total; ++i) {
    const float x = av[i], y = bv[i % inner];
    out[i] = kind == Binary::kAdd ? x + y : kind == Binary::kSub ? x - y : x * y;
  }
  return t.push(std::move(out), detail::any_grad({a, b}),
                [kind, a, b, inner, total](Tape& tp, const Tensor& g) {
                  if (tp.requires_grad(a.id)) {
                    Tensor& ga = tp.grad_buffer(a.id);
                    if (kind == Binary::kMul) {
                      const Tensor& bv2 = tp.value(b.id);
                      for (std::size_t i = 0; i < total; ++i) ga[i] += g[i] * bv2[i % inner];
                    } else {
                      for (std::size_t i = 0; i < total; ++i) ga[i] += g[i];
                    }
                  }
                  if (tp.requires_grad(b.id)) {
                    Tensor& gb = tp.grad_buffer(b.id);
                    if (kind == Binary::kMul) {
                      const Tensor& av2 = tp.value(a.id);
                      for (std::size_t i = 0; i < total; ++i) gb[i % inner] += g[i] * av2[i];
                    } else {
                      const float sign = kind == Binary::kSub ? -1.0f : 1.0f;
                      for (std::size_t i = 0; i < total; ++i) gb[i % inner] += sign * g[i];
                    }
                  }
                });
}

inline Var add(Var a, Var b) { return binary(Binary::kAdd, a, b); }
inline Var sub(Var a, Var b) { return binary(Binary::kSub, a, b); }
inline Var mul(Var a, Var b) { return binary(Binary::kMul, a, b); }

// ---------------------------------------------------------------------------
// Elementwise unary ops

enum class Unary { kSigmoid, kTanh, kRelu, kExp, kLog };

inline float apply_unary(Unary kind, float x) {
  switch (kind) {
    case Unary::kSigmoid: return 1.0f / (1.0f + std::exp(-x));
    case Unary::kTanh: return std::tanh(x);
    case Unary::kRelu: return x > 0.0f ? x : 0.0f;
    case Unary::kExp: return std::exp(x);
    case Unary::kLog: return std::log(x);
  }
  return x;
}

inline Var unary(Unary kind, Var a) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = apply_unary(kind, av[i]);
  const std::size_t out_id = t.size();
  return t.push(std::move(out), detail::any_grad({a}), [kind, a, out_id](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(a.id);
    const Tensor& y = tp.value(out_id);
    Tensor& ga = tp.grad_buffer(a.id);
    for (std::size_t i = 0; i < x.size(); ++i) {
      float d = 0.0f;
      switch (kind) {
        case Unary::kSigmoid: d = y[i] * (1.0f - y[i]); break;
        case Unary::kTanh: d = 1.0f - y[i] * y[i]; break;
        case Unary::kRelu: d = x[i] > 0.0f ? 1.0f : 0.0f; break;
        case Unary::kExp: d = y[i]; break;
        case Unary::kLog: d = 1.0f / x[i]; break;
      }
      ga[i] += g[i] * d;
    }
  });
}

inline Var sigmoid(Var a) { return unary(Unary::kSigmoid, a); }
inline Var tanh(Var a) { return unary(Unary::kTanh, a); }
inline Var relu(Var a) { return unary(Unary::kRelu, a); }
inline Var exp(Var a) { return unary(Unary::kExp, a); }
inline Var log(Var a) { return unary(Unary::kLog, a); }

/// Multiplies by a compile-time-free constant.
inline Var scale(Var a, float factor) {
  Tape& t = *a.tape;
  Tensor out = a.value();
  for (float& x : out.data()) x *= factor;
  return t.push(std::move(out), detail::any_grad({a}), [a, factor](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

// ---------------------------------------------------------------------------
// Normalisation over the last axis

inline Var softmax(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  if (av.rank() == 0 || av.shape().back() == 0) throw ShapeError("softmax over empty axis");
  const std::size_t n = av.shape().back(), rows = av.size() / n;
  Tensor out(av.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const float* x = av.data().data() + r * n;
    float* y = out.data().data() + r * n;
    const float mx = *std::max_element(x, x + n);
    float sum = 0.0f;
    for (std::size_t j = 0; j < n; ++j) sum += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < n; ++j) y[j] /= sum;
  }
  const std::size_t out_id = t.size();
  return t.push(std::move(out), detail::any_grad({a}), [a, out_id, n, rows](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(out_id);
    Tensor& ga = tp.grad_buffer(a.id);
    for (std::size_t r = 0; r < rows; ++r) {
      float dot = 0.0f;
      for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * y[r * n + j];
      for (std::size_t j = 0; j < n; ++j) ga[r * n + j] += y[r * n + j] * (g[r * n + j] - dot);
    }
  });
}

inline Var log_softmax(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  if (av.rank() == 0 || av.shape().back() == 0) throw ShapeError("log_softmax over empty axis");
  const std::size_t n = av.shape().back(), rows = av.size() / n;
  Tensor out(av.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const float* x = av.data().data() + r * n;
    float* y = out.data().data() + r * n;
    const float mx = *std::max_element(x, x + n);
    float sum = 0.0f;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(x[j] - mx);
    const float lse = mx + std::log(sum);
    for (std::size_t j = 0; j < n; ++j) y[j] = x[j] - lse;
  }
  const std::size_t out_id = t.size();
  return t.push(std::move(out), detail::any_grad({a}), [a, out_id, n, rows](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(out_id);
    Tensor& ga = tp.grad_buffer(a.id);
    for (std::size_t r = 0; r < rows; ++r) {
      float gsum = 0.0f;
      for (std::size_t j = 0; j < n; ++j) gsum += g[r * n + j];
      for (std::size_t j = 0; j < n; ++j)
        ga[r * n + j] += g[r * n + j] - std::exp(y[r * n + j]) * gsum;
    }
  });
}

// ---------------------------------------------------------------------------
// Convolution and pooling

inline Var conv2d(Var input, Var kernels, Var bias, std::size_t stride = 1,
                  kernels::Padding padding = kernels::Padding::kSame) {
  Tape& t = detail::same_tape(input, kernels);
  const Tensor& iv = input.value();
  const Tensor& kv = kernels.value();
  const kernels::ConvGeometry g = kernels::conv_geometry(iv.shape(), kv.shape(), stride, padding);
  const bool has_bias = bias.tape != nullptr;
  if (has_bias && bias.value().size() != g.c_out)
    throw ShapeError("conv2d bias " + shape_str(bias.shape()) + " does not match " +
                     std::to_string(g.c_out) + " output channels");
  Tensor out({g.c_out, g.h_out, g.w_out});
  kernels::conv2d_forward(g, iv.data().data(), kv.data().data(),
                          has_bias ? bias.value().data().data() : nullptr, out.data().data());
  const bool rg = detail::any_grad({input, kernels}) || (has_bias && detail::any_grad({bias}));
  return t.push(std::move(out), rg, [g, input, kernels, bias, has_bias](Tape& tp, const Tensor& gr) {
    float* din = tp.requires_grad(input.id) ? tp.grad_buffer(input.id).data().data() : nullptr;
    float* dk = tp.requires_grad(kernels.id) ? tp.grad_buffer(kernels.id).data().data() : nullptr;
    float* db = has_bias && tp.requires_grad(bias.id) ? tp.grad_buffer(bias.id).data().data()
                                                      : nullptr;
    kernels::conv2d_backward(g, tp.value(input.id).data().data(),
                             tp.value(kernels.id).data().data(), gr.data().data(), din, dk, db);
  });
}

inline Var conv2d(Var input, Var kernels, std::size_t stride = 1,
                  kernels::Padding padding = kernels::Padding::kSame) {
  return conv2d(input, kernels, Var{}, stride, padding);
}

inline Var maxpool2d(Var input) {
  Tape& t = *input.tape;
  const Tensor& iv = input.value();
  if (iv.rank() != 3) throw ShapeError("maxpool2d expects CxHxW, got " + shape_str(iv.shape()));
  const std::size_t c = iv.dim(0), h = iv.dim(1), w = iv.dim(2);
  if (h < 2 || w < 2) throw ShapeError("maxpool2d: input " + shape_str(iv.shape()) +
                                       " smaller than the 2x2 window");
  Tensor out({c, h / 2, w / 2});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  kernels::maxpool2x2_forward(c, h, w, iv.data().data(), out.data().data(), argmax->data());
  return t.push(std::move(out), detail::any_grad({input}), [input, argmax](Tape& tp, const Tensor& g) {
    Tensor& gi = tp.grad_buffer(input.id);
    for (std::size_t o = 0; o < g.size(); ++o) gi[(*argmax)[o]] += g[o];
  });
}

// ---------------------------------------------------------------------------
// Structural ops

inline Var reshape(Var a, Shape shape) {
  Tape& t = *a.tape;
  Tensor out = a.value().reshaped(std::move(shape));
  return t.push(std::move(out), detail::any_grad({a}), [a](Tape& tp, const Tensor& g) {
    detail::accumulate(tp, a, g.data());
  });
}

/// Rows [begin, end) of a matrix.
inline Var rows(Var a, std::size_t begin, std::size_t end) {
  Tape& t = *a.tape;
  Tensor out = a.value().rows(begin, end);
  const std::size_t cols = a.shape()[1];
  return t.push(std::move(out), detail::any_grad({a}), [a, begin, cols](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[begin * cols + i] += g[i];
  });
}

/// Columns [begin, end) of a matrix.
inline Var cols(Var a, std::size_t begin, std::size_t end) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  if (av.rank() != 2 || begin > end || end > av.dim(1))
    throw ShapeError("column range invalid for " + shape_str(av.shape()));
  const std::size_t m = av.dim(0), n = av.dim(1), w = end - begin;
  Tensor out({m, w});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < w; ++j) out[r * w + j] = av[r * n + begin + j];
  return t.push(std::move(out), detail::any_grad({a}), [a, begin, m, n, w](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a.id);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < w; ++j) ga[r * n + begin + j] += g[r * w + j];
  });
}

/// Concatenates matrices with equal row counts along the column axis.
inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  Tape& t = *parts.front().tape;
  const std::size_t m = parts.front().shape().at(0);
  std::size_t n = 0;
  bool rg = false;
  for (Var p : parts) {
    if (p.tape != &t) throw ContractError("operands live on different tapes");
    if (p.value().rank() != 2 || p.shape()[0] != m)
      throw ShapeError("concat_cols: row mismatch at " + shape_str(p.shape()));
    n += p.shape()[1];
    rg = rg || t.requires_grad(p.id);
  }
  Tensor out({m, n});
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& pv = p.value();
    const std::size_t w = pv.dim(1);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < w; ++j) out[r * n + off + j] = pv[r * w + j];
    off += w;
  }
  return t.push(std::move(out), rg, [parts, m, n](Tape& tp, const Tensor& g) {
    std::size_t off2 = 0;
    for (Var p : parts) {
      const std::size_t w = tp.value(p.id).dim(1);
      if (tp.requires_grad(p.id)) {
        Tensor& gp = tp.grad_buffer(p.id);
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t j = 0; j < w; ++j) gp[r * w + j] += g[r * n + off2 + j];
      }
      off2 += w;
    }
  });
}

/// Stacks matrices with equal column counts along the row axis.
inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  Tape& t = *parts.front().tape;
  const std::size_t n = parts.front().shape().at(1);
  std::size_t m = 0;
  bool rg = false;
  for (Var p : parts) {
    if (p.tape != &t) throw ContractError("operands live on different tapes");
    if (p.value().rank() != 2 || p.shape()[1] != n)
      throw ShapeError("concat_rows: column mismatch at " + shape_str(p.shape()));
    m += p.shape()[0];
    rg = rg || t.requires_grad(p.id);
  }
  std::vector<float> data;
  data.reserve(m * n);
  for (Var p : parts) data.insert(data.end(), p.value().storage().begin(), p.value().storage().end());
  return t.push(Tensor({m, n}, std::move(data)), rg, [parts](Tape& tp, const Tensor& g) {
    std::size_t off = 0;
    for (Var p : parts) {
      const std::size_t sz = tp.value(p.id).size();
      detail::accumulate(tp, p, g.data().subspan(off, sz));
      off += sz;
    }
  });
}

/// Scalar element at flat index.
inline Var pick(Var a, std::size_t index) {
  Tape& t = *a.tape;
  if (index >= a.value().size())
    throw ShapeError("pick index " + std::to_string(index) + " outside " + shape_str(a.shape()));
  return t.push(Tensor::scalar(a.value()[index]), detail::any_grad({a}),
                [a, index](Tape& tp, const Tensor& g) { tp.grad_buffer(a.id)[index] += g[0]; });
}

inline Var sum(Var a) {
  Tape& t = *a.tape;
  float s = 0.0f;
  for (float x : a.value().data()) s += x;
  return t.push(Tensor::scalar(s), detail::any_grad({a}), [a](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
  });
}

/// Sum of scalars, accumulated left to right.
inline Var add_n(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw ContractError("add_n of nothing");
  Tape& t = *scalars.front().tape;
  float s = 0.0f;
  bool rg = false;
  for (Var v : scalars) {
    s += v.value().item();
    rg = rg || t.requires_grad(v.id);
  }
  return t.push(Tensor::scalar(s), rg, [scalars](Tape& tp, const Tensor& g) {
    for (Var v : scalars)
      if (tp.requires_grad(v.id)) tp.grad_buffer(v.id)[0] += g[0];
  });
}

/// C×H×W feature map to H×(C·W): one row per time step, channels outermost.
inline Var time_major(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  if (av.rank() != 3) throw ShapeError("time_major expects CxHxW, got " + shape_str(av.shape()));
  const std::size_t c = av.dim(0), h = av.dim(1), w = av.dim(2);
  Tensor out({h, c * w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out[y * c * w + ch * w + x] = av[(ch * h + y) * w + x];
  return t.push(std::move(out), detail::any_grad({a}), [a, c, h, w](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a.id);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) ga[(ch * h + y) * w + x] += g[y * c * w + ch * w + x];
  });
}

}  // namespace simulst::ad
