// clsw/tensor.cc

// Copyright 2026  CLSW authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "clsw/tensor.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace clsw {

namespace {

constexpr float kLogFloor = 1e-30f;

// (outer, n, inner) decomposition for an axis-wise op.
struct AxisSplit {
  int64_t outer, n, inner;
};

AxisSplit SplitAt(const Shape& shape, int axis) {
  AxisSplit s{1, shape[axis], 1};
  for (int i = 0; i < axis; ++i) s.outer *= shape[i];
  for (size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

int NormalizeAxis(int axis, int rank, const char* op) {
  int a = axis < 0 ? axis + rank : axis;
  CLSW_CHECK(a >= 0 && a < rank, op, ": axis ", axis, " out of range for rank ", rank);
  return a;
}

}  // namespace

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string ShapeStr(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void CheckShape(bool cond, const char* op, const std::vector<Shape>& shapes,
                const std::string& detail) {
  if (cond) return;
  std::string msg = StrCat(op, ": ", detail, "; shapes:");
  for (const Shape& s : shapes) msg += " " + ShapeStr(s);
  throw Error(msg);
}

bool HasNonFinite(std::span<const float> v) {
  for (float x : v) {
    if (!std::isfinite(x)) return true;
  }
  return false;
}

// ---- Tensor ----------------------------------------------------------------

Tensor::Tensor(Shape shape, std::vector<float> values) : shape_(std::move(shape)) {
  CLSW_CHECK(NumElements(shape_) == static_cast<int64_t>(values.size()),
             "Tensor: data length ", values.size(), " does not match shape ",
             ShapeStr(shape_));
  data_ = std::make_shared<std::vector<float>>(std::move(values));
}

Tensor Tensor::Zeros(Shape shape) {
  std::vector<float> v(NumElements(shape), 0.0f);
  return Tensor(std::move(shape), std::move(v));
}

Tensor Tensor::Full(Shape shape, float value) {
  std::vector<float> v(NumElements(shape), value);
  return Tensor(std::move(shape), std::move(v));
}

Tensor Tensor::Scalar(float value) { return Tensor({1}, {value}); }

Tensor Tensor::FromVec(std::vector<float> values) {
  Shape s{static_cast<int64_t>(values.size())};
  return Tensor(std::move(s), std::move(values));
}

int64_t Tensor::Dim(int axis) const {
  CLSW_CHECK(axis >= 0 && axis < Rank(), "Tensor::Dim: axis ", axis, " out of range");
  return shape_[axis];
}

float Tensor::At(std::initializer_list<int64_t> idx) const {
  CLSW_CHECK(static_cast<int>(idx.size()) == Rank(), "Tensor::At: rank mismatch");
  int64_t flat = 0;
  int i = 0;
  for (int64_t v : idx) {
    CLSW_CHECK(v >= 0 && v < shape_[i], "Tensor::At: index out of range");
    flat = flat * shape_[i] + v;
    ++i;
  }
  return (*data_)[flat];
}

float Tensor::Item() const {
  CLSW_CHECK(NumEl() == 1, "Tensor::Item: tensor has ", NumEl(), " elements");
  return (*data_)[0];
}

Tensor Tensor::Detached() const {
  Tensor t;
  t.data_ = data_;
  t.shape_ = shape_;
  return t;
}

// ---- Graph -----------------------------------------------------------------

Tensor Graph::Leaf(const Tensor& value, std::vector<float>* grad_sink) {
  CLSW_CHECK(value.Defined(), "Graph::Leaf: undefined tensor");
  CLSW_CHECK(grad_sink != nullptr &&
                 static_cast<int64_t>(grad_sink->size()) == value.NumEl(),
             "Graph::Leaf: grad sink size mismatch for shape ", ShapeStr(value.Dims()));
  Node node;
  node.numel = value.NumEl();
  nodes_.push_back(std::move(node));
  int id = static_cast<int>(nodes_.size()) - 1;
  sinks_.emplace_back(id, grad_sink);

  Tensor out;
  out.data_ = value.data_;
  out.shape_ = value.shape_;
  out.graph_ = this;
  out.node_ = id;
  return out;
}

Tensor Graph::MakeNode(const char* op_name, Shape out_shape, std::vector<float> out_values,
                       const std::vector<const Tensor*>& inputs, BackFn back) {
  if (check_numerics_ && HasNonFinite(out_values)) {
    throw NumericError(StrCat(op_name, ": non-finite value in output of shape ",
                              ShapeStr(out_shape)));
  }
  Node node;
  node.numel = static_cast<int64_t>(out_values.size());
  node.parents.reserve(inputs.size());
  for (const Tensor* in : inputs) {
    if (in->OnTape()) {
      CLSW_CHECK(in->GetGraph() == this, op_name, ": inputs belong to different tapes");
      node.parents.push_back(in->NodeId());
    } else {
      node.parents.push_back(-1);
    }
  }
  node.back = std::move(back);
  nodes_.push_back(std::move(node));

  Tensor out(std::move(out_shape), std::move(out_values));
  out.graph_ = this;
  out.node_ = static_cast<int>(nodes_.size()) - 1;
  return out;
}

void Graph::Backward(const Tensor& loss) {
  CLSW_CHECK(!consumed_, "Graph::Backward: tape already consumed");
  CLSW_CHECK(loss.OnTape() && loss.GetGraph() == this,
             "Graph::Backward: loss is not on this tape");
  CLSW_CHECK(loss.NumEl() == 1, "Graph::Backward: loss must be scalar, shape is ",
             ShapeStr(loss.Dims()));
  consumed_ = true;

  const int n = static_cast<int>(nodes_.size());
  grads_.assign(n, {});
  std::vector<char> needed(n, 0);
  needed[loss.NodeId()] = 1;
  grads_[loss.NodeId()].assign(1, 1.0f);

  for (int i = loss.NodeId(); i >= 0; --i) {
    if (!needed[i]) continue;
    const Node& node = nodes_[i];
    if (!node.back) continue;  // leaf or gradient barrier
    std::vector<std::vector<float>*> parent_grads(node.parents.size(), nullptr);
    for (size_t p = 0; p < node.parents.size(); ++p) {
      int pid = node.parents[p];
      if (pid < 0) continue;
      if (!needed[pid]) {
        needed[pid] = 1;
        grads_[pid].assign(nodes_[pid].numel, 0.0f);
      }
      parent_grads[p] = &grads_[pid];
    }
    node.back(grads_[i], parent_grads);
  }

  for (auto& [id, sink] : sinks_) {
    if (grads_[id].empty()) continue;
    for (size_t k = 0; k < grads_[id].size(); ++k) (*sink)[k] += grads_[id][k];
  }
}

std::vector<float> Graph::GradOf(const Tensor& t) const {
  CLSW_CHECK(t.OnTape() && t.GetGraph() == this, "Graph::GradOf: tensor not on this tape");
  CLSW_CHECK(consumed_, "Graph::GradOf: Backward has not run");
  if (grads_[t.NodeId()].empty()) return std::vector<float>(t.NumEl(), 0.0f);
  return grads_[t.NodeId()];
}

// ---- Op helpers ------------------------------------------------------------

namespace {

Graph* GraphOf(const std::vector<const Tensor*>& inputs, const char* op) {
  Graph* g = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->OnTape()) continue;
    if (g == nullptr) g = t->GetGraph();
    CLSW_CHECK(g == t->GetGraph(), op, ": inputs belong to different tapes");
  }
  return g;
}

// Records a node when any input is on a tape; otherwise returns a constant.
Tensor Emit(const char* op, Shape out_shape, std::vector<float> out_values,
            const std::vector<const Tensor*>& inputs, BackFn back) {
  Graph* g = GraphOf(inputs, op);
  if (g == nullptr) return Tensor(std::move(out_shape), std::move(out_values));
  return g->MakeNode(op, std::move(out_shape), std::move(out_values), inputs, std::move(back));
}

void AxpyInto(std::vector<float>* dst, std::span<const float> src, float alpha = 1.0f) {
  for (size_t i = 0; i < src.size(); ++i) (*dst)[i] += alpha * src[i];
}

}  // namespace

// ---- Primitives ------------------------------------------------------------

Tensor Matmul(const Tensor& a, const Tensor& b) {
  CheckShape(a.Rank() == 2 && b.Rank() == 2 && a.Dim(1) == b.Dim(0), "matmul",
             {a.Dims(), b.Dims()}, "expected [m,k]x[k,n]");
  const int64_t m = a.Dim(0), k = a.Dim(1), n = b.Dim(1);
  std::vector<float> out(m * n, 0.0f);
  const float* pa = a.Data().data();
  const float* pb = b.Data().data();
  for (int64_t i = 0; i < m; ++i) {
    float* po = out.data() + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const float av = pa[i * k + p];
      if (av == 0.0f) continue;
      const float* pbrow = pb + p * n;
      for (int64_t j = 0; j < n; ++j) po[j] += av * pbrow[j];
    }
  }
  Tensor ta = a, tb = b;
  return Emit("matmul", {m, n}, std::move(out), {&a, &b},
              [ta, tb, m, k, n](std::span<const float> gout,
                                const std::vector<std::vector<float>*>& pg) {
                const float* pa = ta.Data().data();
                const float* pb = tb.Data().data();
                if (pg[0]) {  // ga = gout . b^T
                  std::vector<float>& ga = *pg[0];
                  for (int64_t i = 0; i < m; ++i)
                    for (int64_t p = 0; p < k; ++p) {
                      double acc = 0.0;
                      const float* go = gout.data() + i * n;
                      const float* pbrow = pb + p * n;
                      for (int64_t j = 0; j < n; ++j) acc += go[j] * pbrow[j];
                      ga[i * k + p] += static_cast<float>(acc);
                    }
                }
                if (pg[1]) {  // gb = a^T . gout
                  std::vector<float>& gb = *pg[1];
                  for (int64_t i = 0; i < m; ++i) {
                    const float* go = gout.data() + i * n;
                    for (int64_t p = 0; p < k; ++p) {
                      const float av = pa[i * k + p];
                      if (av == 0.0f) continue;
                      float* gbrow = gb.data() + p * n;
                      for (int64_t j = 0; j < n; ++j) gbrow[j] += av * go[j];
                    }
                  }
                }
              });
}

Tensor Conv1d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad) {
  CheckShape(x.Rank() == 2 && w.Rank() == 3 && x.Dim(1) == w.Dim(1), "conv1d",
             {x.Dims(), w.Dims()}, "expected x [t,c_in], w [c_out,c_in,k]");
  CLSW_CHECK(stride >= 1, "conv1d: stride must be >= 1, got ", stride);
  CLSW_CHECK(pad >= 0, "conv1d: pad must be >= 0, got ", pad);
  const int64_t t_in = x.Dim(0), c_in = x.Dim(1);
  const int64_t c_out = w.Dim(0), k = w.Dim(2);
  CheckShape(t_in + 2 * pad >= k, "conv1d", {x.Dims(), w.Dims()},
             StrCat("input too short: needs at least ", k - 2 * pad, " frames"));
  if (bias.Defined())
    CheckShape(bias.Rank() == 1 && bias.Dim(0) == c_out, "conv1d",
               {bias.Dims(), w.Dims()}, "bias must be [c_out]");
  const int64_t t_out = (t_in + 2 * pad - k) / stride + 1;

  std::vector<float> out(t_out * c_out, 0.0f);
  const float* px = x.Data().data();
  const float* pw = w.Data().data();
  for (int64_t t = 0; t < t_out; ++t) {
    float* po = out.data() + t * c_out;
    if (bias.Defined()) {
      const float* pbias = bias.Data().data();
      for (int64_t co = 0; co < c_out; ++co) po[co] = pbias[co];
    }
    for (int64_t j = 0; j < k; ++j) {
      const int64_t ti = t * stride - pad + j;
      if (ti < 0 || ti >= t_in) continue;
      const float* pxrow = px + ti * c_in;
      for (int64_t ci = 0; ci < c_in; ++ci) {
        const float xv = pxrow[ci];
        if (xv == 0.0f) continue;
        for (int64_t co = 0; co < c_out; ++co) po[co] += xv * pw[(co * c_in + ci) * k + j];
      }
    }
  }

  Tensor tx = x, tw = w;
  return Emit(
      "conv1d", {t_out, c_out}, std::move(out), {&x, &w, &bias},
      [tx, tw, stride, pad, t_in, c_in, c_out, k, t_out](
          std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
        const float* px = tx.Data().data();
        const float* pw = tw.Data().data();
        for (int64_t t = 0; t < t_out; ++t) {
          const float* go = gout.data() + t * c_out;
          for (int64_t j = 0; j < k; ++j) {
            const int64_t ti = t * stride - pad + j;
            if (ti < 0 || ti >= t_in) continue;
            for (int64_t ci = 0; ci < c_in; ++ci) {
              const float xv = px[ti * c_in + ci];
              double gx_acc = 0.0;
              for (int64_t co = 0; co < c_out; ++co) {
                const float g = go[co];
                if (g == 0.0f) continue;
                if (pg[1]) (*pg[1])[(co * c_in + ci) * k + j] += g * xv;
                gx_acc += static_cast<double>(g) * pw[(co * c_in + ci) * k + j];
              }
              if (pg[0]) (*pg[0])[ti * c_in + ci] += static_cast<float>(gx_acc);
            }
          }
          if (pg[2]) {
            for (int64_t co = 0; co < c_out; ++co) (*pg[2])[co] += go[co];
          }
        }
      });
}

namespace {

enum class BroadcastKind { kSame, kRow, kScalar };

BroadcastKind ClassifyBroadcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.Dims() == b.Dims()) return BroadcastKind::kSame;
  if (b.NumEl() == 1) return BroadcastKind::kScalar;
  if (b.Rank() == 1 && a.Rank() >= 1 && a.Dims().back() == b.Dim(0))
    return BroadcastKind::kRow;
  CheckShape(false, op, {a.Dims(), b.Dims()},
             "operands must be same-shape, row-broadcast, or scalar");
  return BroadcastKind::kSame;  // unreachable
}

Tensor AddLike(const Tensor& a, const Tensor& b, float sign, const char* op) {
  BroadcastKind kind = ClassifyBroadcast(a, b, op);
  std::vector<float> out(a.Data().begin(), a.Data().end());
  const float* pb = b.Data().data();
  const int64_t n = a.NumEl();
  switch (kind) {
    case BroadcastKind::kSame:
      for (int64_t i = 0; i < n; ++i) out[i] += sign * pb[i];
      break;
    case BroadcastKind::kScalar:
      for (int64_t i = 0; i < n; ++i) out[i] += sign * pb[0];
      break;
    case BroadcastKind::kRow: {
      const int64_t d = b.Dim(0);
      for (int64_t i = 0; i < n; ++i) out[i] += sign * pb[i % d];
      break;
    }
  }
  const int64_t d = (kind == BroadcastKind::kRow) ? b.Dim(0) : 0;
  return Emit(op, a.Dims(), std::move(out), {&a, &b},
              [kind, sign, n, d](std::span<const float> gout,
                                 const std::vector<std::vector<float>*>& pg) {
                if (pg[0]) AxpyInto(pg[0], gout);
                if (!pg[1]) return;
                switch (kind) {
                  case BroadcastKind::kSame:
                    AxpyInto(pg[1], gout, sign);
                    break;
                  case BroadcastKind::kScalar: {
                    double acc = 0.0;
                    for (float g : gout) acc += g;
                    (*pg[1])[0] += sign * static_cast<float>(acc);
                    break;
                  }
                  case BroadcastKind::kRow:
                    for (int64_t i = 0; i < n; ++i) (*pg[1])[i % d] += sign * gout[i];
                    break;
                }
              });
}

}  // namespace

Tensor Add(const Tensor& a, const Tensor& b) { return AddLike(a, b, 1.0f, "add"); }
Tensor Sub(const Tensor& a, const Tensor& b) { return AddLike(a, b, -1.0f, "sub"); }

Tensor Mul(const Tensor& a, const Tensor& b) {
  BroadcastKind kind = ClassifyBroadcast(a, b, "mul");
  CheckShape(kind != BroadcastKind::kRow, "mul", {a.Dims(), b.Dims()},
             "mul supports same-shape or scalar operands");
  const int64_t n = a.NumEl();
  std::vector<float> out(n);
  const float* pa = a.Data().data();
  const float* pb = b.Data().data();
  if (kind == BroadcastKind::kSame) {
    for (int64_t i = 0; i < n; ++i) out[i] = pa[i] * pb[i];
  } else {
    for (int64_t i = 0; i < n; ++i) out[i] = pa[i] * pb[0];
  }
  Tensor ta = a, tb = b;
  return Emit("mul", a.Dims(), std::move(out), {&a, &b},
              [ta, tb, kind, n](std::span<const float> gout,
                                const std::vector<std::vector<float>*>& pg) {
                const float* pa = ta.Data().data();
                const float* pb = tb.Data().data();
                if (kind == BroadcastKind::kSame) {
                  if (pg[0])
                    for (int64_t i = 0; i < n; ++i) (*pg[0])[i] += gout[i] * pb[i];
                  if (pg[1])
                    for (int64_t i = 0; i < n; ++i) (*pg[1])[i] += gout[i] * pa[i];
                } else {
                  if (pg[0])
                    for (int64_t i = 0; i < n; ++i) (*pg[0])[i] += gout[i] * pb[0];
                  if (pg[1]) {
                    double acc = 0.0;
                    for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(gout[i]) * pa[i];
                    (*pg[1])[0] += static_cast<float>(acc);
                  }
                }
              });
}

Tensor Scale(const Tensor& a, float s) {
  const int64_t n = a.NumEl();
  std::vector<float> out(n);
  const float* pa = a.Data().data();
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] * s;
  return Emit("scale", a.Dims(), std::move(out), {&a},
              [s](std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
                if (pg[0]) AxpyInto(pg[0], gout, s);
              });
}

Tensor AddScalar(const Tensor& a, float s) {
  const int64_t n = a.NumEl();
  std::vector<float> out(n);
  const float* pa = a.Data().data();
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] + s;
  return Emit("add_scalar", a.Dims(), std::move(out), {&a},
              [](std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
                if (pg[0]) AxpyInto(pg[0], gout);
              });
}

Tensor Transpose(const Tensor& a) {
  CheckShape(a.Rank() == 2, "transpose", {a.Dims()}, "expected rank-2 tensor");
  const int64_t m = a.Dim(0), n = a.Dim(1);
  std::vector<float> out(m * n);
  const float* pa = a.Data().data();
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out[j * m + i] = pa[i * n + j];
  return Emit("transpose", {n, m}, std::move(out), {&a},
              [m, n](std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
                if (!pg[0]) return;
                for (int64_t j = 0; j < n; ++j)
                  for (int64_t i = 0; i < m; ++i) (*pg[0])[i * n + j] += gout[j * m + i];
              });
}

Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
  CheckShape(x.Rank() >= 1, "layer_norm", {x.Dims()}, "expected rank >= 1");
  const int64_t d = x.Dims().back();
  CheckShape(gain.Rank() == 1 && gain.Dim(0) == d && bias.Rank() == 1 && bias.Dim(0) == d,
             "layer_norm", {x.Dims(), gain.Dims(), bias.Dims()},
             "gain/bias must match the last axis");
  const int64_t rows = x.NumEl() / d;
  std::vector<float> out(x.NumEl());
  auto xhat = std::make_shared<std::vector<float>>(x.NumEl());
  auto inv_std = std::make_shared<std::vector<float>>(rows);
  const float* px = x.Data().data();
  const float* pgain = gain.Data().data();
  const float* pbias = bias.Data().data();
  for (int64_t r = 0; r < rows; ++r) {
    const float* row = px + r * d;
    double mean = 0.0;
    for (int64_t i = 0; i < d; ++i) mean += row[i];
    mean /= d;
    double var = 0.0;
    for (int64_t i = 0; i < d; ++i) var += (row[i] - mean) * (row[i] - mean);
    var /= d;
    const float istd = static_cast<float>(1.0 / std::sqrt(var + eps));
    (*inv_std)[r] = istd;
    for (int64_t i = 0; i < d; ++i) {
      const float xh = (row[i] - static_cast<float>(mean)) * istd;
      (*xhat)[r * d + i] = xh;
      out[r * d + i] = pgain[i] * xh + pbias[i];
    }
  }
  Tensor tg = gain;
  return Emit("layer_norm", x.Dims(), std::move(out), {&x, &gain, &bias},
              [xhat, inv_std, tg, rows, d](std::span<const float> gout,
                                           const std::vector<std::vector<float>*>& pg) {
                const float* pgain = tg.Data().data();
                for (int64_t r = 0; r < rows; ++r) {
                  const float* go = gout.data() + r * d;
                  const float* xh = xhat->data() + r * d;
                  if (pg[1] || pg[2]) {
                    for (int64_t i = 0; i < d; ++i) {
                      if (pg[1]) (*pg[1])[i] += go[i] * xh[i];
                      if (pg[2]) (*pg[2])[i] += go[i];
                    }
                  }
                  if (!pg[0]) continue;
                  double mean_h = 0.0, mean_hx = 0.0;
                  for (int64_t i = 0; i < d; ++i) {
                    const double h = static_cast<double>(go[i]) * pgain[i];
                    mean_h += h;
                    mean_hx += h * xh[i];
                  }
                  mean_h /= d;
                  mean_hx /= d;
                  const float istd = (*inv_std)[r];
                  for (int64_t i = 0; i < d; ++i) {
                    const double h = static_cast<double>(go[i]) * pgain[i];
                    (*pg[0])[r * d + i] +=
                        static_cast<float>(istd * (h - mean_h - xh[i] * mean_hx));
                  }
                }
              });
}

Tensor GroupNorm(const Tensor& x, int num_groups, const Tensor& gain, const Tensor& bias,
                 float eps) {
  CheckShape(x.Rank() == 2, "group_norm", {x.Dims()}, "expected [t, c]");
  const int64_t t = x.Dim(0), c = x.Dim(1);
  CLSW_CHECK(num_groups >= 1 && c % num_groups == 0,
             "group_norm: channels ", c, " not divisible by groups ", num_groups);
  CheckShape(gain.Rank() == 1 && gain.Dim(0) == c && bias.Rank() == 1 && bias.Dim(0) == c,
             "group_norm", {x.Dims(), gain.Dims(), bias.Dims()},
             "gain/bias must be [c]");
  const int64_t gsize = c / num_groups;
  const int64_t n_per_group = t * gsize;
  std::vector<float> out(x.NumEl());
  auto xhat = std::make_shared<std::vector<float>>(x.NumEl());
  auto inv_std = std::make_shared<std::vector<float>>(num_groups);
  const float* px = x.Data().data();
  const float* pgain = gain.Data().data();
  const float* pbias = bias.Data().data();
  for (int g = 0; g < num_groups; ++g) {
    double mean = 0.0;
    for (int64_t r = 0; r < t; ++r)
      for (int64_t j = 0; j < gsize; ++j) mean += px[r * c + g * gsize + j];
    mean /= n_per_group;
    double var = 0.0;
    for (int64_t r = 0; r < t; ++r)
      for (int64_t j = 0; j < gsize; ++j) {
        const double dlt = px[r * c + g * gsize + j] - mean;
        var += dlt * dlt;
      }
    var /= n_per_group;
    const float istd = static_cast<float>(1.0 / std::sqrt(var + eps));
    (*inv_std)[g] = istd;
    for (int64_t r = 0; r < t; ++r)
      for (int64_t j = 0; j < gsize; ++j) {
        const int64_t idx = r * c + g * gsize + j;
        const float xh = (px[idx] - static_cast<float>(mean)) * istd;
        (*xhat)[idx] = xh;
        out[idx] = pgain[g * gsize + j] * xh + pbias[g * gsize + j];
      }
  }
  Tensor tg = gain;
  return Emit(
      "group_norm", x.Dims(), std::move(out), {&x, &gain, &bias},
      [xhat, inv_std, tg, t, c, gsize, num_groups, n_per_group](
          std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
        const float* pgain = tg.Data().data();
        for (int g = 0; g < num_groups; ++g) {
          double mean_h = 0.0, mean_hx = 0.0;
          for (int64_t r = 0; r < t; ++r)
            for (int64_t j = 0; j < gsize; ++j) {
              const int64_t idx = r * c + g * gsize + j;
              const double h = static_cast<double>(gout[idx]) * pgain[g * gsize + j];
              mean_h += h;
              mean_hx += h * (*xhat)[idx];
              if (pg[1]) (*pg[1])[g * gsize + j] += gout[idx] * (*xhat)[idx];
              if (pg[2]) (*pg[2])[g * gsize + j] += gout[idx];
            }
          if (!pg[0]) continue;
          mean_h /= n_per_group;
          mean_hx /= n_per_group;
          const float istd = (*inv_std)[g];
          for (int64_t r = 0; r < t; ++r)
            for (int64_t j = 0; j < gsize; ++j) {
              const int64_t idx = r * c + g * gsize + j;
              const double h = static_cast<double>(gout[idx]) * pgain[g * gsize + j];
              (*pg[0])[idx] +=
                  static_cast<float>(istd * (h - mean_h - (*xhat)[idx] * mean_hx));
            }
        }
      });
}

Tensor Gelu(const Tensor& x) {
  constexpr float kC = 0.7978845608028654f;  // sqrt(2/pi)
  constexpr float kA = 0.044715f;
  const int64_t n = x.NumEl();
  std::vector<float> out(n);
  const float* px = x.Data().data();
  for (int64_t i = 0; i < n; ++i) {
    const float v = px[i];
    out[i] = 0.5f * v * (1.0f + std::tanh(kC * (v + kA * v * v * v)));
  }
  Tensor tx = x;
  return Emit("gelu", x.Dims(), std::move(out), {&x},
              [tx, n](std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
                if (!pg[0]) return;
                const float* px = tx.Data().data();
                for (int64_t i = 0; i < n; ++i) {
                  const float v = px[i];
                  const float u = kC * (v + kA * v * v * v);
                  const float th = std::tanh(u);
                  const float du = kC * (1.0f + 3.0f * kA * v * v);
                  const float d = 0.5f * (1.0f + th) + 0.5f * v * (1.0f - th * th) * du;
                  (*pg[0])[i] += gout[i] * d;
                }
              });
}

namespace {

// Shared softmax/log_softmax kernel along `axis`.
Tensor SoftmaxImpl(const Tensor& x, int axis, bool log_mode) {
  const char* op = log_mode ? "log_softmax" : "softmax";
  const int a = NormalizeAxis(axis, x.Rank(), op);
  const AxisSplit sp = SplitAt(x.Dims(), a);
  std::vector<float> out(x.NumEl());
  const float* px = x.Data().data();
  for (int64_t o = 0; o < sp.outer; ++o) {
    for (int64_t in = 0; in < sp.inner; ++in) {
      const int64_t base = o * sp.n * sp.inner + in;
      float mx = -std::numeric_limits<float>::infinity();
      for (int64_t i = 0; i < sp.n; ++i) mx = std::max(mx, px[base + i * sp.inner]);
      double denom = 0.0;
      for (int64_t i = 0; i < sp.n; ++i) denom += std::exp(static_cast<double>(px[base + i * sp.inner] - mx));
      if (log_mode) {
        const double log_denom = std::log(denom);
        for (int64_t i = 0; i < sp.n; ++i)
          out[base + i * sp.inner] =
              static_cast<float>(px[base + i * sp.inner] - mx - log_denom);
      } else {
        for (int64_t i = 0; i < sp.n; ++i)
          out[base + i * sp.inner] =
              static_cast<float>(std::exp(static_cast<double>(px[base + i * sp.inner] - mx)) / denom);
      }
    }
  }
  auto saved = std::make_shared<std::vector<float>>(out);
  return Emit(op, x.Dims(), std::move(out), {&x},
              [saved, sp, log_mode](std::span<const float> gout,
                                    const std::vector<std::vector<float>*>& pg) {
                if (!pg[0]) return;
                for (int64_t o = 0; o < sp.outer; ++o) {
                  for (int64_t in = 0; in < sp.inner; ++in) {
                    const int64_t base = o * sp.n * sp.inner + in;
                    double dot = 0.0;
                    for (int64_t i = 0; i < sp.n; ++i) {
                      const int64_t idx = base + i * sp.inner;
                      dot += static_cast<double>(gout[idx]) *
                             (log_mode ? 1.0 : (*saved)[idx]);
                    }
                    for (int64_t i = 0; i < sp.n; ++i) {
                      const int64_t idx = base + i * sp.inner;
                      const float y = (*saved)[idx];
                      if (log_mode) {
                        (*pg[0])[idx] += gout[idx] - std::exp(y) * static_cast<float>(dot);
                      } else {
                        (*pg[0])[idx] += y * (gout[idx] - static_cast<float>(dot));
                      }
                    }
                  }
                }
              });
}

}  // namespace

Tensor Softmax(const Tensor& x, int axis) { return SoftmaxImpl(x, axis, false); }
Tensor LogSoftmax(const Tensor& x, int axis) { return SoftmaxImpl(x, axis, true); }

Tensor Dropout(const Tensor& x, float p, bool train, Rng* rng) {
  CLSW_CHECK(p >= 0.0f && p < 1.0f, "dropout: p must be in [0,1), got ", p);
  if (!train || p == 0.0f) return x;
  CLSW_CHECK(rng != nullptr, "dropout: rng required in training mode");
  const int64_t n = x.NumEl();
  const float scale = 1.0f / (1.0f - p);
  auto mask = std::make_shared<std::vector<float>>(n);
  std::vector<float> out(n);
  const float* px = x.Data().data();
  for (int64_t i = 0; i < n; ++i) {
    const float m = (rng->Uniform() >= p) ? scale : 0.0f;
    (*mask)[i] = m;
    out[i] = px[i] * m;
  }
  return Emit("dropout", x.Dims(), std::move(out), {&x},
              [mask, n](std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
                if (!pg[0]) return;
                for (int64_t i = 0; i < n; ++i) (*pg[0])[i] += gout[i] * (*mask)[i];
              });
}

Tensor EmbeddingLookup(const Tensor& table, const std::vector<int64_t>& ids) {
  CheckShape(table.Rank() == 2, "embedding_lookup", {table.Dims()}, "table must be rank 2");
  const int64_t v = table.Dim(0), d = table.Dim(1);
  const int64_t n = static_cast<int64_t>(ids.size());
  for (int64_t id : ids)
    CLSW_CHECK(id >= 0 && id < v, "embedding_lookup: id ", id, " out of range [0,", v, ")");
  std::vector<float> out(n * d);
  const float* pt = table.Data().data();
  for (int64_t i = 0; i < n; ++i)
    std::memcpy(out.data() + i * d, pt + ids[i] * d, d * sizeof(float));
  auto saved_ids = std::make_shared<std::vector<int64_t>>(ids);
  return Emit("embedding_lookup", {n, d}, std::move(out), {&table},
              [saved_ids, d](std::span<const float> gout,
                             const std::vector<std::vector<float>*>& pg) {
                if (!pg[0]) return;
                for (size_t i = 0; i < saved_ids->size(); ++i) {
                  const int64_t row = (*saved_ids)[i];
                  for (int64_t j = 0; j < d; ++j)
                    (*pg[0])[row * d + j] += gout[i * d + j];
                }
              });
}

Tensor CosineSimilarity(const Tensor& a, const Tensor& b, float eps) {
  CheckShape(a.Rank() == 2 && a.Dims() == b.Dims(), "cosine_similarity",
             {a.Dims(), b.Dims()}, "expected two equal [n,d] tensors");
  const int64_t n = a.Dim(0), d = a.Dim(1);
  std::vector<float> out(n);
  auto norms_a = std::make_shared<std::vector<float>>(n);
  auto norms_b = std::make_shared<std::vector<float>>(n);
  const float* pa = a.Data().data();
  const float* pb = b.Data().data();
  bool flagged = false;
  for (int64_t i = 0; i < n; ++i) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      dot += static_cast<double>(pa[i * d + j]) * pb[i * d + j];
      na += static_cast<double>(pa[i * d + j]) * pa[i * d + j];
      nb += static_cast<double>(pb[i * d + j]) * pb[i * d + j];
    }
    float fa = std::max(static_cast<float>(std::sqrt(na)), eps);
    float fb = std::max(static_cast<float>(std::sqrt(nb)), eps);
    if (std::sqrt(na) < eps || std::sqrt(nb) < eps) flagged = true;
    (*norms_a)[i] = fa;
    (*norms_b)[i] = fb;
    out[i] = static_cast<float>(dot / (static_cast<double>(fa) * fb));
  }
  if (flagged) Warn("cosine_similarity: zero-norm vector guarded with eps");
  Tensor ta = a, tb = b;
  return Emit("cosine_similarity", {n}, std::move(out), {&a, &b},
              [ta, tb, norms_a, norms_b, n, d](std::span<const float> gout,
                                               const std::vector<std::vector<float>*>& pg) {
                const float* pa = ta.Data().data();
                const float* pb = tb.Data().data();
                for (int64_t i = 0; i < n; ++i) {
                  const float g = gout[i];
                  if (g == 0.0f) continue;
                  const float fa = (*norms_a)[i], fb = (*norms_b)[i];
                  double dot = 0.0;
                  for (int64_t j = 0; j < d; ++j)
                    dot += static_cast<double>(pa[i * d + j]) * pb[i * d + j];
                  const double s = dot / (static_cast<double>(fa) * fb);
                  for (int64_t j = 0; j < d; ++j) {
                    const float av = pa[i * d + j], bv = pb[i * d + j];
                    if (pg[0])
                      (*pg[0])[i * d + j] +=
                          g * static_cast<float>(bv / (static_cast<double>(fa) * fb) -
                                                 s * av / (static_cast<double>(fa) * fa));
                    if (pg[1])
                      (*pg[1])[i * d + j] +=
                          g * static_cast<float>(av / (static_cast<double>(fa) * fb) -
                                                 s * bv / (static_cast<double>(fb) * fb));
                  }
                }
              });
}

namespace {

Tensor ReduceAll(const Tensor& x, bool mean, const char* op) {
  const int64_t n = x.NumEl();
  double acc = 0.0;
  for (float v : x.Data()) acc += v;
  const float denom = mean ? static_cast<float>(n) : 1.0f;
  std::vector<float> out{static_cast<float>(acc / denom)};
  return Emit(op, {1}, std::move(out), {&x},
              [n, denom](std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
                if (!pg[0]) return;
                const float g = gout[0] / denom;
                for (int64_t i = 0; i < n; ++i) (*pg[0])[i] += g;
              });
}

Tensor ReduceAxis(const Tensor& x, int axis, bool mean, const char* op) {
  const int a = NormalizeAxis(axis, x.Rank(), op);
  const AxisSplit sp = SplitAt(x.Dims(), a);
  Shape out_shape;
  for (int i = 0; i < x.Rank(); ++i)
    if (i != a) out_shape.push_back(x.Dim(i));
  if (out_shape.empty()) out_shape.push_back(1);
  const float denom = mean ? static_cast<float>(sp.n) : 1.0f;
  std::vector<float> out(sp.outer * sp.inner, 0.0f);
  const float* px = x.Data().data();
  for (int64_t o = 0; o < sp.outer; ++o)
    for (int64_t in = 0; in < sp.inner; ++in) {
      double acc = 0.0;
      for (int64_t i = 0; i < sp.n; ++i) acc += px[o * sp.n * sp.inner + i * sp.inner + in];
      out[o * sp.inner + in] = static_cast<float>(acc / denom);
    }
  return Emit(op, std::move(out_shape), std::move(out), {&x},
              [sp, denom](std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
                if (!pg[0]) return;
                for (int64_t o = 0; o < sp.outer; ++o)
                  for (int64_t in = 0; in < sp.inner; ++in) {
                    const float g = gout[o * sp.inner + in] / denom;
                    for (int64_t i = 0; i < sp.n; ++i)
                      (*pg[0])[o * sp.n * sp.inner + i * sp.inner + in] += g;
                  }
              });
}

}  // namespace

Tensor Sum(const Tensor& x) { return ReduceAll(x, false, "sum"); }
Tensor Mean(const Tensor& x) { return ReduceAll(x, true, "mean"); }
Tensor Sum(const Tensor& x, int axis) { return ReduceAxis(x, axis, false, "sum_axis"); }
Tensor Mean(const Tensor& x, int axis) { return ReduceAxis(x, axis, true, "mean_axis"); }

Tensor Concat(const std::vector<Tensor>& xs, int axis) {
  CLSW_CHECK(!xs.empty(), "concat: empty input list");
  const int rank = xs[0].Rank();
  const int a = NormalizeAxis(axis, rank, "concat");
  Shape out_shape = xs[0].Dims();
  int64_t total = 0;
  for (const Tensor& t : xs) {
    CheckShape(t.Rank() == rank, "concat", {t.Dims(), xs[0].Dims()}, "rank mismatch");
    for (int i = 0; i < rank; ++i)
      if (i != a)
        CheckShape(t.Dim(i) == xs[0].Dim(i), "concat", {t.Dims(), xs[0].Dims()},
                   "non-concat dims must match");
    total += t.Dim(a);
  }
  out_shape[a] = total;

  const AxisSplit osp = SplitAt(out_shape, a);
  std::vector<float> out(NumElements(out_shape));
  std::vector<int64_t> offsets;  // start of each input along the axis
  int64_t off = 0;
  for (const Tensor& t : xs) {
    offsets.push_back(off);
    const AxisSplit isp = SplitAt(t.Dims(), a);
    const float* px = t.Data().data();
    for (int64_t o = 0; o < isp.outer; ++o)
      for (int64_t i = 0; i < isp.n; ++i)
        std::memcpy(out.data() + (o * osp.n + off + i) * osp.inner,
                    px + (o * isp.n + i) * isp.inner, isp.inner * sizeof(float));
    off += t.Dim(a);
  }

  std::vector<const Tensor*> inputs;
  std::vector<int64_t> sizes;
  for (const Tensor& t : xs) {
    inputs.push_back(&t);
    sizes.push_back(t.Dim(a));
  }
  return Emit("concat", std::move(out_shape), std::move(out), inputs,
              [osp, offsets, sizes](std::span<const float> gout,
                                    const std::vector<std::vector<float>*>& pg) {
                for (size_t k = 0; k < pg.size(); ++k) {
                  if (!pg[k]) continue;
                  const int64_t sz = sizes[k], start = offsets[k];
                  for (int64_t o = 0; o < osp.outer; ++o)
                    for (int64_t i = 0; i < sz; ++i)
                      for (int64_t in = 0; in < osp.inner; ++in)
                        (*pg[k])[(o * sz + i) * osp.inner + in] +=
                            gout[(o * osp.n + start + i) * osp.inner + in];
                }
              });
}

Tensor Slice(const Tensor& x, int axis, int64_t start, int64_t len) {
  const int a = NormalizeAxis(axis, x.Rank(), "slice");
  CLSW_CHECK(start >= 0 && len >= 1 && start + len <= x.Dim(a),
             "slice: range [", start, ",", start + len, ") out of bounds for axis size ",
             x.Dim(a));
  Shape out_shape = x.Dims();
  out_shape[a] = len;
  const AxisSplit sp = SplitAt(x.Dims(), a);
  std::vector<float> out(NumElements(out_shape));
  const float* px = x.Data().data();
  for (int64_t o = 0; o < sp.outer; ++o)
    for (int64_t i = 0; i < len; ++i)
      std::memcpy(out.data() + (o * len + i) * sp.inner,
                  px + (o * sp.n + start + i) * sp.inner, sp.inner * sizeof(float));
  return Emit("slice", std::move(out_shape), std::move(out), {&x},
              [sp, start, len](std::span<const float> gout,
                               const std::vector<std::vector<float>*>& pg) {
                if (!pg[0]) return;
                for (int64_t o = 0; o < sp.outer; ++o)
                  for (int64_t i = 0; i < len; ++i)
                    for (int64_t in = 0; in < sp.inner; ++in)
                      (*pg[0])[(o * sp.n + start + i) * sp.inner + in] +=
                          gout[(o * len + i) * sp.inner + in];
              });
}

Tensor Reshape(const Tensor& x, Shape new_shape) {
  CheckShape(NumElements(new_shape) == x.NumEl(), "reshape", {x.Dims(), new_shape},
             "element count must be preserved");
  std::vector<float> out(x.Data().begin(), x.Data().end());
  return Emit("reshape", std::move(new_shape), std::move(out), {&x},
              [](std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
                if (pg[0]) AxpyInto(pg[0], gout);
              });
}

Tensor Log(const Tensor& x) {
  const int64_t n = x.NumEl();
  std::vector<float> out(n);
  const float* px = x.Data().data();
  for (int64_t i = 0; i < n; ++i) out[i] = std::log(std::max(px[i], kLogFloor));
  Tensor tx = x;
  return Emit("log", x.Dims(), std::move(out), {&x},
              [tx, n](std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
                if (!pg[0]) return;
                const float* px = tx.Data().data();
                for (int64_t i = 0; i < n; ++i)
                  (*pg[0])[i] += gout[i] / std::max(px[i], kLogFloor);
              });
}

Tensor Exp(const Tensor& x) {
  const int64_t n = x.NumEl();
  std::vector<float> out(n);
  const float* px = x.Data().data();
  for (int64_t i = 0; i < n; ++i) out[i] = std::exp(px[i]);
  auto saved = std::make_shared<std::vector<float>>(out);
  return Emit("exp", x.Dims(), std::move(out), {&x},
              [saved, n](std::span<const float> gout, const std::vector<std::vector<float>*>& pg) {
                if (!pg[0]) return;
                for (int64_t i = 0; i < n; ++i) (*pg[0])[i] += gout[i] * (*saved)[i];
              });
}

Tensor StopGradient(const Tensor& x) { return x.Detached(); }

}  // namespace clsw
