// clsw/tensor.h

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

// Dense f32 tensors with reverse-mode automatic differentiation on a tape
// (Graph). Forward values are computed eagerly; when an input is attached to
// a Graph the op records a node whose closure propagates gradients. A Graph
// and its tensors belong to one worker; parameters mutate only between
// forward/backward rounds.

#ifndef CLSW_TENSOR_H_
#define CLSW_TENSOR_H_

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "clsw/common.h"

namespace clsw {

using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape& shape);
std::string ShapeStr(const Shape& shape);

class Graph;

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<float> values);

  static Tensor Zeros(Shape shape);
  static Tensor Full(Shape shape, float value);
  static Tensor Scalar(float value);
  static Tensor FromVec(std::vector<float> values);  // 1-D

  bool Defined() const { return data_ != nullptr; }
  const Shape& Dims() const { return shape_; }
  int64_t Dim(int axis) const;
  int Rank() const { return static_cast<int>(shape_.size()); }
  int64_t NumEl() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }

  std::span<const float> Data() const { return {data_->data(), data_->size()}; }
  // Mutating a tensor that has already been recorded on a tape corrupts the
  // saved forward values; only mutate parameters between steps.
  std::span<float> MutableData() { return {data_->data(), data_->size()}; }

  float At(std::initializer_list<int64_t> idx) const;
  float Item() const;  // value of a 1-element tensor

  bool OnTape() const { return node_ >= 0; }
  Graph* GetGraph() const { return graph_; }
  int NodeId() const { return node_; }

  // Same data buffer, detached from any tape.
  Tensor Detached() const;

 private:
  friend class Graph;
  std::shared_ptr<std::vector<float>> data_;
  Shape shape_;
  Graph* graph_ = nullptr;
  int node_ = -1;
};

// Backward closure: given d(loss)/d(output) accumulate into parent grad
// buffers (pre-sized, zero-initialized, same order as the node's parents).
using BackFn =
    std::function<void(std::span<const float> grad_out,
                       const std::vector<std::vector<float>*>& parent_grads)>;

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Registers `value` as a differentiable leaf. After Backward, the leaf's
  // gradient is accumulated (+=) into *grad_sink, which must stay alive and
  // already have value.NumEl() entries.
  Tensor Leaf(const Tensor& value, std::vector<float>* grad_sink);

  // Reverse sweep from a scalar loss. Each tape may be consumed once.
  void Backward(const Tensor& loss);

  // Gradient of an intermediate tensor from the last Backward. Zeros if the
  // tensor did not influence the loss.
  std::vector<float> GradOf(const Tensor& t) const;

  // When on, every recorded op scans its output for NaN/Inf and throws
  // NumericError naming the op.
  void set_check_numerics(bool on) { check_numerics_ = on; }
  bool check_numerics() const { return check_numerics_; }

  size_t NumNodes() const { return nodes_.size(); }
  bool Consumed() const { return consumed_; }

  // Op-implementation interface.
  Tensor MakeNode(const char* op_name, Shape out_shape, std::vector<float> out_values,
                  const std::vector<const Tensor*>& inputs, BackFn back);

 private:
  struct Node {
    int64_t numel = 0;
    std::vector<int> parents;
    BackFn back;
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<float>> grads_;
  std::vector<std::pair<int, std::vector<float>*>> sinks_;
  bool consumed_ = false;
  bool check_numerics_ = false;
};

// Throws Error naming the op and the offending shapes.
void CheckShape(bool cond, const char* op, const std::vector<Shape>& shapes,
                const std::string& detail);

// ---- Primitive set -------------------------------------------------------

Tensor Matmul(const Tensor& a, const Tensor& b);  // [m,k]x[k,n] -> [m,n]

// x: [T, c_in], w: [c_out, c_in, k], bias: [c_out] (may be undefined).
// Zero padding `pad` on both ends, stride >= 1. Output [t_out, c_out].
Tensor Conv1d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad);

// b must be same-shape, rank-1 matching a's last axis (row broadcast), or a
// 1-element tensor (scalar broadcast).
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
// Same-shape Hadamard product, or 1-element b (scalar broadcast).
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, float s);
Tensor AddScalar(const Tensor& a, float s);

Tensor Transpose(const Tensor& a);  // rank 2

// Per-row normalization over the last axis; gain/bias have that axis's size.
Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps = 1e-5f);

// x: [T, C]; statistics per channel group over (T x C/num_groups) elements.
Tensor GroupNorm(const Tensor& x, int num_groups, const Tensor& gain, const Tensor& bias,
                 float eps = 1e-5f);

Tensor Gelu(const Tensor& x);  // tanh approximation

Tensor Softmax(const Tensor& x, int axis);
Tensor LogSoftmax(const Tensor& x, int axis);

// Inverted dropout: keep with prob 1-p and scale by 1/(1-p). Identity when
// train is false or p == 0 (no tape node recorded). p in [0, 1).
Tensor Dropout(const Tensor& x, float p, bool train, Rng* rng);

// Gathers rows of a rank-2 table; gradient scatter-adds into the table.
Tensor EmbeddingLookup(const Tensor& table, const std::vector<int64_t>& ids);

// Row-wise cosine similarity of two [N, d] tensors -> [N]. Norms are floored
// at eps; a zero-norm row yields similarity 0.
Tensor CosineSimilarity(const Tensor& a, const Tensor& b, float eps = 1e-8f);

Tensor Sum(const Tensor& x);   // -> scalar
Tensor Mean(const Tensor& x);  // -> scalar
Tensor Sum(const Tensor& x, int axis);
Tensor Mean(const Tensor& x, int axis);

Tensor Concat(const std::vector<Tensor>& xs, int axis);
Tensor Slice(const Tensor& x, int axis, int64_t start, int64_t len);
Tensor Reshape(const Tensor& x, Shape new_shape);

// Elementwise natural log; inputs are floored at 1e-30.
Tensor Log(const Tensor& x);

Tensor Exp(const Tensor& x);

// Forward identity, gradient barrier.
Tensor StopGradient(const Tensor& x);

bool HasNonFinite(std::span<const float> v);

}  // namespace clsw

#endif  // CLSW_TENSOR_H_
