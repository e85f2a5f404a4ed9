// clsw/optim.h

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

#ifndef CLSW_OPTIM_H_
#define CLSW_OPTIM_H_

#include <map>
#include <string>
#include <vector>

#include "clsw/tensor.h"

namespace clsw {

// Named trainable tensor. `grad` is the sink Graph::Leaf accumulates into.
struct Param {
  std::string name;
  Tensor value;
  std::vector<float> grad;

  Param() = default;
  Param(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.NumEl(), 0.0f) {}

  void ZeroGrad() { std::fill(grad.begin(), grad.end(), 0.0f); }
};

// Ordered parameter bundle; iteration order is insertion order so updates and
// checkpoints are reproducible.
class ParamStore {
 public:
  Param& Create(const std::string& name, Tensor value);
  Param& Get(const std::string& name);
  const Param& Get(const std::string& name) const;
  bool Has(const std::string& name) const;

  std::vector<Param*> All();
  std::vector<const Param*> All() const;
  size_t Size() const { return order_.size(); }

  void ZeroGrads();

 private:
  std::map<std::string, Param> params_;
  std::vector<std::string> order_;
};

// Adam with warmup-then-linear-decay learning rate.
struct AdamState {
  float peak_lr = 0.0005f;
  int64_t warmup_steps = 32000;
  int64_t total_steps = 300000;
  float beta1 = 0.9f;
  float beta2 = 0.98f;
  float eps = 1e-6f;

  int64_t step = 0;  // completed updates
  std::map<std::string, std::vector<float>> m;
  std::map<std::string, std::vector<float>> v;
};

// Linear ramp 0 -> peak over [0, warmup], then linear decay peak -> 0 at
// total_steps. Steps past total_steps clamp to 0 with a warning.
float LrAt(int64_t step, const AdamState& state);

// One bias-corrected Adam update over `params` at LrAt(state.step + 1).
// Every parameter must have a populated grad buffer. Grads are not cleared.
void AdamStep(std::vector<Param*> params, AdamState* state);

}  // namespace clsw

#endif  // CLSW_OPTIM_H_
