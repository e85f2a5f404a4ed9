// clsw/optim.cc

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

#include "clsw/optim.h"

#include <cmath>

namespace clsw {

Param& ParamStore::Create(const std::string& name, Tensor value) {
  CLSW_CHECK(!Has(name), "ParamStore: duplicate parameter '", name, "'");
  Param& p = params_[name];
  p = Param(name, std::move(value));
  order_.push_back(name);
  return p;
}

Param& ParamStore::Get(const std::string& name) {
  auto it = params_.find(name);
  CLSW_CHECK(it != params_.end(), "ParamStore: unknown parameter '", name, "'");
  return it->second;
}

const Param& ParamStore::Get(const std::string& name) const {
  auto it = params_.find(name);
  CLSW_CHECK(it != params_.end(), "ParamStore: unknown parameter '", name, "'");
  return it->second;
}

bool ParamStore::Has(const std::string& name) const { return params_.count(name) > 0; }

std::vector<Param*> ParamStore::All() {
  std::vector<Param*> out;
  out.reserve(order_.size());
  for (const std::string& n : order_) out.push_back(&params_[n]);
  return out;
}

std::vector<const Param*> ParamStore::All() const {
  std::vector<const Param*> out;
  out.reserve(order_.size());
  for (const std::string& n : order_) out.push_back(&params_.at(n));
  return out;
}

void ParamStore::ZeroGrads() {
  for (auto& [name, p] : params_) p.ZeroGrad();
}

float LrAt(int64_t step, const AdamState& state) {
  CLSW_CHECK(step >= 0, "LrAt: negative step ", step);
  if (step > state.total_steps) {
    static bool warned = false;
    if (!warned) {
      Warn(StrCat("LrAt: step ", step, " past total_steps ", state.total_steps,
                  "; learning rate clamped to 0"));
      warned = true;
    }
    return 0.0f;
  }
  if (state.warmup_steps > 0 && step <= state.warmup_steps) {
    return state.peak_lr * static_cast<float>(step) /
           static_cast<float>(state.warmup_steps);
  }
  const int64_t decay_span = state.total_steps - state.warmup_steps;
  if (decay_span <= 0) return 0.0f;
  return state.peak_lr * static_cast<float>(state.total_steps - step) /
         static_cast<float>(decay_span);
}

void AdamStep(std::vector<Param*> params, AdamState* state) {
  const int64_t t = state->step + 1;
  const float lr = LrAt(t, *state);
  const double bc1 = 1.0 - std::pow(static_cast<double>(state->beta1), t);
  const double bc2 = 1.0 - std::pow(static_cast<double>(state->beta2), t);
  for (Param* p : params) {
    CLSW_CHECK(p->grad.size() == static_cast<size_t>(p->value.NumEl()),
               "AdamStep: missing or mis-sized grad for parameter '", p->name, "'");
    auto& m = state->m[p->name];
    auto& v = state->v[p->name];
    if (m.empty()) m.assign(p->grad.size(), 0.0f);
    if (v.empty()) v.assign(p->grad.size(), 0.0f);
    CLSW_CHECK(m.size() == p->grad.size() && v.size() == p->grad.size(),
               "AdamStep: moment buffers do not match parameter '", p->name, "'");
    std::span<float> w = p->value.MutableData();
    for (size_t i = 0; i < w.size(); ++i) {
      const float g = p->grad[i];
      m[i] = state->beta1 * m[i] + (1.0f - state->beta1) * g;
      v[i] = state->beta2 * v[i] + (1.0f - state->beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + state->eps));
    }
  }
  state->step = t;
}

}  // namespace clsw
