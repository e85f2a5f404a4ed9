// clsw/ctc.cc

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

#include "clsw/ctc.h"

#include <cmath>
#include <limits>
#include <memory>

namespace clsw {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

int64_t CtcMinFrames(const std::vector<int>& target) {
  int64_t frames = static_cast<int64_t>(target.size());
  for (size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++frames;
  return frames;
}

Tensor CtcLoss(const Tensor& log_probs, const std::vector<int>& target, int blank) {
  CheckShape(log_probs.Rank() == 2, "ctc_loss", {log_probs.Dims()}, "expected [t, symbols]");
  const int64_t t_len = log_probs.Dim(0);
  const int64_t n_sym = log_probs.Dim(1);
  CLSW_CHECK(blank >= 0 && blank < n_sym, "ctc_loss: blank index ", blank, " out of range");
  for (int c : target)
    CLSW_CHECK(c >= 0 && c < n_sym && c != blank,
               "ctc_loss: target symbol ", c, " invalid (symbols=", n_sym,
               ", blank=", blank, ")");

  if (t_len < CtcMinFrames(target)) {
    Warn(StrCat("ctc_loss: infeasible target of length ", target.size(), " for ",
                t_len, " frames; returning +inf (utterance should be skipped)"));
    return Tensor::Scalar(std::numeric_limits<float>::infinity());
  }

  // Blank-interleaved label sequence l' = [b, y1, b, y2, ..., b].
  const int64_t ext = 2 * static_cast<int64_t>(target.size()) + 1;
  std::vector<int> labels(ext);
  for (int64_t s = 0; s < ext; ++s)
    labels[s] = (s % 2 == 0) ? blank : target[s / 2];

  const float* lp = log_probs.Data().data();
  auto at = [&](int64_t t, int64_t s) -> double { return lp[t * n_sym + labels[s]]; };
  auto allows_skip = [&](int64_t s) {
    return s >= 2 && labels[s] != blank && labels[s] != labels[s - 2];
  };

  // Forward variables, alpha[t][s] in log space.
  auto alpha = std::make_shared<std::vector<double>>(t_len * ext, kNegInf);
  auto a = [&](int64_t t, int64_t s) -> double& { return (*alpha)[t * ext + s]; };
  a(0, 0) = at(0, 0);
  if (ext > 1) a(0, 1) = at(0, 1);
  for (int64_t t = 1; t < t_len; ++t) {
    for (int64_t s = 0; s < ext; ++s) {
      double acc = a(t - 1, s);
      if (s >= 1) acc = LogAdd(acc, a(t - 1, s - 1));
      if (allows_skip(s)) acc = LogAdd(acc, a(t - 1, s - 2));
      if (acc == kNegInf) continue;
      a(t, s) = acc + at(t, s);
    }
  }
  double log_total = a(t_len - 1, ext - 1);
  if (ext > 1) log_total = LogAdd(log_total, a(t_len - 1, ext - 2));
  const double loss = -log_total;

  Tensor t_lp = log_probs;
  auto saved_labels = std::make_shared<std::vector<int>>(std::move(labels));
  return !log_probs.OnTape()
             ? Tensor::Scalar(static_cast<float>(loss))
             : log_probs.GetGraph()->MakeNode(
                   "ctc_loss", {1}, {static_cast<float>(loss)}, {&log_probs},
                   [t_lp, alpha, saved_labels, t_len, ext, n_sym, log_total](
                       std::span<const float> gout,
                       const std::vector<std::vector<float>*>& pg) {
                     if (!pg[0]) return;
                     const float* lp = t_lp.Data().data();
                     const std::vector<int>& labels = *saved_labels;
                     auto at = [&](int64_t t, int64_t s) -> double {
                       return lp[t * n_sym + labels[s]];
                     };
                     auto allows_skip = [&](int64_t s) {
                       return s >= 2 && labels[s] != labels[0] && labels[s] != labels[s - 2];
                     };
                     // Backward variables including the emission at (t, s).
                     std::vector<double> beta(t_len * ext, kNegInf);
                     auto b = [&](int64_t t, int64_t s) -> double& {
                       return beta[t * ext + s];
                     };
                     b(t_len - 1, ext - 1) = at(t_len - 1, ext - 1);
                     if (ext > 1) b(t_len - 1, ext - 2) = at(t_len - 1, ext - 2);
                     for (int64_t t = t_len - 2; t >= 0; --t) {
                       for (int64_t s = ext - 1; s >= 0; --s) {
                         double acc = b(t + 1, s);
                         if (s + 1 < ext) acc = LogAdd(acc, b(t + 1, s + 1));
                         if (s + 2 < ext && allows_skip(s + 2)) acc = LogAdd(acc, b(t + 1, s + 2));
                         if (acc == kNegInf) continue;
                         b(t, s) = acc + at(t, s);
                       }
                     }
                     // d(-logP)/dLP[t,c] = -sum_{s: l'_s=c} exp(alpha+beta-LP-logP)
                     const float g = gout[0];
                     for (int64_t t = 0; t < t_len; ++t) {
                       for (int64_t s = 0; s < ext; ++s) {
                         const double post =
                             (*alpha)[t * ext + s] + beta[t * ext + s] - at(t, s) - log_total;
                         if (post == kNegInf || std::isnan(post)) continue;
                         (*pg[0])[t * n_sym + labels[s]] -=
                             g * static_cast<float>(std::exp(post));
                       }
                     }
                   });
}

}  // namespace clsw
