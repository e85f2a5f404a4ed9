// clsw/analysis.h

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

// Cross-lingual representation analysis: per-language codebook-usage vectors
// (hard argmax counts over sampled utterances), K-means on the full vectors,
// 2-D PCA for plotting, and SVG/CSV report emission.

#ifndef CLSW_ANALYSIS_H_
#define CLSW_ANALYSIS_H_

#include <array>
#include <string>
#include <vector>

#include "clsw/model.h"
#include "clsw/ssl.h"

namespace clsw {

struct LanguageUsageVector {
  std::string language;
  std::vector<float> vec;  // length G*V, group-major; per-group L1 normalized
};

// Samples n_utts utterances per language (with replacement when fewer are
// available, warned), counts inference-mode argmax codebook entries over all
// frames, and normalizes per group. `l2_normalize` switches the final
// normalization to whole-vector L2.
std::vector<LanguageUsageVector> ExtractCodebookUsage(
    const Model& model, const std::vector<UtteranceAudio>& utterances, int n_utts,
    uint64_t seed, bool l2_normalize = false);

struct KMeansResult {
  std::vector<int> assignments;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
};

// k-means++ seeding then Lloyd iterations to convergence (shift < 1e-8 or
// 300 iterations). Runs on the full-dimensional vectors.
KMeansResult KMeans(const std::vector<std::vector<double>>& vectors, int k, uint64_t seed);

struct Pca2d {
  std::vector<std::array<double, 2>> coords;
  std::array<double, 2> explained_variance_ratio = {0.0, 0.0};
};

// Mean-center, covariance, top-2 eigenpairs by cyclic Jacobi. Sign
// convention: the largest-magnitude loading of each component is positive.
// Rank-0 input yields zero coordinates with a warning. Needs >= 3 vectors.
Pca2d ComputePca2d(const std::vector<std::vector<double>>& vectors);

struct AnalysisReport {
  int k = 0;
  std::vector<std::string> languages;
  std::vector<int> assignments;
  std::vector<std::array<double, 2>> coords;
  std::array<double, 2> explained_variance_ratio = {0.0, 0.0};
  double inertia = 0.0;
};

AnalysisReport RunUsageAnalysis(const std::vector<LanguageUsageVector>& usage, int k,
                                uint64_t seed);

// Self-contained SVG scatter: one labeled point per language, color by
// cluster.
std::string ScatterSvg(const AnalysisReport& report);
std::string AssignmentsCsv(const AnalysisReport& report);

// Grouped per-language loss comparison (monolingual vs multilingual valid
// loss), one row per language present in either table.
std::string LossComparisonCsv(const std::vector<LanguageLossRow>& monolingual,
                              const std::vector<LanguageLossRow>& multilingual);

// Writes scatter.svg, clusters.csv, and (when loss tables are nonempty)
// loss_comparison.csv into out_dir.
void EmitReport(const AnalysisReport& report,
                const std::vector<LanguageLossRow>& monolingual,
                const std::vector<LanguageLossRow>& multilingual,
                const std::string& out_dir);

}  // namespace clsw

#endif  // CLSW_ANALYSIS_H_
