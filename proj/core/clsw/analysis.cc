// clsw/analysis.cc

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

#include "clsw/analysis.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace clsw {

std::vector<LanguageUsageVector> ExtractCodebookUsage(
    const Model& model, const std::vector<UtteranceAudio>& utterances, int n_utts,
    uint64_t seed, bool l2_normalize) {
  CLSW_CHECK(n_utts >= 1, "extract_codebook_usage: n_utts must be >= 1");
  std::map<std::string, std::vector<const UtteranceAudio*>> by_lang;
  for (const auto& u : utterances) by_lang[u.language].push_back(&u);
  CLSW_CHECK_DATA(!by_lang.empty(), "extract_codebook_usage: no utterances");

  const ModelConfig& cfg = model.cfg();
  const int g_books = cfg.num_codebooks, v_entries = cfg.entries_per_book;
  std::vector<LanguageUsageVector> out;
  for (auto& [lang, list] : by_lang) {
    // Sampling keys off utterance ids, not input order.
    std::sort(list.begin(), list.end(),
              [](const UtteranceAudio* a, const UtteranceAudio* b) { return a->id < b->id; });
    Rng rng = Rng(seed).Fork(HashString(lang));
    if (static_cast<int>(list.size()) < n_utts)
      Warn(StrCat("extract_codebook_usage: language '", lang, "' has ", list.size(),
                  " utterances; sampling ", n_utts, " with replacement"));
    std::vector<int64_t> counts(g_books * v_entries, 0);
    for (int s = 0; s < n_utts; ++s) {
      const UtteranceAudio* utt = list[rng.UniformInt(static_cast<int64_t>(list.size()))];
      ParamBinder pb(nullptr, const_cast<ParamStore*>(&model.params()));
      Tensor z = model.EncodeFeatures(pb, utt->samples, false, nullptr);
      // Inference-mode quantization: argmax of the clean logits, no noise.
      QuantizeResult q = model.Quantize(pb, z, 1.0f, nullptr, /*hard=*/true,
                                        /*with_noise=*/false);
      for (int64_t t = 0; t < z.Dim(0); ++t)
        for (int g = 0; g < g_books; ++g)
          counts[g * v_entries + q.codes[t * g_books + g]] += 1;
    }
    LanguageUsageVector lv;
    lv.language = lang;
    lv.vec.resize(g_books * v_entries, 0.0f);
    if (l2_normalize) {
      double norm = 0.0;
      for (int64_t c : counts) norm += static_cast<double>(c) * c;
      norm = std::sqrt(norm);
      for (size_t i = 0; i < counts.size(); ++i)
        lv.vec[i] = norm > 0 ? static_cast<float>(counts[i] / norm) : 0.0f;
    } else {
      for (int g = 0; g < g_books; ++g) {
        int64_t total = 0;
        for (int v = 0; v < v_entries; ++v) total += counts[g * v_entries + v];
        for (int v = 0; v < v_entries; ++v)
          lv.vec[g * v_entries + v] =
              total > 0 ? static_cast<float>(static_cast<double>(counts[g * v_entries + v]) /
                                             static_cast<double>(total))
                        : 0.0f;
      }
    }
    out.push_back(std::move(lv));
  }
  return out;
}

namespace {

double SqDist(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

}  // namespace

KMeansResult KMeans(const std::vector<std::vector<double>>& vectors, int k, uint64_t seed) {
  const size_t n = vectors.size();
  CLSW_CHECK(k >= 1 && static_cast<size_t>(k) <= n, "kmeans: k=", k, " with only ", n,
             " vectors");
  Rng rng(seed ^ 0x6b6d65616e73ull);

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  centroids.push_back(vectors[rng.UniformInt(static_cast<int64_t>(n))]);
  std::vector<double> d2(n);
  while (centroids.size() < static_cast<size_t>(k)) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, SqDist(vectors[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      // All remaining points coincide with existing centroids.
      centroids.push_back(vectors[rng.UniformInt(static_cast<int64_t>(n))]);
      continue;
    }
    double r = rng.Uniform() * total;
    size_t pick = n - 1;
    for (size_t i = 0; i < n; ++i) {
      r -= d2[i];
      if (r <= 0.0) {
        pick = i;
        break;
      }
    }
    centroids.push_back(vectors[pick]);
  }

  KMeansResult res;
  res.assignments.assign(n, 0);
  for (int iter = 0; iter < 300; ++iter) {
    // Assign.
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int c = 0; c < k; ++c) {
        const double d = SqDist(vectors[i], centroids[c]);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      res.assignments[i] = arg;
    }
    // Update.
    std::vector<std::vector<double>> next(k, std::vector<double>(vectors[0].size(), 0.0));
    std::vector<int64_t> count(k, 0);
    for (size_t i = 0; i < n; ++i) {
      count[res.assignments[i]]++;
      for (size_t d = 0; d < vectors[i].size(); ++d)
        next[res.assignments[i]][d] += vectors[i][d];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] == 0) {
        // Reseed an empty cluster at the farthest point.
        size_t far = 0;
        double far_d = -1.0;
        for (size_t i = 0; i < n; ++i) {
          const double d = SqDist(vectors[i], centroids[res.assignments[i]]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        next[c] = vectors[far];
        count[c] = 1;
      } else {
        for (double& x : next[c]) x /= static_cast<double>(count[c]);
      }
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) shift += SqDist(centroids[c], next[c]);
    centroids = std::move(next);
    if (shift < 1e-8) break;
  }
  res.inertia = 0.0;
  for (size_t i = 0; i < n; ++i) res.inertia += SqDist(vectors[i], centroids[res.assignments[i]]);
  res.centroids = std::move(centroids);
  return res;
}

namespace {

// Cyclic Jacobi eigendecomposition for symmetric matrices (double, in-place).
void JacobiEigen(std::vector<double>* a_flat, int n, std::vector<double>* eigenvalues,
                 std::vector<double>* eigenvectors) {
  auto& a = *a_flat;
  std::vector<double> v(n * n, 0.0);
  for (int i = 0; i < n; ++i) v[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-20) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::fabs(apq) < 1e-18) continue;
        const double app = a[p * n + p], aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double aip = a[i * n + p], aiq = a[i * n + q];
          a[i * n + p] = c * aip - s * aiq;
          a[i * n + q] = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a[p * n + i], aqi = a[q * n + i];
          a[p * n + i] = c * api - s * aqi;
          a[q * n + i] = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = v[i * n + p], viq = v[i * n + q];
          v[i * n + p] = c * vip - s * viq;
          v[i * n + q] = s * vip + c * viq;
        }
      }
    }
  }
  eigenvalues->resize(n);
  for (int i = 0; i < n; ++i) (*eigenvalues)[i] = a[i * n + i];
  *eigenvectors = std::move(v);
}

}  // namespace

Pca2d ComputePca2d(const std::vector<std::vector<double>>& vectors) {
  CLSW_CHECK_DATA(vectors.size() >= 3, "pca_2d: need at least 3 vectors, got ",
                  vectors.size());
  const size_t n = vectors.size();
  const int dim = static_cast<int>(vectors[0].size());
  std::vector<double> mean(dim, 0.0);
  for (const auto& v : vectors)
    for (int d = 0; d < dim; ++d) mean[d] += v[d];
  for (double& m : mean) m /= static_cast<double>(n);

  std::vector<double> cov(dim * dim, 0.0);
  for (const auto& v : vectors)
    for (int i = 0; i < dim; ++i) {
      const double vi = v[i] - mean[i];
      for (int j = i; j < dim; ++j) cov[i * dim + j] += vi * (v[j] - mean[j]);
    }
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      cov[i * dim + j] /= static_cast<double>(n - 1);
      cov[j * dim + i] = cov[i * dim + j];
    }

  double trace = 0.0;
  for (int i = 0; i < dim; ++i) trace += cov[i * dim + i];
  Pca2d out;
  out.coords.assign(n, {0.0, 0.0});
  if (trace < 1e-18) {
    Warn("pca_2d: rank-0 data (all vectors identical); coordinates set to zero");
    return out;
  }

  std::vector<double> eigenvalues, eigenvectors;
  JacobiEigen(&cov, dim, &eigenvalues, &eigenvectors);
  std::vector<int> idx(dim);
  for (int i = 0; i < dim; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return eigenvalues[a] > eigenvalues[b]; });

  for (int comp = 0; comp < 2 && comp < dim; ++comp) {
    const int e = idx[comp];
    std::vector<double> axis(dim);
    for (int d = 0; d < dim; ++d) axis[d] = eigenvectors[d * dim + e];
    // Sign convention: largest-magnitude loading positive.
    int big = 0;
    for (int d = 1; d < dim; ++d)
      if (std::fabs(axis[d]) > std::fabs(axis[big])) big = d;
    if (axis[big] < 0.0)
      for (double& x : axis) x = -x;
    for (size_t i = 0; i < n; ++i) {
      double proj = 0.0;
      for (int d = 0; d < dim; ++d) proj += (vectors[i][d] - mean[d]) * axis[d];
      out.coords[i][comp] = proj;
    }
    out.explained_variance_ratio[comp] = std::max(0.0, eigenvalues[e]) / trace;
  }
  return out;
}

AnalysisReport RunUsageAnalysis(const std::vector<LanguageUsageVector>& usage, int k,
                                uint64_t seed) {
  CLSW_CHECK_DATA(!usage.empty(), "analysis: no usage vectors");
  std::vector<std::vector<double>> vectors;
  AnalysisReport report;
  for (const auto& u : usage) {
    report.languages.push_back(u.language);
    vectors.emplace_back(u.vec.begin(), u.vec.end());
  }
  // Clustering runs on the full-dimensional vectors, before any projection.
  KMeansResult km = KMeans(vectors, k, seed);
  Pca2d pca = ComputePca2d(vectors);
  report.k = k;
  report.assignments = km.assignments;
  report.inertia = km.inertia;
  report.coords = pca.coords;
  report.explained_variance_ratio = pca.explained_variance_ratio;
  return report;
}

std::string ScatterSvg(const AnalysisReport& report) {
  static const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                   "#bcbd22", "#17becf"};
  const int width = 640, height = 480, margin = 48;
  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  for (const auto& c : report.coords) {
    min_x = std::min(min_x, c[0]);
    max_x = std::max(max_x, c[0]);
    min_y = std::min(min_y, c[1]);
    max_y = std::max(max_y, c[1]);
  }
  const double span_x = std::max(1e-9, max_x - min_x);
  const double span_y = std::max(1e-9, max_y - min_y);
  auto sx = [&](double x) {
    return margin + (x - min_x) / span_x * (width - 2 * margin);
  };
  auto sy = [&](double y) {
    return height - margin - (y - min_y) / span_y * (height - 2 * margin);
  };
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  os << "  <text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"14\">Codebook usage, PCA of "
     << report.languages.size() << " languages (k=" << report.k << ")</text>\n";
  for (size_t i = 0; i < report.languages.size(); ++i) {
    const char* color = kPalette[report.assignments[i] % 10];
    os << "  <circle cx=\"" << sx(report.coords[i][0]) << "\" cy=\""
       << sy(report.coords[i][1]) << "\" r=\"5\" fill=\"" << color << "\"/>\n";
    os << "  <text x=\"" << sx(report.coords[i][0]) + 7 << "\" y=\""
       << sy(report.coords[i][1]) + 4 << "\" font-family=\"sans-serif\" "
       << "font-size=\"11\">" << report.languages[i] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string AssignmentsCsv(const AnalysisReport& report) {
  std::ostringstream os;
  os.precision(10);
  os << "language,cluster,pc1,pc2\n";
  for (size_t i = 0; i < report.languages.size(); ++i)
    os << report.languages[i] << ',' << report.assignments[i] << ','
       << report.coords[i][0] << ',' << report.coords[i][1] << '\n';
  return os.str();
}

std::string LossComparisonCsv(const std::vector<LanguageLossRow>& monolingual,
                              const std::vector<LanguageLossRow>& multilingual) {
  std::map<std::string, std::pair<double, double>> rows;  // lang -> (mono, multi)
  for (const auto& r : monolingual) rows[r.language].first = r.l;
  for (const auto& r : multilingual) rows[r.language].second = r.l;
  std::ostringstream os;
  os.precision(10);
  os << "language,monolingual_loss,multilingual_loss\n";
  for (const auto& [lang, lm] : rows)
    os << lang << ',' << lm.first << ',' << lm.second << '\n';
  return os.str();
}

void EmitReport(const AnalysisReport& report,
                const std::vector<LanguageLossRow>& monolingual,
                const std::vector<LanguageLossRow>& multilingual,
                const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  auto write = [&](const std::string& name, const std::string& content) {
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream os(path, std::ios::trunc);
    CLSW_CHECK_DATA(os.good(), "emit_report: cannot write '", path, "'");
    os << content;
  };
  write("scatter.svg", ScatterSvg(report));
  write("clusters.csv", AssignmentsCsv(report));
  if (!monolingual.empty() || !multilingual.empty())
    write("loss_comparison.csv", LossComparisonCsv(monolingual, multilingual));
}

}  // namespace clsw
