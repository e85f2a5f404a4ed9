// clsw/speaker.cc

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

#include "clsw/speaker.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "clsw/fft.h"
#include "json.hpp"

namespace clsw {

namespace {

constexpr int kFrameLen = 400;  // 25 ms
constexpr int kHopLen = 160;    // 10 ms
constexpr int kFftSize = 512;
constexpr int kMelBands = 40;
constexpr int kRawDim = kMelBands * 2 + 4;  // mean+std per band, 4 pitch stats
constexpr double kPitchMinHz = 60.0, kPitchMaxHz = 400.0;
constexpr uint64_t kProjectionSeed = 0x7a5c3e19b2d40f6ull;

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank over FFT bins, built once.
const std::vector<std::vector<std::pair<int, double>>>& MelFilters() {
  static const auto filters = [] {
    std::vector<std::vector<std::pair<int, double>>> banks(kMelBands);
    const double mel_lo = HzToMel(0.0), mel_hi = HzToMel(8000.0);
    std::vector<double> centers(kMelBands + 2);
    for (int i = 0; i < kMelBands + 2; ++i)
      centers[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (kMelBands + 1));
    const double bin_hz = static_cast<double>(kTargetSampleRate) / kFftSize;
    for (int b = 0; b < kMelBands; ++b) {
      const double lo = centers[b], mid = centers[b + 1], hi = centers[b + 2];
      for (int k = 0; k <= kFftSize / 2; ++k) {
        const double f = k * bin_hz;
        double w = 0.0;
        if (f > lo && f < mid) w = (f - lo) / (mid - lo);
        else if (f >= mid && f < hi) w = (hi - f) / (hi - mid);
        if (w > 0.0) banks[b].push_back({k, w});
      }
    }
    return banks;
  }();
  return filters;
}

// Fixed random projection with orthonormal columns (R^T R = I_84).
const std::vector<float>& ProjectionMatrix() {
  static const auto matrix = [] {
    Rng rng(kProjectionSeed);
    // Columns of a 256 x 84 Gaussian matrix, Gram-Schmidt orthonormalized.
    std::vector<std::vector<double>> cols(kRawDim,
                                          std::vector<double>(kVoiceEmbeddingDim));
    for (auto& col : cols)
      for (double& x : col) x = rng.Normal();
    for (int c = 0; c < kRawDim; ++c) {
      for (int p = 0; p < c; ++p) {
        double dot = 0.0;
        for (int i = 0; i < kVoiceEmbeddingDim; ++i) dot += cols[c][i] * cols[p][i];
        for (int i = 0; i < kVoiceEmbeddingDim; ++i) cols[c][i] -= dot * cols[p][i];
      }
      double norm = 0.0;
      for (double x : cols[c]) norm += x * x;
      norm = std::sqrt(norm);
      for (double& x : cols[c]) x /= norm;
    }
    std::vector<float> flat(kVoiceEmbeddingDim * kRawDim);
    for (int i = 0; i < kVoiceEmbeddingDim; ++i)
      for (int c = 0; c < kRawDim; ++c)
        flat[i * kRawDim + c] = static_cast<float>(cols[c][i]);
    return flat;
  }();
  return matrix;
}

// Normalized-autocorrelation pitch for one frame; returns (f0, peak) or
// (0, 0) when unvoiced.
std::pair<double, double> FramePitch(std::span<const float> frame) {
  const int lag_min = static_cast<int>(kTargetSampleRate / kPitchMaxHz);  // 40
  const int lag_max = static_cast<int>(kTargetSampleRate / kPitchMinHz);  // 266
  if (static_cast<int>(frame.size()) <= lag_max + 1) return {0.0, 0.0};
  double e0 = 0.0;
  for (float x : frame) e0 += static_cast<double>(x) * x;
  if (e0 < 1e-8) return {0.0, 0.0};
  double best_corr = 0.0;
  int best_lag = 0;
  for (int lag = lag_min; lag <= lag_max; ++lag) {
    double dot = 0.0, e_shift = 0.0;
    const int n = static_cast<int>(frame.size()) - lag;
    for (int i = 0; i < n; ++i) {
      dot += static_cast<double>(frame[i]) * frame[i + lag];
      e_shift += static_cast<double>(frame[i + lag]) * frame[i + lag];
    }
    const double denom = std::sqrt(e0 * e_shift);
    const double corr = denom > 1e-12 ? dot / denom : 0.0;
    if (corr > best_corr) {
      best_corr = corr;
      best_lag = lag;
    }
  }
  if (best_corr < 0.6 || best_lag == 0) return {0.0, 0.0};
  return {static_cast<double>(kTargetSampleRate) / best_lag, best_corr};
}

}  // namespace

VoiceEmbedding EmbedVoice(const AudioBuffer& buf, const std::string& utt_id) {
  CLSW_CHECK_DATA(buf.sample_rate == kTargetSampleRate, "embed_voice: expected 16 kHz");
  CLSW_CHECK_DATA(static_cast<int64_t>(buf.samples.size()) >= kTargetSampleRate,
                  "embed_voice: need at least 1 s of audio, got ",
                  buf.samples.size(), " samples");
  const int64_t n_frames =
      (static_cast<int64_t>(buf.samples.size()) - kFrameLen) / kHopLen + 1;

  std::vector<double> band_sum(kMelBands, 0.0), band_sq(kMelBands, 0.0);
  std::vector<double> log_f0s;
  double corr_sum = 0.0;
  for (int64_t f = 0; f < n_frames; ++f) {
    std::span<const float> frame(buf.samples.data() + f * kHopLen, kFrameLen);
    const std::vector<double> power = PowerSpectrum(frame, kFftSize);
    const auto& filters = MelFilters();
    for (int b = 0; b < kMelBands; ++b) {
      double e = 0.0;
      for (const auto& [bin, w] : filters[b]) e += w * power[bin];
      const double log_e = std::log(e + 1e-10);
      band_sum[b] += log_e;
      band_sq[b] += log_e * log_e;
    }
    const auto [f0, corr] = FramePitch(frame);
    if (f0 > 0.0) {
      log_f0s.push_back(std::log(f0));
      corr_sum += corr;
    }
  }

  std::vector<double> raw(kRawDim, 0.0);
  double mean_of_means = 0.0;
  for (int b = 0; b < kMelBands; ++b) {
    const double mean = band_sum[b] / static_cast<double>(n_frames);
    const double var = std::max(0.0, band_sq[b] / static_cast<double>(n_frames) - mean * mean);
    raw[b] = mean;
    raw[kMelBands + b] = std::sqrt(var);
    mean_of_means += mean;
  }
  mean_of_means /= kMelBands;
  // Gain invariance: an overall level change shifts every band mean equally.
  for (int b = 0; b < kMelBands; ++b) raw[b] -= mean_of_means;

  VoiceEmbedding out;
  out.utt_id = utt_id;
  if (log_f0s.empty()) {
    Warn("embed_voice: no pitch found in '" + utt_id + "'; using sentinel pitch stats");
    out.pitch_found = false;
    raw[kMelBands * 2 + 0] = std::log(kPitchMinHz);
    raw[kMelBands * 2 + 1] = 0.0;
    raw[kMelBands * 2 + 2] = 0.0;
    raw[kMelBands * 2 + 3] = 0.0;
  } else {
    std::sort(log_f0s.begin(), log_f0s.end());
    const size_t n = log_f0s.size();
    const double median = log_f0s[n / 2];
    const double iqr = log_f0s[(3 * n) / 4] - log_f0s[n / 4];
    raw[kMelBands * 2 + 0] = median;
    raw[kMelBands * 2 + 1] = iqr;
    raw[kMelBands * 2 + 2] = static_cast<double>(n) / static_cast<double>(n_frames);
    raw[kMelBands * 2 + 3] = corr_sum / static_cast<double>(n);
  }

  const std::vector<float>& proj = ProjectionMatrix();
  out.vec.resize(kVoiceEmbeddingDim);
  double norm = 0.0;
  for (int i = 0; i < kVoiceEmbeddingDim; ++i) {
    double acc = 0.0;
    for (int c = 0; c < kRawDim; ++c) acc += proj[i * kRawDim + c] * raw[c];
    out.vec[i] = static_cast<float>(acc);
    norm += acc * acc;
  }
  norm = std::sqrt(norm);
  if (norm < 1e-12) {
    out.vec.assign(kVoiceEmbeddingDim, 0.0f);
    out.vec[0] = 1.0f;
  } else {
    for (float& x : out.vec) x = static_cast<float>(x / norm);
  }
  return out;
}

GenderModel TrainGenderSvm(const std::vector<VoiceEmbedding>& embeddings,
                           const std::vector<std::string>& labels, uint64_t seed,
                           double lambda, int epochs) {
  CLSW_CHECK_DATA(embeddings.size() == labels.size() && !embeddings.empty(),
                  "train_gender_svm: embeddings/labels size mismatch");
  std::set<std::string> distinct(labels.begin(), labels.end());
  CLSW_CHECK_DATA(distinct.size() == 2, "train_gender_svm: need exactly 2 classes, got ",
                  distinct.size());
  GenderModel model;
  model.negative_label = *distinct.begin();
  model.positive_label = *std::next(distinct.begin());
  std::vector<double> y(labels.size());
  std::map<std::string, int> class_count;
  for (size_t i = 0; i < labels.size(); ++i) {
    y[i] = labels[i] == model.positive_label ? 1.0 : -1.0;
    class_count[labels[i]]++;
  }
  for (const auto& [label, count] : class_count)
    CLSW_CHECK_DATA(count >= 2, "train_gender_svm: class '", label,
                    "' has fewer than 2 examples");

  const size_t n = embeddings.size();
  std::vector<double> w(kVoiceEmbeddingDim, 0.0);
  double b = 0.0;
  // Averaged iterate (Pegasos-style); its objective trajectory is smooth and
  // it is also what the trained model returns.
  std::vector<double> w_avg(kVoiceEmbeddingDim, 0.0);
  double b_avg = 0.0;
  Rng rng(seed ^ 0x5f3759df);
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  auto objective = [&](const std::vector<double>& wv, double bv) {
    double hinge = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double margin = bv;
      for (int d = 0; d < kVoiceEmbeddingDim; ++d) margin += wv[d] * embeddings[i].vec[d];
      hinge += std::max(0.0, 1.0 - y[i] * margin);
    }
    double reg = 0.0;
    for (double x : wv) reg += x * x;
    return 0.5 * lambda * reg + hinge / static_cast<double>(n);
  };

  int64_t t = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (size_t i = n - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(rng.UniformInt(static_cast<int64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }
    for (size_t idx : order) {
      ++t;
      const double eta = 1.0 / (lambda * (static_cast<double>(t) + 100.0));
      double margin = b;
      for (int d = 0; d < kVoiceEmbeddingDim; ++d) margin += w[d] * embeddings[idx].vec[d];
      const bool violates = y[idx] * margin < 1.0;
      for (int d = 0; d < kVoiceEmbeddingDim; ++d) {
        double grad = lambda * w[d];
        if (violates) grad -= y[idx] * embeddings[idx].vec[d];
        w[d] -= eta * grad;
      }
      if (violates) b += eta * y[idx];
      const double blend = 1.0 / static_cast<double>(t);
      for (int d = 0; d < kVoiceEmbeddingDim; ++d)
        w_avg[d] += blend * (w[d] - w_avg[d]);
      b_avg += blend * (b - b_avg);
    }
    model.epoch_objectives.push_back(objective(w_avg, b_avg));
  }

  model.weight.assign(w_avg.begin(), w_avg.end());
  model.bias = static_cast<float>(b_avg);
  model.trained = true;
  int correct = 0;
  for (size_t i = 0; i < n; ++i) {
    const double margin = SvmDecision(model, embeddings[i].vec);
    if ((margin >= 0.0) == (y[i] > 0.0)) ++correct;
  }
  model.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return model;
}

double SvmDecision(const GenderModel& model, std::span<const float> embedding) {
  CLSW_CHECK(model.trained, "gender model not trained");
  CLSW_CHECK(embedding.size() == model.weight.size(), "gender model dim mismatch");
  double margin = model.bias;
  for (size_t d = 0; d < embedding.size(); ++d) margin += model.weight[d] * embedding[d];
  return margin;
}

const std::string& PredictGender(const GenderModel& model, const VoiceEmbedding& emb) {
  return SvmDecision(model, emb.vec) >= 0.0 ? model.positive_label : model.negative_label;
}

SpeakerClusters EstimateSpeakerCount(const std::vector<VoiceEmbedding>& embeddings,
                                     double cut_threshold) {
  CLSW_CHECK_DATA(!embeddings.empty(), "estimate_speaker_count: no embeddings");
  const size_t n = embeddings.size();
  // Pairwise cosine distances.
  std::vector<double> dist(n * n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (int d = 0; d < kVoiceEmbeddingDim; ++d)
        dot += static_cast<double>(embeddings[i].vec[d]) * embeddings[j].vec[d];
      dist[i * n + j] = dist[j * n + i] = 1.0 - dot;  // unit-norm vectors
    }

  std::vector<std::vector<size_t>> clusters(n);
  for (size_t i = 0; i < n; ++i) clusters[i] = {i};

  auto linkage = [&](const std::vector<size_t>& a, const std::vector<size_t>& b) {
    double acc = 0.0;
    for (size_t i : a)
      for (size_t j : b) acc += dist[i * n + j];
    return acc / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  };

  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    size_t bi = 0, bj = 0;
    for (size_t i = 0; i < clusters.size(); ++i)
      for (size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = linkage(clusters[i], clusters[j]);
        if (d < best - 1e-15) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    if (best > cut_threshold) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + static_cast<int64_t>(bj));
  }

  // Dense ids ordered by each cluster's smallest member.
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  SpeakerClusters out;
  out.n_clusters = static_cast<int>(clusters.size());
  out.assignment.assign(n, -1);
  for (size_t c = 0; c < clusters.size(); ++c)
    for (size_t i : clusters[c]) out.assignment[i] = static_cast<int>(c);
  return out;
}

std::string ClusterReportJson(const std::string& source, const SpeakerClusters& clusters) {
  nlohmann::json j;
  j["source"] = source;
  j["n_clusters"] = clusters.n_clusters;
  j["assignments"] = clusters.assignment;
  return j.dump(2);
}

void WriteEmbeddingsTsv(const std::string& path,
                        const std::vector<VoiceEmbedding>& embeddings) {
  std::ofstream os(path, std::ios::trunc);
  CLSW_CHECK_DATA(os.good(), "embeddings: cannot write '", path, "'");
  os.precision(8);
  for (const auto& e : embeddings) {
    os << e.utt_id;
    for (float x : e.vec) os << '\t' << x;
    os << '\n';
  }
}

}  // namespace clsw
