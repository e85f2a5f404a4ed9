// clsw/speaker.h

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

// Speaker/gender analytics on a deterministic 256-dim spectral voice
// embedding (log-mel + pitch statistics behind a fixed random orthonormal
// projection), a linear max-margin gender classifier, and average-linkage
// clustering for speaker-count estimates.

#ifndef CLSW_SPEAKER_H_
#define CLSW_SPEAKER_H_

#include <string>
#include <vector>

#include "clsw/audio.h"
#include "clsw/common.h"

namespace clsw {

inline constexpr int kVoiceEmbeddingDim = 256;

struct VoiceEmbedding {
  std::string utt_id;
  std::vector<float> vec;  // unit L2 norm
  bool pitch_found = true;
};

// Deterministic embedding; requires >= 1 s of 16 kHz audio. Unvoiced input
// gets band-limited pitch sentinels and pitch_found = false.
VoiceEmbedding EmbedVoice(const AudioBuffer& buf, const std::string& utt_id);

struct GenderModel {
  std::vector<float> weight;  // kVoiceEmbeddingDim
  float bias = 0.0f;
  std::string negative_label;  // decision < 0
  std::string positive_label;  // decision >= 0
  bool trained = false;
  double train_accuracy = 0.0;
  std::vector<double> epoch_objectives;  // hinge + L2 after each epoch
};

// Linear SVM by subgradient descent on hinge + L2 (default lambda 1e-3,
// 50 epochs, seeded shuffling). Exactly two label values required, each with
// at least 2 examples.
GenderModel TrainGenderSvm(const std::vector<VoiceEmbedding>& embeddings,
                           const std::vector<std::string>& labels, uint64_t seed = 1,
                           double lambda = 1e-3, int epochs = 50);

double SvmDecision(const GenderModel& model, std::span<const float> embedding);
const std::string& PredictGender(const GenderModel& model, const VoiceEmbedding& emb);

struct SpeakerClusters {
  int n_clusters = 0;
  std::vector<int> assignment;  // cluster id per embedding, ids are dense
};

// Agglomerative average-linkage on cosine distance; merging stops once the
// minimum inter-cluster distance exceeds cut_threshold. Ties break toward
// the lowest index pair.
SpeakerClusters EstimateSpeakerCount(const std::vector<VoiceEmbedding>& embeddings,
                                     double cut_threshold = 0.3);

std::string ClusterReportJson(const std::string& source, const SpeakerClusters& clusters);

// TSV: utt_id followed by the 256 floats.
void WriteEmbeddingsTsv(const std::string& path,
                        const std::vector<VoiceEmbedding>& embeddings);

}  // namespace clsw

#endif  // CLSW_SPEAKER_H_
