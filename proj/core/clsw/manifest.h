// clsw/manifest.h

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

// Utterance manifests: TSV with a root-directory header line, then
// path / num_samples / language / snr_db [/ transcript] rows.

#ifndef CLSW_MANIFEST_H_
#define CLSW_MANIFEST_H_

#include <cstdint>
#include <string>
#include <vector>

#include "clsw/audio.h"

namespace clsw {

struct UtteranceRecord {
  std::string path;  // relative to the manifest root
  int64_t num_samples = 0;
  std::string language;
  double snr_db = 0.0;
  std::string transcript;  // empty when unlabeled

  double DurationSeconds() const {
    return static_cast<double>(num_samples) / kTargetSampleRate;
  }
};

struct Manifest {
  std::string root;
  std::vector<UtteranceRecord> records;

  double TotalHours() const;
};

void WriteManifest(const Manifest& manifest, const std::string& path);
Manifest ReadManifest(const std::string& path);

struct ManifestSplit {
  Manifest train;
  Manifest valid;
};

// Deterministic seeded split stratified by language; rows are sorted by
// (language, path) before shuffling so the result depends only on content
// and seed. Languages with fewer than 2 records go entirely to train.
ManifestSplit BuildManifest(std::vector<UtteranceRecord> records, const std::string& root,
                            double train_ratio, uint64_t seed);

// Per-language train/valid duration table in hours.
std::string DurationSummary(const Manifest& train, const Manifest& valid);

}  // namespace clsw

#endif  // CLSW_MANIFEST_H_
