// clsw/manifest.cc

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

#include "clsw/manifest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "clsw/common.h"

namespace clsw {

double Manifest::TotalHours() const {
  double seconds = 0.0;
  for (const auto& r : records) seconds += r.DurationSeconds();
  return seconds / 3600.0;
}

void WriteManifest(const Manifest& manifest, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  CLSW_CHECK_DATA(os.good(), "manifest: cannot write '", path, "'");
  os << manifest.root << "\n";
  for (const auto& r : manifest.records) {
    os << r.path << '\t' << r.num_samples << '\t' << r.language << '\t' << std::fixed
       << std::setprecision(4) << r.snr_db;
    if (!r.transcript.empty()) os << '\t' << r.transcript;
    os << '\n';
    os.unsetf(std::ios::fixed);
  }
}

Manifest ReadManifest(const std::string& path) {
  std::ifstream is(path);
  CLSW_CHECK_DATA(is.good(), "manifest: cannot open '", path, "'");
  Manifest m;
  CLSW_CHECK_DATA(static_cast<bool>(std::getline(is, m.root)),
                  "manifest: empty file '", path, "'");
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitString(line, '\t');
    CLSW_CHECK_DATA(f.size() == 4 || f.size() == 5, "manifest: bad row in '", path,
                    "': ", line);
    UtteranceRecord r;
    r.path = f[0];
    r.num_samples = std::stoll(f[1]);
    r.language = f[2];
    r.snr_db = std::stod(f[3]);
    if (f.size() == 5) r.transcript = f[4];
    m.records.push_back(std::move(r));
  }
  return m;
}

ManifestSplit BuildManifest(std::vector<UtteranceRecord> records, const std::string& root,
                            double train_ratio, uint64_t seed) {
  CLSW_CHECK(train_ratio > 0.0 && train_ratio < 1.0,
             "build_manifest: train_ratio must be in (0,1), got ", train_ratio);
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.language, a.path) < std::tie(b.language, b.path);
  });
  std::map<std::string, std::vector<UtteranceRecord>> by_lang;
  for (auto& r : records) by_lang[r.language].push_back(std::move(r));

  ManifestSplit split;
  split.train.root = root;
  split.valid.root = root;
  for (auto& [lang, rows] : by_lang) {
    if (rows.size() < 2) {
      Warn("build_manifest: language '" + lang + "' has fewer than 2 records; all to train");
      for (auto& r : rows) split.train.records.push_back(std::move(r));
      continue;
    }
    Rng rng = Rng(seed).Fork(HashString(lang));
    for (size_t i = rows.size() - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(rng.UniformInt(static_cast<int64_t>(i) + 1));
      std::swap(rows[i], rows[j]);
    }
    size_t n_valid = static_cast<size_t>(
        std::lround(static_cast<double>(rows.size()) * (1.0 - train_ratio)));
    n_valid = std::clamp<size_t>(n_valid, 1, rows.size() - 1);
    for (size_t i = 0; i < rows.size(); ++i) {
      if (i < n_valid) {
        split.valid.records.push_back(std::move(rows[i]));
      } else {
        split.train.records.push_back(std::move(rows[i]));
      }
    }
  }
  auto sort_manifest = [](Manifest* m) {
    std::sort(m->records.begin(), m->records.end(), [](const auto& a, const auto& b) {
      return std::tie(a.language, a.path) < std::tie(b.language, b.path);
    });
  };
  sort_manifest(&split.train);
  sort_manifest(&split.valid);
  return split;
}

std::string DurationSummary(const Manifest& train, const Manifest& valid) {
  std::map<std::string, std::pair<double, double>> hours;  // lang -> (train, valid)
  for (const auto& r : train.records) hours[r.language].first += r.DurationSeconds() / 3600.0;
  for (const auto& r : valid.records) hours[r.language].second += r.DurationSeconds() / 3600.0;
  std::ostringstream os;
  os << "language\ttrain_hours\tvalid_hours\n";
  os << std::fixed << std::setprecision(6);
  double t_total = 0.0, v_total = 0.0;
  for (const auto& [lang, hv] : hours) {
    os << lang << '\t' << hv.first << '\t' << hv.second << '\n';
    t_total += hv.first;
    v_total += hv.second;
  }
  os << "total\t" << t_total << '\t' << v_total << '\n';
  return os.str();
}

}  // namespace clsw
