// clsw/wada.cc

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

#include "clsw/wada.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace clsw {

namespace {

constexpr double kAmplitudeFloor = 1e-10;
constexpr double kGammaShape = 0.4;
constexpr double kSnrFloorDb = -20.0;
constexpr double kSnrCeilDb = 100.0;
// Signal power of sign-symmetric Gamma(0.4, 1) amplitudes: E[g^2] = k(k+1).
const double kSpeechPower = kGammaShape * (kGammaShape + 1.0);

#include "clsw/wada_table.inc"

}  // namespace

std::span<const WadaTablePoint> ShippedWadaTable() {
  return {kWadaTable, sizeof(kWadaTable) / sizeof(kWadaTable[0])};
}

double WadaGStatistic(std::span<const float> samples) {
  CLSW_CHECK_DATA(!samples.empty(), "wada_snr: empty buffer");
  double sum_abs = 0.0, sum_log = 0.0;
  for (float x : samples) {
    const double a = std::max(static_cast<double>(std::fabs(x)), kAmplitudeFloor);
    sum_abs += a;
    sum_log += std::log(a);
  }
  const double n = static_cast<double>(samples.size());
  return std::log(sum_abs / n) - sum_log / n;
}

double WadaSnrDb(std::span<const float> samples) {
  CLSW_CHECK_DATA(samples.size() >= 8000,
                  "wada_snr: need at least 0.5 s of 16 kHz audio, got ",
                  samples.size(), " samples");
  const double g = WadaGStatistic(samples);
  std::span<const WadaTablePoint> table = ShippedWadaTable();
  if (g <= table.front().g) return kSnrFloorDb;
  if (g >= table.back().g) return kSnrCeilDb;
  // Binary search for the bracketing pair, then interpolate.
  size_t lo = 0, hi = table.size() - 1;
  while (hi - lo > 1) {
    const size_t mid = (lo + hi) / 2;
    if (table[mid].g <= g) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double span = table[hi].g - table[lo].g;
  const double frac = span > 1e-15 ? (g - table[lo].g) / span : 0.5;
  const double snr = table[lo].snr_db + frac * (table[hi].snr_db - table[lo].snr_db);
  return std::clamp(snr, kSnrFloorDb, kSnrCeilDb);
}

double GammaSample(double shape, Rng* rng) {
  CLSW_CHECK(shape > 0.0, "gamma_sample: shape must be positive");
  if (shape < 1.0) {
    const double boost = std::pow(rng->Uniform(), 1.0 / shape);
    return GammaSample(shape + 1.0, rng) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    const double x = rng->Normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng->Uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<float> SyntheticSpeechNoiseMix(int64_t n, double snr_db, Rng* rng) {
  const double noise_power = kSpeechPower / std::pow(10.0, snr_db / 10.0);
  const double noise_std = std::sqrt(noise_power);
  std::vector<float> out(n);
  for (int64_t i = 0; i < n; ++i) {
    const double amp = GammaSample(kGammaShape, rng);
    const double sign = rng->Uniform() < 0.5 ? -1.0 : 1.0;
    const double noise = noise_std * rng->Normal();
    // Scaled down so the mix fits comfortably in [-1, 1] when written as PCM.
    out[i] = static_cast<float>((sign * amp + noise) * 0.05);
  }
  return out;
}

std::vector<WadaTablePoint> GenerateWadaTable(double snr_min_db, double snr_max_db,
                                              double step_db, int64_t samples_per_point,
                                              uint64_t seed) {
  CLSW_CHECK(step_db > 0.0 && snr_max_db > snr_min_db && samples_per_point > 1000,
             "gen-wada-table: bad grid parameters");
  std::vector<WadaTablePoint> table;
  int idx = 0;
  for (double snr = snr_min_db; snr <= snr_max_db + 1e-9; snr += step_db, ++idx) {
    Rng rng = Rng(seed).Fork(static_cast<uint64_t>(idx));
    const double noise_power = kSpeechPower / std::pow(10.0, snr / 10.0);
    const double noise_std = std::sqrt(noise_power);
    double sum_abs = 0.0, sum_log = 0.0;
    for (int64_t i = 0; i < samples_per_point; ++i) {
      const double amp = GammaSample(kGammaShape, &rng);
      const double sign = rng.Uniform() < 0.5 ? -1.0 : 1.0;
      const double z = sign * amp + noise_std * rng.Normal();
      const double a = std::max(std::fabs(z), kAmplitudeFloor);
      sum_abs += a;
      sum_log += std::log(a);
    }
    const double n = static_cast<double>(samples_per_point);
    table.push_back({snr, std::log(sum_abs / n) - sum_log / n});
  }
  // Monotone (non-decreasing) fit by pooling adjacent violators, so the
  // inversion is well defined even where the statistic saturates.
  std::vector<double> value(table.size()), weight(table.size(), 1.0);
  for (size_t i = 0; i < table.size(); ++i) value[i] = table[i].g;
  std::vector<size_t> span_len(table.size(), 1);
  size_t m = 0;  // active blocks
  for (size_t i = 0; i < table.size(); ++i) {
    value[m] = table[i].g;
    weight[m] = 1.0;
    span_len[m] = 1;
    ++m;
    while (m > 1 && value[m - 2] > value[m - 1]) {
      const double w = weight[m - 2] + weight[m - 1];
      value[m - 2] = (value[m - 2] * weight[m - 2] + value[m - 1] * weight[m - 1]) / w;
      weight[m - 2] = w;
      span_len[m - 2] += span_len[m - 1];
      --m;
    }
  }
  size_t pos = 0;
  for (size_t b = 0; b < m; ++b)
    for (size_t k = 0; k < span_len[b]; ++k) table[pos++].g = value[b];
  return table;
}

std::string FormatWadaTableInc(const std::vector<WadaTablePoint>& table,
                               const std::string& generator_command) {
  std::ostringstream os;
  os.precision(10);
  os << "// clsw/wada_table.inc\n";
  os << "// Generated data file. Regenerate with:\n";
  os << "//   " << generator_command << "\n";
  os << "static constexpr WadaTablePoint kWadaTable[] = {\n";
  for (const auto& p : table) os << "    {" << p.snr_db << ", " << p.g << "},\n";
  os << "};\n";
  return os.str();
}

std::string FormatWadaTableTsv(const std::vector<WadaTablePoint>& table) {
  std::ostringstream os;
  os.precision(10);
  os << "snr_db\tg\n";
  for (const auto& p : table) os << p.snr_db << "\t" << p.g << "\n";
  return os.str();
}

}  // namespace clsw
