// clsw/wada.h

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

// Blind SNR estimation from the waveform amplitude distribution: the
// statistic G = log(E|x|) - E[log|x|] is inverted through a precomputed
// monotone table built by Monte-Carlo simulation of Gamma(0.4)-amplitude
// speech plus Gaussian noise. The shipped table (wada_table.inc) is
// regenerated by `clsw gen-wada-table`.

#ifndef CLSW_WADA_H_
#define CLSW_WADA_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clsw/common.h"

namespace clsw {

struct WadaTablePoint {
  double snr_db;
  double g;
};

// Estimated SNR in dB, clamped to [-20, 100]. Requires >= 0.5 s of audio.
double WadaSnrDb(std::span<const float> samples);

// The amplitude statistic itself (|x| floored at 1e-10).
double WadaGStatistic(std::span<const float> samples);

// Gamma-distributed sample (Marsaglia-Tsang, with the shape<1 boost).
double GammaSample(double shape, Rng* rng);

// Signed Gamma(0.4)-amplitude "speech" mixed with Gaussian noise at the given
// SNR; used by the table generator and by the tests' synthetic signals.
std::vector<float> SyntheticSpeechNoiseMix(int64_t n, double snr_db, Rng* rng);

// Monte-Carlo table of G per SNR grid point, made monotone by pooling
// adjacent violators.
std::vector<WadaTablePoint> GenerateWadaTable(double snr_min_db, double snr_max_db,
                                              double step_db, int64_t samples_per_point,
                                              uint64_t seed);

std::string FormatWadaTableInc(const std::vector<WadaTablePoint>& table,
                               const std::string& generator_command);
std::string FormatWadaTableTsv(const std::vector<WadaTablePoint>& table);

// The compiled-in table.
std::span<const WadaTablePoint> ShippedWadaTable();

}  // namespace clsw

#endif  // CLSW_WADA_H_
