// clsw/fft.cc

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

#include "clsw/fft.h"

#include <cmath>

#include "clsw/common.h"

namespace clsw {

void Fft(std::vector<std::complex<double>>* data) {
  const size_t n = data->size();
  CLSW_CHECK(n > 0 && (n & (n - 1)) == 0, "fft: size must be a power of two, got ", n);
  auto& a = *data;
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<double> PowerSpectrum(std::span<const float> frame, int fft_size) {
  CLSW_CHECK(fft_size > 0 && (fft_size & (fft_size - 1)) == 0,
             "power_spectrum: fft_size must be a power of two");
  std::vector<std::complex<double>> buf(fft_size, {0.0, 0.0});
  const size_t n = std::min(frame.size(), static_cast<size_t>(fft_size));
  for (size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                          static_cast<double>(n));
    buf[i] = {frame[i] * w, 0.0};
  }
  Fft(&buf);
  std::vector<double> power(fft_size / 2 + 1);
  for (int k = 0; k <= fft_size / 2; ++k) power[k] = std::norm(buf[k]);
  return power;
}

}  // namespace clsw
