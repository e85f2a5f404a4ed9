// clsw/fft.h

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

#ifndef CLSW_FFT_H_
#define CLSW_FFT_H_

#include <complex>
#include <span>
#include <vector>

namespace clsw {

// In-place iterative radix-2 FFT; size must be a power of two.
void Fft(std::vector<std::complex<double>>* data);

// Power spectrum (bins 0..n/2) of a Hann-windowed frame zero-padded to
// fft_size (power of two).
std::vector<double> PowerSpectrum(std::span<const float> frame, int fft_size);

}  // namespace clsw

#endif  // CLSW_FFT_H_
