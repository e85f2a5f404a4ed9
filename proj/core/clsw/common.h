// clsw/common.h

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

#ifndef CLSW_COMMON_H_
#define CLSW_COMMON_H_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace clsw {

// Error taxonomy maps onto CLI exit codes: ConfigError -> 2, DataError -> 3,
// NumericError -> 4, anything else -> 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

namespace internal {
inline void StrAppend(std::ostringstream&) {}
template <typename T, typename... Rest>
void StrAppend(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  StrAppend(os, rest...);
}
}  // namespace internal

template <typename... Args>
std::string StrCat(const Args&... args) {
  std::ostringstream os;
  internal::StrAppend(os, args...);
  return os.str();
}

#define CLSW_CHECK(cond, ...)                                         \
  do {                                                                \
    if (!(cond)) throw ::clsw::Error(::clsw::StrCat(__VA_ARGS__));    \
  } while (0)

#define CLSW_CHECK_DATA(cond, ...)                                       \
  do {                                                                   \
    if (!(cond)) throw ::clsw::DataError(::clsw::StrCat(__VA_ARGS__));   \
  } while (0)

// One-line warnings on stderr; tests scrape for the "WARNING" prefix.
void Warn(const std::string& msg);

// Deterministic counter-based RNG (splitmix64). A given seed always yields
// the same stream on every platform; Fork derives an independent substream.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t NextU64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in the open interval (0, 1).
  double Uniform() {
    return (static_cast<double>(NextU64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  // Standard normal via Box-Muller.
  double Normal();

  // Uniform integer in [0, n). n must be > 0.
  int64_t UniformInt(int64_t n);

  Rng Fork(uint64_t salt) const {
    Rng r(state_ ^ (0xd1342543de82ef95ull * (salt + 0x632be59bd9b4e019ull)));
    r.NextU64();
    return r;
  }

 private:
  uint64_t state_;
};

// Stable 64-bit string hash (FNV-1a), used to derive per-utterance RNG seeds.
uint64_t HashString(const std::string& s);

std::vector<std::string> SplitString(const std::string& s, char sep);
std::string JoinStrings(const std::vector<std::string>& parts, const std::string& sep);

// log(exp(a) + exp(b)) without overflow; identity for -inf arguments.
double LogAdd(double a, double b);

}  // namespace clsw

#endif  // CLSW_COMMON_H_
