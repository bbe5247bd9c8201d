// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The rfpuf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rfpuf {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

enum class ErrorKind {
  InvalidArgument,
  EstimationFailure,
  InsufficientData,
  FrameRejected,
  Io,
  Parse,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-readable kind alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::InvalidArgument, message);
}

/// Independent random streams derived from one master seed.
enum class Stream : std::uint64_t {
  Fleet = 1,
  Channel = 2,
  Prbs = 3,
  Noise = 4,
  Weights = 5,
  EvalChannel = 6,
  EvalPrbs = 7,
  EvalNoise = 8,
  PairSampling = 9,
  Receiver = 10,
  Baseline = 11,
  Replicate = 12,
};

/// splitmix64 finalizer: a bijective avalanche mix of a 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for entity `index` on stream `tag`. Depends only on its
/// arguments, so evaluation order and thread count cannot change results.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::uint64_t tag) noexcept {
  return mix64(mix64(mix64(master) ^ index) ^ (tag * 0xd1b54a32d192ed03ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    Stream tag) noexcept {
  return derive_seed(master, index, static_cast<std::uint64_t>(tag));
}

inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }
inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }
inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace rfpuf
