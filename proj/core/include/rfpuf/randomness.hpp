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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfpuf/devicegen.hpp"
#include "rfpuf/pufmetrics.hpp"

namespace rfpuf {

using Bits = std::vector<std::uint8_t>;

/// Min-max normalizes the batch to [0, 1), scales to 2^bits and emits each
/// code MSB first. Throws InvalidArgument for a constant batch.
Bits quantize_to_bits(std::span<const double> values, int bits_per_value);

/// Codes floor(u · 2^bits) for u in [0, 1], clamped to the top code.
Bits quantize_unit_interval(std::span<const double> values, int bits_per_value);

enum class NistTest : std::size_t {
  Frequency = 0,
  BlockFrequency,
  Runs,
  LongestRun,
  CumulativeSums,
  ApproximateEntropy,
  Serial,
  Dft,
};
inline constexpr std::size_t kNistTestCount = 8;
std::string_view to_string(NistTest t);

/// Result of one test on one record. Cumulative sums reports forward and
/// backward p-values; serial reports P1 and P2. A record passes when every
/// p-value is >= alpha.
struct TestOutcome {
  bool skipped = false;
  std::string skip_reason;
  std::vector<double> p_values;
  double statistic = 0.0;

  bool passed(double alpha = 0.01) const;
};

TestOutcome frequency_test(std::span<const std::uint8_t> bits);
TestOutcome block_frequency_test(std::span<const std::uint8_t> bits, std::size_t block_length);
TestOutcome runs_test(std::span<const std::uint8_t> bits);
/// Block length 8, 128 or 10^4 chosen from the sequence length.
TestOutcome longest_run_test(std::span<const std::uint8_t> bits);
TestOutcome cumulative_sums_test(std::span<const std::uint8_t> bits);
TestOutcome approximate_entropy_test(std::span<const std::uint8_t> bits, int m);
TestOutcome serial_test(std::span<const std::uint8_t> bits, int m);
TestOutcome dft_test(std::span<const std::uint8_t> bits);

struct NistConfig {
  std::size_t record_length = 10000;
  double alpha = 0.01;
  std::size_t block_frequency_m = 0;  // 0: chosen from the record length
  int approximate_entropy_m = 0;      // 0: chosen from the record length
  int serial_m = 0;                   // 0: chosen from the record length

  void validate() const;
};

std::array<TestOutcome, kNistTestCount> run_nist_record(std::span<const std::uint8_t> bits,
                                                        const NistConfig& cfg);

struct NistTally {
  std::size_t passed = 0;
  std::size_t run = 0;
  std::size_t skipped = 0;

  /// Fraction of non-skipped records that passed; NaN if none ran.
  double pass_rate() const;
};

struct NistReport {
  std::array<NistTally, kNistTestCount> tests{};
  std::size_t records = 0;

  void add(const std::array<TestOutcome, kNistTestCount>& outcome, double alpha);
  const NistTally& operator[](NistTest t) const { return tests[static_cast<std::size_t>(t)]; }
};

/// Splits `bits` into records of cfg.record_length (the tail is dropped) and
/// tallies per-test pass rates. Needs at least 10^4 bits.
NistReport nist_subset(std::span<const std::uint8_t> bits, const NistConfig& cfg);

/// Empirical CDF of a reference geo-mean population.
class GeoMeanCdf {
 public:
  explicit GeoMeanCdf(std::vector<double> sample);
  /// Reference population of a device model's true parameters.
  static GeoMeanCdf from_model(const ParamSpec& spec, std::size_t n_devices,
                               std::uint64_t seed);
  /// Interpolated rank in [0, 1].
  double operator()(double value) const;
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

enum class BitDerivation {
  MinMax,                 // quantize the geo-means directly
  ProbabilityTransform,   // map through a reference CDF first
};

inline constexpr int kPufBitsPerDevice = 16;

/// One 16-bit code per device, concatenated in input (device-id) order.
Bits puf_bitstream(std::span<const double> geo_means, BitDerivation derivation,
                   const GeoMeanCdf* cdf = nullptr);

}  // namespace rfpuf
