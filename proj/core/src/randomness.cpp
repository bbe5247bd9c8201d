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

#include "rfpuf/randomness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "rfpuf/fft.hpp"

namespace rfpuf {

namespace {

double igamc(double a, double x) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(a, x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

TestOutcome skipped(std::string reason) {
  TestOutcome t;
  t.skipped = true;
  t.skip_reason = std::move(reason);
  return t;
}

TestOutcome result(double statistic, std::vector<double> p) {
  TestOutcome t;
  t.statistic = statistic;
  for (double& v : p) v = clamp01(v);
  t.p_values = std::move(p);
  return t;
}

void emit_code(Bits& out, std::uint64_t code, int bits) {
  for (int b = bits - 1; b >= 0; --b) out.push_back(static_cast<std::uint8_t>((code >> b) & 1U));
}

int floor_log2(std::size_t n) {
  int r = -1;
  while (n) {
    n >>= 1;
    ++r;
  }
  return r;
}

}  // namespace

Bits quantize_to_bits(std::span<const double> values, int bits_per_value) {
  require(bits_per_value >= 1 && bits_per_value <= 32, "quantize_to_bits: bits must be in [1, 32]");
  require(!values.empty(), "quantize_to_bits: empty batch");
  for (double v : values) require(std::isfinite(v), "quantize_to_bits: non-finite value");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  require(range > 0.0, "quantize_to_bits: constant batch has zero range");
  const auto top = (std::uint64_t{1} << bits_per_value) - 1;
  const double scale = std::ldexp(1.0, bits_per_value);
  Bits out;
  out.reserve(values.size() * static_cast<std::size_t>(bits_per_value));
  for (double v : values) {
    const auto code = static_cast<std::uint64_t>(std::floor((v - lo) / range * scale));
    emit_code(out, std::min(code, top), bits_per_value);
  }
  return out;
}

Bits quantize_unit_interval(std::span<const double> values, int bits_per_value) {
  require(bits_per_value >= 1 && bits_per_value <= 32,
          "quantize_unit_interval: bits must be in [1, 32]");
  const auto top = (std::uint64_t{1} << bits_per_value) - 1;
  const double scale = std::ldexp(1.0, bits_per_value);
  Bits out;
  out.reserve(values.size() * static_cast<std::size_t>(bits_per_value));
  for (double u : values) {
    require(std::isfinite(u), "quantize_unit_interval: non-finite value");
    const auto code = static_cast<std::uint64_t>(std::floor(std::clamp(u, 0.0, 1.0) * scale));
    emit_code(out, std::min(code, top), bits_per_value);
  }
  return out;
}

std::string_view to_string(NistTest t) {
  switch (t) {
    case NistTest::Frequency: return "frequency";
    case NistTest::BlockFrequency: return "block_frequency";
    case NistTest::Runs: return "runs";
    case NistTest::LongestRun: return "longest_run";
    case NistTest::CumulativeSums: return "cumulative_sums";
    case NistTest::ApproximateEntropy: return "approximate_entropy";
    case NistTest::Serial: return "serial";
    case NistTest::Dft: return "dft";
  }
  return "unknown";
}

bool TestOutcome::passed(double alpha) const {
  if (skipped || p_values.empty()) return false;
  return std::all_of(p_values.begin(), p_values.end(), [alpha](double p) { return p >= alpha; });
}

TestOutcome frequency_test(std::span<const std::uint8_t> bits) {
  if (bits.empty()) return skipped("empty sequence");
  long long s = 0;
  for (auto b : bits) s += b ? 1 : -1;
  const double s_obs = std::abs(static_cast<double>(s)) / std::sqrt(static_cast<double>(bits.size()));
  return result(s_obs, {std::erfc(s_obs / std::sqrt(2.0))});
}

TestOutcome block_frequency_test(std::span<const std::uint8_t> bits, std::size_t m) {
  require(m >= 1, "block_frequency_test: block length must be >= 1");
  const std::size_t n_blocks = bits.size() / m;
  if (n_blocks == 0) return skipped("sequence shorter than one block");
  double chi2 = 0.0;
  for (std::size_t i = 0; i < n_blocks; ++i) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < m; ++j) ones += bits[i * m + j];
    const double pi = static_cast<double>(ones) / static_cast<double>(m) - 0.5;
    chi2 += pi * pi;
  }
  chi2 *= 4.0 * static_cast<double>(m);
  return result(chi2, {igamc(static_cast<double>(n_blocks) / 2.0, chi2 / 2.0)});
}

TestOutcome runs_test(std::span<const std::uint8_t> bits) {
  const std::size_t n = bits.size();
  if (n < 2) return skipped("sequence shorter than 2 bits");
  const double nn = static_cast<double>(n);
  const double pi = static_cast<double>(std::count(bits.begin(), bits.end(), 1)) / nn;
  // Frequency prerequisite: the runs test is not applicable, p = 0.
  if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(nn)) return result(0.0, {0.0});
  std::size_t v = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) v += bits[k] != bits[k + 1];
  const double num = std::abs(static_cast<double>(v) - 2.0 * nn * pi * (1.0 - pi));
  const double den = 2.0 * std::sqrt(2.0 * nn) * pi * (1.0 - pi);
  return result(static_cast<double>(v), {std::erfc(num / den)});
}

TestOutcome longest_run_test(std::span<const std::uint8_t> bits) {
  const std::size_t n = bits.size();
  if (n < 128) return skipped("longest-run test needs at least 128 bits");
  std::size_t m;
  int v_lo;
  std::vector<double> pi;
  if (n < 6272) {
    m = 8;
    v_lo = 1;
    pi = {0.21484375, 0.3671875, 0.23046875, 0.1875};
  } else if (n < 750000) {
    m = 128;
    v_lo = 4;
    pi = {0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124};
  } else {
    m = 10000;
    v_lo = 10;
    pi = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};
  }
  const int k = static_cast<int>(pi.size()) - 1;
  const std::size_t n_blocks = n / m;
  std::vector<double> counts(pi.size(), 0.0);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    int run = 0, longest = 0;
    for (std::size_t j = 0; j < m; ++j) {
      run = bits[b * m + j] ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    counts[static_cast<std::size_t>(std::clamp(longest - v_lo, 0, k))] += 1.0;
  }
  double chi2 = 0.0;
  const double nb = static_cast<double>(n_blocks);
  for (std::size_t i = 0; i < pi.size(); ++i)
    chi2 += (counts[i] - nb * pi[i]) * (counts[i] - nb * pi[i]) / (nb * pi[i]);
  return result(chi2, {igamc(static_cast<double>(k) / 2.0, chi2 / 2.0)});
}

TestOutcome cumulative_sums_test(std::span<const std::uint8_t> bits) {
  const auto n = static_cast<long long>(bits.size());
  if (n == 0) return skipped("empty sequence");
  auto p_value = [n](long long z) {
    // Integer divisions follow the reference implementation.
    const double sn = std::sqrt(static_cast<double>(n));
    double sum1 = 0.0;
    for (long long k = (-n / z + 1) / 4; k <= (n / z - 1) / 4; ++k)
      sum1 += normal_cdf(static_cast<double>((4 * k + 1) * z) / sn) -
              normal_cdf(static_cast<double>((4 * k - 1) * z) / sn);
    double sum2 = 0.0;
    for (long long k = (-n / z - 3) / 4; k <= (n / z - 1) / 4; ++k)
      sum2 += normal_cdf(static_cast<double>((4 * k + 3) * z) / sn) -
              normal_cdf(static_cast<double>((4 * k + 1) * z) / sn);
    return 1.0 - sum1 + sum2;
  };
  long long s = 0, z_fwd = 0;
  for (auto b : bits) {
    s += b ? 1 : -1;
    z_fwd = std::max(z_fwd, std::abs(s));
  }
  s = 0;
  long long z_bwd = 0;
  for (auto it = bits.rbegin(); it != bits.rend(); ++it) {
    s += *it ? 1 : -1;
    z_bwd = std::max(z_bwd, std::abs(s));
  }
  return result(static_cast<double>(z_fwd), {p_value(z_fwd), p_value(z_bwd)});
}

namespace {

// Counts of every overlapping m-bit pattern, wrapping around the end.
std::vector<std::size_t> pattern_counts(std::span<const std::uint8_t> bits, int m) {
  std::vector<std::size_t> counts(std::size_t{1} << m, 0);
  if (m == 0) {
    counts[0] = bits.size();
    return counts;
  }
  const std::size_t n = bits.size();
  const std::size_t mask = (std::size_t{1} << m) - 1;
  std::size_t w = 0;
  for (int j = 0; j < m - 1; ++j) w = (w << 1) | bits[static_cast<std::size_t>(j) % n];
  for (std::size_t i = 0; i < n; ++i) {
    w = ((w << 1) | bits[(i + static_cast<std::size_t>(m) - 1) % n]) & mask;
    ++counts[w];
  }
  return counts;
}

}  // namespace

TestOutcome approximate_entropy_test(std::span<const std::uint8_t> bits, int m) {
  require(m >= 1 && m <= 24, "approximate_entropy_test: m must be in [1, 24]");
  const std::size_t n = bits.size();
  if (n == 0) return skipped("empty sequence");
  const double nn = static_cast<double>(n);
  auto phi = [&](int mm) {
    double s = 0.0;
    for (std::size_t c : pattern_counts(bits, mm))
      if (c) {
        const double p = static_cast<double>(c) / nn;
        s += p * std::log(p);
      }
    return s;
  };
  const double apen = phi(m) - phi(m + 1);
  const double chi2 = 2.0 * nn * (std::log(2.0) - apen);
  return result(chi2, {igamc(std::ldexp(1.0, m - 1), chi2 / 2.0)});
}

TestOutcome serial_test(std::span<const std::uint8_t> bits, int m) {
  require(m >= 2 && m <= 24, "serial_test: m must be in [2, 24]");
  const std::size_t n = bits.size();
  if (n == 0) return skipped("empty sequence");
  const double nn = static_cast<double>(n);
  auto psi2 = [&](int mm) {
    if (mm <= 0) return 0.0;
    double s = 0.0;
    for (std::size_t c : pattern_counts(bits, mm)) s += static_cast<double>(c) * static_cast<double>(c);
    return std::ldexp(1.0, mm) / nn * s - nn;
  };
  const double p0 = psi2(m), p1 = psi2(m - 1), p2 = psi2(m - 2);
  const double d1 = p0 - p1;
  const double d2 = p0 - 2.0 * p1 + p2;
  return result(d1, {igamc(std::ldexp(1.0, m - 2), d1 / 2.0), igamc(std::ldexp(1.0, m - 3), d2 / 2.0)});
}

TestOutcome dft_test(std::span<const std::uint8_t> bits) {
  const std::size_t n = bits.size();
  if (n < 2) return skipped("sequence shorter than 2 bits");
  std::vector<cplx> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = bits[i] ? 1.0 : -1.0;
  const std::vector<cplx> spec = fft(x);
  const double nn = static_cast<double>(n);
  const double threshold = std::sqrt(std::log(1.0 / 0.05) * nn);
  std::size_t below = 0;
  for (std::size_t i = 0; i < n / 2; ++i) below += std::abs(spec[i]) < threshold;
  const double n0 = 0.95 * nn / 2.0;
  const double d = (static_cast<double>(below) - n0) / std::sqrt(nn * 0.95 * 0.05 / 4.0);
  return result(d, {std::erfc(std::abs(d) / std::sqrt(2.0))});
}

void NistConfig::validate() const {
  require(record_length >= 10000, "NistConfig.record_length must be >= 10000");
  require(alpha > 0.0 && alpha < 1.0, "NistConfig.alpha must be in (0, 1)");
  require(approximate_entropy_m >= 0 && serial_m >= 0, "NistConfig: m must be >= 0");
}

std::array<TestOutcome, kNistTestCount> run_nist_record(std::span<const std::uint8_t> bits,
                                                        const NistConfig& cfg) {
  const std::size_t n = bits.size();
  const int lg = floor_log2(std::max<std::size_t>(n, 1));
  const std::size_t block_m =
      cfg.block_frequency_m ? cfg.block_frequency_m : std::max<std::size_t>(128, (n + 98) / 99);
  const int apen_m = cfg.approximate_entropy_m ? cfg.approximate_entropy_m : std::clamp(lg - 6, 1, 10);
  const int serial_m = cfg.serial_m ? cfg.serial_m : std::clamp(lg - 3, 2, 16);

  std::array<TestOutcome, kNistTestCount> out;
  auto run = [&](NistTest t, std::size_t min_bits, auto&& fn) {
    out[static_cast<std::size_t>(t)] =
        n < min_bits ? skipped("record shorter than " + std::to_string(min_bits) + " bits") : fn();
  };
  run(NistTest::Frequency, 100, [&] { return frequency_test(bits); });
  run(NistTest::BlockFrequency, 100, [&] { return block_frequency_test(bits, block_m); });
  run(NistTest::Runs, 100, [&] { return runs_test(bits); });
  run(NistTest::LongestRun, 128, [&] { return longest_run_test(bits); });
  run(NistTest::CumulativeSums, 100, [&] { return cumulative_sums_test(bits); });
  // Recommended m < log2(n) - 5 and m < log2(n) - 2 respectively.
  if (apen_m >= lg - 5)
    out[static_cast<std::size_t>(NistTest::ApproximateEntropy)] = skipped("record too short for m");
  else
    out[static_cast<std::size_t>(NistTest::ApproximateEntropy)] = approximate_entropy_test(bits, apen_m);
  if (serial_m >= lg - 2)
    out[static_cast<std::size_t>(NistTest::Serial)] = skipped("record too short for m");
  else
    out[static_cast<std::size_t>(NistTest::Serial)] = serial_test(bits, serial_m);
  run(NistTest::Dft, 1000, [&] { return dft_test(bits); });
  return out;
}

double NistTally::pass_rate() const {
  if (run == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(passed) / static_cast<double>(run);
}

void NistReport::add(const std::array<TestOutcome, kNistTestCount>& outcome, double alpha) {
  ++records;
  for (std::size_t t = 0; t < kNistTestCount; ++t) {
    if (outcome[t].skipped) {
      ++tests[t].skipped;
      continue;
    }
    ++tests[t].run;
    if (outcome[t].passed(alpha)) ++tests[t].passed;
  }
}

NistReport nist_subset(std::span<const std::uint8_t> bits, const NistConfig& cfg) {
  cfg.validate();
  require(bits.size() >= 10000, "nist_subset: need at least 10^4 bits");
  for (auto b : bits) require(b <= 1, "nist_subset: bits must be 0 or 1");
  NistReport report;
  for (std::size_t r = 0; r + cfg.record_length <= bits.size(); r += cfg.record_length)
    report.add(run_nist_record(bits.subspan(r, cfg.record_length), cfg), cfg.alpha);
  if (report.records == 0) fail(ErrorKind::InsufficientData, "nist_subset: no complete record");
  return report;
}

GeoMeanCdf::GeoMeanCdf(std::vector<double> sample) : sorted_(std::move(sample)) {
  require(sorted_.size() >= 2, "GeoMeanCdf: need at least 2 reference values");
  for (double v : sorted_) require(std::isfinite(v), "GeoMeanCdf: non-finite reference value");
  std::sort(sorted_.begin(), sorted_.end());
}

GeoMeanCdf GeoMeanCdf::from_model(const ParamSpec& spec, std::size_t n_devices, std::uint64_t seed) {
  const GeoMeanReference ref = geo_mean_reference(spec);
  std::vector<double> values;
  values.reserve(n_devices);
  for (const TxProfile& tx : sample_fleet(n_devices, spec, seed)) {
    FeatureVector fv;
    fv[Feature::FreqOffsetPpm] = tx.lo_offset_ppm;
    fv[Feature::GainImbalanceDb] = tx.iq_gain_imbalance_db;
    fv[Feature::PhaseImbalanceDeg] = tx.iq_phase_imbalance_deg;
    fv[Feature::RingCompression] = ref.nominal[3];
    fv[Feature::ResidualEvm] = ref.nominal[4];
    values.push_back(geo_mean_ppm(fv, ref));
  }
  return GeoMeanCdf(std::move(values));
}

double GeoMeanCdf::operator()(double value) const {
  const double n = static_cast<double>(sorted_.size());
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), value);
  if (it == sorted_.begin()) return 0.0;
  if (it == sorted_.end()) return 1.0;
  const auto i = static_cast<std::size_t>(it - sorted_.begin());
  const double lo = sorted_[i - 1], hi = sorted_[i];
  const double frac = hi > lo ? (value - lo) / (hi - lo) : 0.0;
  return std::clamp((static_cast<double>(i) - 0.5 + frac) / n, 0.0, 1.0);
}

Bits puf_bitstream(std::span<const double> geo_means, BitDerivation derivation,
                   const GeoMeanCdf* cdf) {
  if (derivation == BitDerivation::MinMax) return quantize_to_bits(geo_means, kPufBitsPerDevice);
  require(cdf != nullptr, "puf_bitstream: the probability transform needs a reference CDF");
  std::vector<double> u;
  u.reserve(geo_means.size());
  for (double g : geo_means) u.push_back((*cdf)(g));
  return quantize_unit_interval(u, kPufBitsPerDevice);
}

}  // namespace rfpuf
