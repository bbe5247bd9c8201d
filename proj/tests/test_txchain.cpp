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

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "rfpuf/fft.hpp"
#include "rfpuf/txchain.hpp"

namespace rfpuf {
namespace {

BitStream bits_of(std::initializer_list<int> b) {
  BitStream s;
  for (int x : b) s.bits.push_back(static_cast<std::uint8_t>(x));
  return s;
}

TEST(Prbs, LengthAndBalance) {
  const BitStream b = generate_prbs(30000, 42);
  ASSERT_EQ(b.size(), 30000u);
  const double ones = static_cast<double>(std::count(b.bits.begin(), b.bits.end(), 1));
  EXPECT_GE(ones / 30000.0, 0.48);
  EXPECT_LE(ones / 30000.0, 0.52);
}

TEST(Prbs, Deterministic) { EXPECT_EQ(generate_prbs(30000, 5), generate_prbs(30000, 5)); }

TEST(Prbs, DistinctSeedsAreUncorrelated) {
  const BitStream a = generate_prbs(30000, 1);
  const BitStream b = generate_prbs(30000, 2);
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a.bits[i] != b.bits[i];
  // Binomial(30000, 1/2): sd = sqrt(30000)/2 ≈ 86.6; 3σ ≈ 260 is inside the ±500 band.
  EXPECT_NEAR(static_cast<double>(d), 15000.0, 500.0);
}

TEST(Prbs, RejectsBadLength) {
  EXPECT_THROW(generate_prbs(6, 1), Error);
  EXPECT_THROW(generate_prbs(0, 1), Error);
}

TEST(Qam16, MappingExamples) {
  const double s = 1.0 / std::sqrt(10.0);
  const auto a = map_16qam(bits_of({0, 0, 0, 0}));
  EXPECT_NEAR(a[0].real(), -3 * s, 1e-15);
  EXPECT_NEAR(a[0].imag(), -3 * s, 1e-15);
  const auto b = map_16qam(bits_of({1, 0, 1, 0}));
  EXPECT_NEAR(b[0].real(), 3 * s, 1e-15);
  EXPECT_NEAR(b[0].imag(), 3 * s, 1e-15);
}

TEST(Qam16, GrayNeighboursDifferInOneBit) {
  // Adjacent levels along one axis: 00 → -3, 01 → -1, 11 → +1, 10 → +3.
  const int order[4][2] = {{0, 0}, {0, 1}, {1, 1}, {1, 0}};
  for (int k = 0; k < 4; ++k) {
    const auto sym = map_16qam(bits_of({order[k][0], order[k][1], 0, 0}));
    EXPECT_NEAR(sym[0].real() * std::sqrt(10.0), -3.0 + 2.0 * k, 1e-12);
  }
}

TEST(Qam16, UnitMeanPower) {
  const auto sym = map_16qam(generate_prbs(400000, 3));
  double p = 0.0;
  for (const auto& s : sym) p += std::norm(s);
  EXPECT_NEAR(p / static_cast<double>(sym.size()), 1.0, 0.01);
  double exact = 0.0;
  for (const auto& c : qam16_points()) exact += std::norm(c);
  EXPECT_NEAR(exact / 16.0, 1.0, 1e-12);
}

TEST(Qam16, RejectsPartialSymbol) {
  EXPECT_THROW(map_16qam(bits_of({1, 0, 1})), Error);
  EXPECT_THROW(map_16qam(bits_of({1, 0, 2, 0})), Error);
}

TEST(Rrc, UnitEnergyAndSymmetry) {
  const auto h = rrc_taps(8, 0.35, 10);
  ASSERT_EQ(h.size(), 81u);
  double e = 0.0;
  for (double x : h) e += x * x;
  EXPECT_NEAR(e, 1.0, 1e-12);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(h[i], h[h.size() - 1 - i], 1e-15);
}

TEST(Rrc, ImpulseReproducesTaps) {
  const cplx one[] = {cplx(1.0, 0.0)};
  const IqFrame f = pulse_shape(one, 8, 0.35, 10);
  const auto h = rrc_taps(8, 0.35, 10);
  // One symbol period of trailing zeros follows the taps.
  ASSERT_EQ(f.samples.size(), h.size() + 7);
  for (std::size_t i = 0; i < f.samples.size(); ++i) {
    EXPECT_DOUBLE_EQ(f.samples[i].real(), i < h.size() ? h[i] : 0.0);
    EXPECT_EQ(f.samples[i].imag(), 0.0);
  }
  EXPECT_EQ(f.first_symbol_sample, 40u);
}

TEST(Rrc, CascadeIsNyquist) {
  for (double beta : {0.2, 0.35, 0.5}) {
    const auto h = rrc_taps(8, beta, 10);
    std::vector<double> rc(2 * h.size() - 1, 0.0);
    for (std::size_t i = 0; i < h.size(); ++i)
      for (std::size_t j = 0; j < h.size(); ++j) rc[i + j] += h[i] * h[j];
    const std::size_t centre = h.size() - 1;
    double worst = 0.0;
    for (std::size_t k = 8; k <= centre; k += 8) worst = std::max({worst, std::abs(rc[centre + k]), std::abs(rc[centre - k])});
    EXPECT_LE(20.0 * std::log10(worst / rc[centre]), -40.0) << "rolloff " << beta;
  }
}

TEST(Rrc, RejectsBadParameters) {
  EXPECT_THROW(rrc_taps(0, 0.35, 10), Error);
  EXPECT_THROW(rrc_taps(8, 1.5, 10), Error);
  EXPECT_THROW(rrc_taps(8, 0.35, 0), Error);
}

IqFrame random_frame(std::size_t n, std::uint64_t seed) {
  return pulse_shape(map_16qam(generate_prbs(4 * n, seed)), 8, 0.35, 10);
}

TEST(IqImbalance, IdentityAtZero) {
  const IqFrame f = random_frame(200, 1);
  EXPECT_EQ(apply_iq_imbalance(f, 0.0, 0.0).samples, f.samples);
}

TEST(IqImbalance, NinetyDegreeLimit) {
  const IqFrame f = random_frame(200, 2);
  const IqFrame g = apply_iq_imbalance(f, 0.0, 90.0);
  for (std::size_t i = 0; i < f.samples.size(); ++i) {
    EXPECT_NEAR(g.samples[i].real(), f.samples[i].real() - f.samples[i].imag(), 1e-12);
    EXPECT_NEAR(g.samples[i].imag(), 0.0, 1e-12);
  }
}

TEST(IqImbalance, CrossMomentMatchesClosedForm) {
  const IqFrame f = random_frame(50000, 3);
  const IqFrame g = apply_iq_imbalance(f, 1.0, 5.0);
  double p_q = 0.0, p_iq = 0.0, c = 0.0;
  for (std::size_t i = 0; i < f.samples.size(); ++i) {
    p_q += f.samples[i].imag() * f.samples[i].imag();
    p_iq += f.samples[i].real() * f.samples[i].imag();
    c += g.samples[i].real() * g.samples[i].imag();
  }
  const double gain = std::pow(10.0, 1.0 / 20.0);
  const double phi = 5.0 * kPi / 180.0;
  const double expected =
      gain * std::cos(phi) * p_iq - gain * gain * p_q * std::sin(phi) * std::cos(phi);
  EXPECT_NEAR(c, expected, 1e-9 * std::abs(expected));
}

TEST(Pa, NearLinearAtLargeBackoff) {
  const IqFrame f = random_frame(2000, 4);
  const IqFrame g = apply_pa_nonlinearity(f, 60.0);
  for (std::size_t i = 0; i < f.samples.size(); ++i)
    EXPECT_LE(std::abs(g.samples[i] - f.samples[i]), 1e-4 * std::abs(f.samples[i]) + 1e-300);
}

TEST(Pa, KneeValue) {
  const double v_sat = 0.7;
  EXPECT_NEAR(0.7 * rapp_gain(0.7, v_sat), v_sat / std::pow(2.0, 1.0 / (2.0 * kRappSmoothness)), 1e-15);
}

TEST(Pa, RingRatioAtThirtyDb) {
  // Ideal constellation at symbol rate: rms 1, inner radius √0.2, outer √1.8.
  std::vector<cplx> sym(qam16_points().begin(), qam16_points().end());
  IqFrame f;
  f.samples = sym;
  f.samples_per_symbol = 1;
  const IqFrame g = apply_pa_nonlinearity(f, 30.0);
  double inner = 0.0, outer = 0.0;
  for (std::size_t i = 0; i < sym.size(); ++i) {
    const double a = std::abs(sym[i]);
    if (a < 0.5) inner = std::abs(g.samples[i]);
    if (a > 1.3) outer = std::abs(g.samples[i]);
  }
  EXPECT_LT(outer / inner, 3.0);
  EXPECT_GT(outer / inner, 2.99);
}

TEST(Lo, ZeroOffsetIsIdentity) {
  const IqFrame f = random_frame(300, 5);
  EXPECT_EQ(apply_lo_offset(f, 0.0, 2.412e9).samples, f.samples);
}

TEST(Lo, PpmArithmetic) { EXPECT_NEAR(ppm_to_hz(8.3, 2.412e9), 20019.6, 1e-6); }

TEST(Lo, ToneMovesByOffset) {
  IqFrame f;
  f.samples.assign(1 << 16, cplx(1.0, 0.0));
  f.sample_rate_hz = 8e6;
  const IqFrame g = apply_lo_offset(f, 8.3, 2.412e9);
  const auto spec = fft(g.samples);
  std::size_t peak = 0;
  for (std::size_t k = 1; k < spec.size(); ++k)
    if (std::abs(spec[k]) > std::abs(spec[peak])) peak = k;
  const double bin = 8e6 / static_cast<double>(spec.size());
  EXPECT_NEAR(static_cast<double>(peak) * bin, 20019.6, bin);
}

TEST(Transmit, ImpairmentFreeProfileIsPlainShapedQam) {
  const BitStream bits = generate_prbs(4000, 6);
  TxProfile p;
  p.pa_backoff_db = 200.0;
  const FrameConfig cfg;
  const IqFrame f = transmit(bits, p, cfg);
  const IqFrame ref = pulse_shape(map_16qam(bits), 8, 0.35, 10);
  EXPECT_EQ(f.samples, ref.samples);
}

TEST(Transmit, DistinctProfilesGiveDistinctFrames) {
  const BitStream bits = generate_prbs(4000, 7);
  TxProfile a, b;
  a.pa_backoff_db = b.pa_backoff_db = 30.0;
  b.lo_offset_ppm = 0.5;
  const IqFrame fa = transmit(bits, a, FrameConfig{});
  const IqFrame fb = transmit(bits, b, FrameConfig{});
  double diff = 0.0;
  for (std::size_t i = 0; i < fa.samples.size(); ++i) diff = std::max(diff, std::abs(fa.samples[i] - fb.samples[i]));
  EXPECT_GT(diff, 0.0);
}

TEST(Transmit, IqDumpRoundTrip) {
  const IqFrame f = random_frame(100, 8);
  const auto path = std::filesystem::temp_directory_path() / "rfpuf_iq_dump_test.bin";
  write_iq_dump(path, f);
  const IqFrame g = read_iq_dump(path);
  EXPECT_EQ(g.samples, f.samples);
  EXPECT_EQ(g.samples_per_symbol, f.samples_per_symbol);
  EXPECT_EQ(g.first_symbol_sample, f.first_symbol_sample);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".hdr");
}

}  // namespace
}  // namespace rfpuf
