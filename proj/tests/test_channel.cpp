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

#include <cmath>

#include <gtest/gtest.h>

#include "rfpuf/channel.hpp"

namespace rfpuf {
namespace {

IqFrame shaped(std::size_t n_symbols, std::uint64_t seed) {
  return pulse_shape(map_16qam(generate_prbs(4 * n_symbols, seed)), 8, 0.35, 10);
}

TEST(Channel, NoiselessUnitChannelIsIdentity) {
  const IqFrame f = shaped(500, 1);
  ChannelRealization ch;
  ch.gain_db = 0.0;
  ch.doppler_hz = 0.0;
  ch.eb_n0_db = INFINITY;
  EXPECT_EQ(apply_channel(f, ch, 3).samples, f.samples);
}

TEST(Channel, NoiseVarianceFormula) {
  // Eb/N0 = 15 dB, 4 bits/symbol, 8 samples/symbol → SNR per sample 15 + 10·log10(0.5) dB.
  EXPECT_NEAR(noise_variance(1.0, 15.0, 4, 8), 1.0 / (std::pow(10.0, 1.5) * 0.5), 1e-15);
}

TEST(Channel, MeasuredSnrMatchesEbN0) {
  const IqFrame f = shaped(20000, 2);  // 160k samples
  ChannelRealization ch;
  ch.eb_n0_db = 15.0;
  ch.gain_db = -12.0;
  const IqFrame g = apply_channel(f, ch, 9);
  const double a = std::pow(10.0, -12.0 / 20.0);
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < f.samples.size(); ++i) {
    ps += std::norm(a * f.samples[i]);
    pn += std::norm(g.samples[i] - a * f.samples[i]);
  }
  const double implied = 15.0 + 10.0 * std::log10(4.0 / 8.0);
  EXPECT_NEAR(10.0 * std::log10(ps / pn), implied, 0.3);
}

TEST(Channel, DopplerPhaseDrift) {
  IqFrame f;
  f.sample_rate_hz = 8e6;
  f.samples.assign(240001, cplx(1.0, 0.0));  // 30 ms span
  ChannelRealization ch;
  ch.doppler_hz = 1.0;
  ch.eb_n0_db = INFINITY;
  const IqFrame g = apply_channel(f, ch, 1);
  const double drift = std::arg(g.samples.back() / g.samples.front());
  EXPECT_NEAR(drift, 2.0 * kPi * 0.03, 1e-6);
}

TEST(Channel, SameSeedSameNoise) {
  const IqFrame f = shaped(300, 4);
  ChannelRealization ch;
  EXPECT_EQ(apply_channel(f, ch, 77).samples, apply_channel(f, ch, 77).samples);
  EXPECT_NE(apply_channel(f, ch, 77).samples, apply_channel(f, ch, 78).samples);
}

TEST(Channel, RejectsNonFinite) {
  const IqFrame f = shaped(10, 5);
  ChannelRealization ch;
  ch.gain_db = NAN;
  EXPECT_THROW(apply_channel(f, ch, 1), Error);
  ChannelRealization c2;
  c2.eb_n0_db = -INFINITY;
  EXPECT_THROW(apply_channel(f, c2, 1), Error);
}

}  // namespace
}  // namespace rfpuf
