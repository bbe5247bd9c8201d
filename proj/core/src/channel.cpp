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

#include "rfpuf/channel.hpp"

#include <cmath>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace rfpuf {

double noise_variance(double signal_power, double eb_n0_db,
                      int bits_per_symbol, int samples_per_symbol) {
  return signal_power /
         (db_to_power(eb_n0_db) * bits_per_symbol / samples_per_symbol);
}

IqFrame apply_channel(IqFrame frame, const ChannelRealization& ch,
                      std::uint64_t seed, int bits_per_symbol) {
  require(std::isfinite(ch.gain_db) && std::isfinite(ch.doppler_hz),
          "apply_channel: gain and Doppler must be finite");
  require(!std::isnan(ch.eb_n0_db) && ch.eb_n0_db != -INFINITY,
          "apply_channel: Eb/N0 must be finite or +inf");
  require(bits_per_symbol >= 1, "apply_channel: bits_per_symbol must be >= 1");

  const double gain = db_to_amplitude(ch.gain_db);
  if (gain != 1.0)
    for (cplx& s : frame.samples) s *= gain;

  apply_frequency_shift_inplace(frame.samples, ch.doppler_hz, frame.sample_rate_hz);

  if (std::isinf(ch.eb_n0_db)) return frame;
  const double p_sig = std::pow(rms(frame.samples), 2);
  const double var = noise_variance(p_sig, ch.eb_n0_db, bits_per_symbol,
                                    frame.samples_per_symbol);
  std::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> n(0.0, std::sqrt(var / 2.0));
  for (cplx& s : frame.samples) {
    const double re = n(rng);
    const double im = n(rng);
    s += cplx(re, im);
  }
  return frame;
}

}  // namespace rfpuf
