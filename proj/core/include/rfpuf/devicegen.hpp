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

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

namespace rfpuf {

struct Gaussian {
  double mean = 0.0;
  double std_dev = 0.0;
};

/// Population statistics for transmitter and channel parameters. Defaults
/// are the 802.11b-channel-1 process model: carrier 2.412 GHz, LO offset
/// σ 8.3 ppm (20.1 kHz), I/Q gain 0±1 dB, I/Q phase 0±5°, PA back-off
/// 30±1 dB, Eb/N0 15±2 dB, Doppler 0±1 Hz.
struct ParamSpec {
  double carrier_frequency_hz = 2.412e9;
  Gaussian lo_offset_ppm{0.0, 8.3};
  Gaussian iq_gain_imbalance_db{0.0, 1.0};
  Gaussian iq_phase_imbalance_deg{0.0, 5.0};
  Gaussian pa_backoff_db{30.0, 1.0};
  Gaussian eb_n0_db{15.0, 2.0};
  Gaussian doppler_hz{0.0, 1.0};
  // Per-frame attenuation is uniform over this range (short-range links).
  double channel_gain_min_db = -30.0;
  double channel_gain_max_db = 0.0;

  /// Throws Error(InvalidArgument) on non-finite values, σ < 0, carrier ≤ 0
  /// or an inverted gain range.
  void validate() const;
};

/// One transmitter: the PUF instance. device_id doubles as class label.
struct TxProfile {
  int device_id = 0;
  double lo_offset_ppm = 0.0;
  double iq_gain_imbalance_db = 0.0;
  double iq_phase_imbalance_deg = 0.0;
  double pa_backoff_db = 0.0;

  bool operator==(const TxProfile&) const = default;
};

struct ChannelRealization {
  double eb_n0_db = 15.0;
  double doppler_hz = 0.0;
  double gain_db = 0.0;

  bool operator==(const ChannelRealization&) const = default;
};

/// Normal draw truncated to mean ± 3σ by rejection (resample on violation).
double sample_truncated_normal(const Gaussian& g, std::mt19937_64& rng);

/// Creates n transmitters. Device i draws from its own derived seed, so the
/// first k profiles of a size-n fleet equal the size-k fleet.
std::vector<TxProfile> sample_fleet(std::size_t n, const ParamSpec& spec,
                                    std::uint64_t seed);

ChannelRealization sample_channel(const ParamSpec& spec, std::uint64_t seed);

/// CSV-style fleet file: header line, then one `id,lo,gain,phase,backoff`
/// record per device with 17 significant digits.
void write_fleet(std::ostream& os, std::span<const TxProfile> fleet);
std::vector<TxProfile> read_fleet(std::istream& is);

}  // namespace rfpuf
