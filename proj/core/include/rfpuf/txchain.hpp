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
#include <filesystem>
#include <span>
#include <vector>

#include "rfpuf/common.hpp"
#include "rfpuf/devicegen.hpp"

namespace rfpuf {

/// Challenge bits, one per byte (0 or 1).
struct BitStream {
  std::vector<std::uint8_t> bits;

  std::size_t size() const noexcept { return bits.size(); }
  bool operator==(const BitStream&) const = default;
};

/// Complex-baseband samples plus the timing metadata downstream stages need.
/// Symbol n is centred on sample `first_symbol_sample + n * samples_per_symbol`.
struct IqFrame {
  std::vector<cplx> samples;
  double sample_rate_hz = 8e6;
  double symbol_rate_hz = 1e6;
  int samples_per_symbol = 8;
  std::size_t n_symbols = 0;
  std::size_t first_symbol_sample = 0;
  // Pulse-shaping filter that produced the frame (matched filter must agree).
  double rolloff = 0.35;
  int span_symbols = 10;

  std::size_t symbol_sample(std::size_t n) const {
    return first_symbol_sample + n * static_cast<std::size_t>(samples_per_symbol);
  }
  void validate() const;
};

struct FrameConfig {
  std::size_t frame_bits = 30000;
  int samples_per_symbol = 8;
  double rolloff = 0.35;
  int span_symbols = 10;
  double symbol_rate_hz = 1e6;
  double carrier_frequency_hz = 2.412e9;

  void validate() const;
};

inline constexpr int kBitsPerSymbol = 4;

BitStream generate_prbs(std::size_t length_bits, std::uint64_t seed);

/// Gray-mapped 16-QAM, unit average power. Per symbol the first two bits pick
/// the I level and the last two the Q level: 00→-3, 01→-1, 11→+1, 10→+3,
/// all divided by √10.
std::vector<cplx> map_16qam(const BitStream& bits);

/// The 16 constellation points, indexed by (I level index)*4 + (Q level index)
/// with levels ordered -3,-1,+1,+3.
std::span<const cplx, 16> qam16_points();

/// Unit-energy root-raised-cosine taps, span*sps + 1 long, symmetric.
std::vector<double> rrc_taps(int samples_per_symbol, double rolloff,
                             int span_symbols);

/// Zero-insertion upsampling followed by full convolution with rrc_taps().
/// The first symbol centre lands at span*sps/2 (the group delay).
IqFrame pulse_shape(std::span<const cplx> symbols, int samples_per_symbol,
                    double rolloff, int span_symbols,
                    double symbol_rate_hz = 1e6);

/// Single-branch I/Q mismatch: s_out = I + j·g·e^{jφ}·Q.
IqFrame apply_iq_imbalance(IqFrame frame, double gain_db, double phase_deg);
void apply_iq_imbalance_inplace(std::span<cplx> samples, double gain_db,
                                double phase_deg);

/// Rapp AM/AM compression with smoothness p = 2, phase preserved.
/// v_sat = rms(frame)·10^(backoff_db/20). For p = 2 the 1 dB compression
/// input amplitude is (10^0.2 - 1)^(1/4)·v_sat ≈ 0.8745·v_sat, so a back-off
/// B relative to v_sat is B + 1.165 dB relative to the 1 dB point.
IqFrame apply_pa_nonlinearity(IqFrame frame, double backoff_db);

inline constexpr double kRappSmoothness = 2.0;
double rapp_gain(double amplitude, double v_sat);

/// Multiplies sample k by e^{j2π·shift_hz·k/fs}.
IqFrame apply_frequency_shift(IqFrame frame, double shift_hz);
void apply_frequency_shift_inplace(std::span<cplx> samples, double shift_hz,
                                   double sample_rate_hz);

inline double ppm_to_hz(double ppm, double carrier_hz) {
  return ppm * 1e-6 * carrier_hz;
}

IqFrame apply_lo_offset(IqFrame frame, double offset_ppm, double carrier_hz);

/// map → pulse shape → I/Q imbalance → PA → LO offset.
IqFrame transmit(const BitStream& bits, const TxProfile& tx,
                 const FrameConfig& cfg);

double rms(std::span<const cplx> samples);

/// Writes `<path>` (little-endian interleaved I/Q doubles) and
/// `<path>.hdr` (key = value text: rates, counts, timing).
void write_iq_dump(const std::filesystem::path& path, const IqFrame& frame);
IqFrame read_iq_dump(const std::filesystem::path& path);

}  // namespace rfpuf
