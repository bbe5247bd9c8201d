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
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "rfpuf/devicegen.hpp"
#include "rfpuf/txchain.hpp"

namespace rfpuf {

/// Receiver-side impairments. All zeros is the ideal receiver.
struct RxProfile {
  double lo_offset_ppm = 0.0;
  double iq_gain_imbalance_db = 0.0;
  double iq_phase_imbalance_deg = 0.0;

  bool is_ideal() const noexcept {
    return lo_offset_ppm == 0.0 && iq_gain_imbalance_db == 0.0 &&
           iq_phase_imbalance_deg == 0.0;
  }
  /// Draws a receiver from the transmitter LO/I-Q statistics of `spec`.
  static RxProfile sample(const ParamSpec& spec, std::uint64_t seed);
};

enum class Feature : std::size_t {
  FreqOffsetPpm = 0,
  GainImbalanceDb,
  PhaseImbalanceDeg,
  RingCompression,
  ResidualEvm,
  AgcGainDb,
  FreqDriftHz,
  SnrDb,
};

inline constexpr std::size_t kFeatureCount = 8;
inline constexpr std::size_t kDeviceFeatureCount = 5;

/// Five device features followed by three channel features.
struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  bool operator==(const FeatureVector&) const = default;

  static std::span<const std::string_view, kFeatureCount> names();
};

struct ReceiverConfig {
  bool matched_filter = true;
  double carrier_frequency_hz = 2.412e9;
};

struct AgcResult {
  IqFrame frame;
  double gain_db = 0.0;
};

/// Normalizes the frame to unit RMS; gain_db = -20·log10(input RMS).
AgcResult agc(IqFrame frame);

/// RRC matched filter, output aligned with the input (group delay removed),
/// so symbol centres keep their sample indices. `bypass` returns the input.
/// Throws if rolloff/span disagree with the frame's pulse-shaping metadata.
IqFrame matched_filter(const IqFrame& frame, double rolloff, int span_symbols,
                       bool bypass = false);

/// Symbol-rate samples at the known symbol centres.
std::vector<cplx> sample_symbols(const IqFrame& frame);

/// Equivalent to sample_symbols(matched_filter(frame, ...)) but evaluates
/// the filter only at symbol centres. Results are bit-identical.
std::vector<cplx> matched_filter_symbols(const IqFrame& frame, double rolloff,
                                         int span_symbols, bool bypass = false);

struct FrequencyEstimate {
  double coarse_hz = 0.0;
  double fine_hz = 0.0;
  double peak_to_median_db = 0.0;
  double total_hz() const { return coarse_hz + fine_hz; }
};

inline constexpr std::size_t kMinFrequencySymbols = 512;
inline constexpr double kMinPeakToMedianDb = 6.0;

/// Blind two-stage offset estimate on a symbol-rate sequence: coarse is the
/// peak of the zero-padded FFT of y⁴ divided by 4, fine is a decision-
/// directed phase-slope regression after coarse correction.
/// Throws Error(EstimationFailure) when no spectral line stands out.
FrequencyEstimate estimate_frequency(std::span<const cplx> symbols,
                                     double symbol_rate_hz);

/// Frame-level wrapper: decimates at symbol centres first. Requires at
/// least 4096 samples.
double estimate_frequency_offset(const IqFrame& frame);

/// Second-half minus first-half fine estimate (both after the full-frame
/// coarse correction). Used as the Doppler proxy.
double estimate_frequency_drift(std::span<const cplx> symbols,
                                double symbol_rate_hz);
double estimate_frequency_drift(const IqFrame& frame);
/// Same, reusing an already computed coarse estimate.
double estimate_frequency_drift(std::span<const cplx> symbols, double symbol_rate_hz,
                                double coarse_hz);

/// Moment inversion of s = I + j·g·e^{jφ}·Q using A = E[I²], B = E[Q²],
/// C = E[I·Q]:  φ = atan(-C/B),  g = sqrt(B / (cos²φ·(A - B·tan²φ))).
struct IqMoments {
  double gain_db = 0.0;
  double phase_deg = 0.0;
};
IqMoments estimate_iq_moments(std::span<const cplx> symbols);

struct IqFeatures {
  double gain_db = 0.0;
  double phase_deg = 0.0;
  double ring_compression = 1.0;
  double evm = 0.0;
  double snr_db = 0.0;
};

inline constexpr std::size_t kMinSymbolsPerRing = 100;

/// Expects frequency-corrected symbols. Seeds a 2x2 linear model from the
/// moment inversion, refines it by decision-directed least squares, then
/// reads gain/phase from its triangular factor. Ring compression and EVM are
/// measured on the equalized symbols. Throws Error(InsufficientData) when
/// either the outer or inner ring has fewer than 100 decisions.
IqFeatures extract_iq_features(std::span<const cplx> symbols);

/// Rx impairments → AGC → matched filter → frequency estimate and
/// correction → drift → symbol decimation → I/Q features.
/// Any stage failure is reported as Error(FrameRejected).
FeatureVector receive_and_extract(const IqFrame& frame, const RxProfile& rx,
                                  const ReceiverConfig& cfg);

/// Applies receiver impairments: LO rotation, then mixer I/Q imbalance.
IqFrame apply_receiver_impairments(IqFrame frame, const RxProfile& rx,
                                   double carrier_hz);

/// CSV export: the eight feature names plus a device_id label column.
void write_feature_csv(std::ostream& os, std::span<const FeatureVector> rows,
                       std::span<const int> labels);

}  // namespace rfpuf
