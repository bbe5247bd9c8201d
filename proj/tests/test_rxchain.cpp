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
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "rfpuf/channel.hpp"
#include "rfpuf/pipeline.hpp"
#include "rfpuf/rxchain.hpp"

namespace rfpuf {
namespace {

constexpr double kCarrier = 2.412e9;

TxProfile clean_tx() {
  TxProfile p;
  p.pa_backoff_db = 200.0;
  return p;
}

IqFrame make_frame(const TxProfile& tx, std::size_t bits, std::uint64_t seed, double ebn0_db = 15.0) {
  FrameConfig cfg;
  cfg.frame_bits = bits;
  IqFrame f = transmit(generate_prbs(bits, seed), tx, cfg);
  ChannelRealization ch;
  ch.eb_n0_db = ebn0_db;
  return apply_channel(std::move(f), ch, derive_seed(seed, 0, Stream::Noise));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

TEST(Agc, NormalizesAndReportsGain) {
  IqFrame f;
  f.samples.assign(1000, cplx(0.5, 0.0));
  const AgcResult r = agc(f);
  EXPECT_NEAR(r.gain_db, 20.0 * std::log10(2.0), 1e-12);
  EXPECT_NEAR(rms(r.frame.samples), 1.0, 1e-12);
  EXPECT_NEAR(agc(r.frame).gain_db, 0.0, 1e-12);
}

TEST(Agc, RecoversChannelAttenuation) {
  TxProfile p = clean_tx();
  IqFrame f = transmit(generate_prbs(30000, 1), p, FrameConfig{});
  const double scale = 1.0 / rms(f.samples);
  for (auto& s : f.samples) s *= scale;
  ChannelRealization ch;
  ch.gain_db = -20.0;
  ch.eb_n0_db = std::numeric_limits<double>::infinity();
  const IqFrame clean = apply_channel(f, ch, 5);
  EXPECT_NEAR(agc(clean).gain_db, 20.0, 1e-9);

  // With noise the AGC normalizes signal plus noise power.
  ch.eb_n0_db = 15.0;
  const IqFrame noisy = apply_channel(f, ch, 5);
  double p_noise = 0.0;
  for (std::size_t i = 0; i < noisy.samples.size(); ++i)
    p_noise += std::norm(noisy.samples[i] - clean.samples[i]);
  p_noise /= static_cast<double>(noisy.samples.size());
  const double p_sig = std::pow(rms(clean.samples), 2);
  const double expected = 20.0 - 10.0 * std::log10(1.0 + p_noise / p_sig);
  EXPECT_NEAR(agc(noisy).gain_db, expected, 0.01);
}

TEST(Agc, RejectsSilence) {
  IqFrame f;
  f.samples.assign(10, cplx{});
  EXPECT_THROW(agc(f), Error);
}

TEST(MatchedFilter, CascadeSamplesAreIsiFree) {
  const auto sym = map_16qam(generate_prbs(4000, 2));
  const IqFrame f = pulse_shape(sym, 8, 0.35, 10);
  const auto out = sample_symbols(matched_filter(f, 0.35, 10));
  ASSERT_EQ(out.size(), sym.size());
  double err = 0.0, sig = 0.0;
  // Skip the filter transients at both ends.
  for (std::size_t n = 20; n + 20 < sym.size(); ++n) {
    err += std::norm(out[n] - sym[n]);
    sig += std::norm(sym[n]);
  }
  EXPECT_LE(10.0 * std::log10(err / sig), -40.0);
}

TEST(MatchedFilter, SymbolCentreShortcutIsExact) {
  const IqFrame f = make_frame(clean_tx(), 4000, 3);
  EXPECT_EQ(matched_filter_symbols(f, 0.35, 10), sample_symbols(matched_filter(f, 0.35, 10)));
  EXPECT_EQ(matched_filter_symbols(f, 0.35, 10, true), sample_symbols(f));
}

TEST(MatchedFilter, BypassReturnsInput) {
  const IqFrame f = make_frame(clean_tx(), 400, 4);
  EXPECT_EQ(matched_filter(f, 0.35, 10, true).samples, f.samples);
}

TEST(MatchedFilter, RejectsMismatchedFilter) {
  const IqFrame f = make_frame(clean_tx(), 400, 4);
  EXPECT_THROW(matched_filter(f, 0.5, 10), Error);
}

double freq_error_ppm(const TxProfile& tx, std::size_t bits, std::uint64_t seed) {
  const IqFrame f = make_frame(tx, bits, seed);
  const auto sym = matched_filter_symbols(f, 0.35, 10);
  const double hz = estimate_frequency(sym, f.symbol_rate_hz).total_hz();
  return hz / kCarrier * 1e6 - tx.lo_offset_ppm;
}

TEST(Frequency, NullOffset) {
  EXPECT_LT(std::abs(freq_error_ppm(clean_tx(), 30000, 10)), 0.2);
}

TEST(Frequency, TableOneAnchorOffset) {
  TxProfile p = clean_tx();
  p.lo_offset_ppm = 8.3;
  EXPECT_LT(std::abs(freq_error_ppm(p, 30000, 11)), 0.2);
  EXPECT_NEAR(estimate_frequency_offset(make_frame(p, 30000, 12)), 20019.6, 0.2e-6 * kCarrier);
}

TEST(Frequency, LongerFramesEstimateBetter) {
  TxProfile p = clean_tx();
  p.lo_offset_ppm = 5.0;
  std::vector<double> short_err, long_err;
  for (std::uint64_t t = 0; t < 50; ++t) {
    short_err.push_back(std::abs(freq_error_ppm(p, 3000, 100 + t)));
    long_err.push_back(std::abs(freq_error_ppm(p, 30000, 200 + t)));
  }
  EXPECT_LT(median(long_err), median(short_err));
}

TEST(Frequency, NeedsEnoughSymbols) {
  const IqFrame f = make_frame(clean_tx(), 400, 13);
  EXPECT_THROW(estimate_frequency(sample_symbols(f), 1e6), Error);
  EXPECT_THROW(estimate_frequency_offset(f), Error);
}

TEST(Drift, ConstantOffsetHasNoDrift) {
  // Noise floor of one drift half: RMS error of an estimate over half a frame.
  TxProfile p = clean_tx();
  p.lo_offset_ppm = 3.0;
  double half_sq = 0.0, drift_sq = 0.0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const IqFrame half = make_frame(p, 15000, 300 + t);
    const double e = estimate_frequency_offset(half) - ppm_to_hz(3.0, kCarrier);
    half_sq += e * e;
    const double d = estimate_frequency_drift(make_frame(p, 30000, 400 + t));
    drift_sq += d * d;
  }
  EXPECT_LT(std::sqrt(drift_sq / trials), 2.0 * std::sqrt(half_sq / trials));
}

TEST(Drift, Deterministic) {
  const IqFrame f = make_frame(clean_tx(), 30000, 15);
  EXPECT_EQ(estimate_frequency_drift(f), estimate_frequency_drift(f));
}

TEST(Drift, RecoversLinearSweep) {
  // f(t) = f0 + k·t; the half-frame centres are T/2 apart, so drift = k·T/2.
  const double k = 4000.0;  // Hz/s
  std::vector<double> err;
  for (std::uint64_t t = 0; t < 10; ++t) {
    FrameConfig cfg;
    IqFrame f = transmit(generate_prbs(30000, 500 + t), clean_tx(), cfg);
    const double fs = f.sample_rate_hz;
    for (std::size_t n = 0; n < f.samples.size(); ++n) {
      const double tt = static_cast<double>(n) / fs;
      f.samples[n] *= std::polar(1.0, 2.0 * kPi * (1000.0 * tt + 0.5 * k * tt * tt));
    }
    ChannelRealization ch;
    f = apply_channel(std::move(f), ch, 600 + t);
    const double span = static_cast<double>(f.n_symbols) / f.symbol_rate_hz;
    const auto sym = matched_filter_symbols(f, 0.35, 10);
    err.push_back(estimate_frequency_drift(sym, f.symbol_rate_hz) - k * span / 2.0);
  }
  EXPECT_LT(std::abs(median(err)), 1.0);  // 15 Hz injected
}

std::vector<cplx> ideal_symbols(std::size_t n, std::uint64_t seed) {
  return map_16qam(generate_prbs(4 * n, seed));
}

TEST(IqFeatures, IdealSymbols) {
  const IqFeatures f = extract_iq_features(ideal_symbols(7500, 20));
  EXPECT_NEAR(f.gain_db, 0.0, 1e-9);
  EXPECT_NEAR(f.phase_deg, 0.0, 1e-9);
  EXPECT_NEAR(f.ring_compression, 1.0, 1e-9);
  EXPECT_LT(f.evm, 1e-6);
  EXPECT_GT(f.snr_db, 100.0);
}

TEST(IqFeatures, RecoversInjectedImbalance) {
  auto sym = ideal_symbols(7500, 21);
  apply_iq_imbalance_inplace(sym, 1.0, 5.0);
  const IqFeatures f = extract_iq_features(sym);
  EXPECT_NEAR(f.gain_db, 1.0, 0.02);
  EXPECT_NEAR(f.phase_deg, 5.0, 0.1);
  // The moment inversion assumes E[I·Q] = 0 and E[I²] = E[Q²]; a balanced
  // constellation meets both exactly.
  std::vector<cplx> balanced;
  for (int rep = 0; rep < 100; ++rep)
    for (const cplx& p : qam16_points()) balanced.push_back(p);
  apply_iq_imbalance_inplace(balanced, 1.0, 5.0);
  const IqMoments m = estimate_iq_moments(balanced);
  EXPECT_NEAR(m.gain_db, 1.0, 1e-9);
  EXPECT_NEAR(m.phase_deg, 5.0, 1e-9);
}

TEST(IqFeatures, RingCompressionMatchesRappModel) {
  for (double backoff : {30.0, 3.0}) {
    IqFrame f;
    f.samples_per_symbol = 1;
    f.samples = ideal_symbols(20000, 22);
    const IqFrame g = apply_pa_nonlinearity(f, backoff);
    const IqFeatures feat = extract_iq_features(g.samples);
    // The PA saturates relative to the frame RMS; ring radii are √0.2 and √1.8.
    const double v_sat = rms(f.samples) * std::pow(10.0, backoff / 20.0);
    const double expected = rapp_gain(std::sqrt(1.8), v_sat) / rapp_gain(std::sqrt(0.2), v_sat);
    EXPECT_LT(feat.ring_compression, 1.0) << backoff;
    EXPECT_NEAR(feat.ring_compression, expected, 0.01 * expected) << backoff;
  }
}

TEST(IqFeatures, TooFewRingDecisions) {
  EXPECT_THROW(extract_iq_features(ideal_symbols(50, 23)), Error);
}

TEST(Receiver, CleanLinkIsNominal) {
  FrameConfig cfg;
  const IqFrame f = transmit(generate_prbs(30000, 30), clean_tx(), cfg);
  const FeatureVector fv = receive_and_extract(f, RxProfile{}, ReceiverConfig{});
  EXPECT_NEAR(fv[Feature::FreqOffsetPpm], 0.0, 1e-3);
  EXPECT_NEAR(fv[Feature::GainImbalanceDb], 0.0, 1e-3);
  EXPECT_NEAR(fv[Feature::PhaseImbalanceDeg], 0.0, 1e-2);
  EXPECT_NEAR(fv[Feature::RingCompression], 1.0, 1e-3);
  EXPECT_LT(fv[Feature::ResidualEvm], 1e-2);
  EXPECT_NEAR(fv[Feature::FreqDriftHz], 0.0, 1.0);
}

TEST(Receiver, SampledTransmittersAreRecovered) {
  const auto fleet = sample_fleet(10, ParamSpec{}, 31);
  for (const auto& tx : fleet) {
    const IqFrame f = make_frame(tx, 30000, 40 + static_cast<std::uint64_t>(tx.device_id));
    const FeatureVector fv = receive_and_extract(f, RxProfile{}, ReceiverConfig{});
    EXPECT_NEAR(fv[Feature::FreqOffsetPpm], tx.lo_offset_ppm, 0.3) << tx.device_id;
  }
}

TEST(Receiver, RxLoOffsetBiasesFrequency) {
  TxProfile tx = clean_tx();
  tx.lo_offset_ppm = -4.0;
  tx.pa_backoff_db = 30.0;
  const IqFrame f = make_frame(tx, 30000, 50);
  RxProfile rx;
  rx.lo_offset_ppm = 2.0;
  const double ideal = receive_and_extract(f, RxProfile{}, ReceiverConfig{})[Feature::FreqOffsetPpm];
  const double biased = receive_and_extract(f, rx, ReceiverConfig{})[Feature::FreqOffsetPpm];
  EXPECT_NEAR(biased - ideal, 2.0, 0.05);
}

TEST(Receiver, SymbolErrorRateAtFifteenDb) {
  TxProfile tx = clean_tx();
  tx.pa_backoff_db = 30.0;
  const BitStream bits = generate_prbs(30000, 60);
  IqFrame f = transmit(bits, tx, FrameConfig{});
  ChannelRealization ch;
  f = apply_channel(std::move(f), ch, 61);
  auto sym = matched_filter_symbols(agc(f).frame, 0.35, 10);
  const double scale = 1.0 / rms(sym);
  const auto ref = map_16qam(bits);
  const auto pts = qam16_points();
  std::size_t errors = 0;
  for (std::size_t n = 0; n < sym.size(); ++n) {
    const cplx z = sym[n] * scale;
    const auto best = std::min_element(pts.begin(), pts.end(),
                                       [&](cplx a, cplx b) { return std::norm(z - a) < std::norm(z - b); });
    errors += std::norm(*best - ref[n]) > 1e-12;
  }
  EXPECT_LT(static_cast<double>(errors) / static_cast<double>(sym.size()), 1e-3);
}

TEST(Receiver, Deterministic) {
  const IqFrame f = make_frame(clean_tx(), 30000, 70);
  RxProfile rx{1.0, 0.5, 2.0};
  EXPECT_EQ(receive_and_extract(f, rx, ReceiverConfig{}), receive_and_extract(f, rx, ReceiverConfig{}));
}

TEST(Receiver, FeatureNames) {
  const auto names = FeatureVector::names();
  EXPECT_EQ(names[0], "est_freq_offset_ppm");
  EXPECT_EQ(names.size(), kFeatureCount);
}

}  // namespace
}  // namespace rfpuf
