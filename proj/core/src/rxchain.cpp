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

#include "rfpuf/rxchain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "rfpuf/fft.hpp"

namespace rfpuf {
namespace {

constexpr double kSqrt10 = 3.1622776601683795;

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "est_freq_offset_ppm", "est_gain_imbalance_db", "est_phase_imbalance_deg",
    "est_ring_compression", "est_residual_evm",     "est_agc_gain_db",
    "est_freq_drift_hz",    "est_snr_db"};

// Nearest 16-QAM level on one axis, in unnormalized units {-3,-1,1,3}.
inline double slice_level(double v) {
  const double x = v * kSqrt10;
  double level = 2.0 * std::floor(x / 2.0) + 1.0;
  return std::clamp(level, -3.0, 3.0);
}

inline cplx decide(cplx v) {
  return cplx(slice_level(v.real()), slice_level(v.imag())) / kSqrt10;
}

// Blind carrier phase from the fourth-power mean, on the branch nearest zero.
double fourth_power_phase(std::span<const cplx> z) {
  cplx acc{};
  for (const cplx& v : z) {
    const cplx v2 = v * v;
    acc += v2 * v2;
  }
  // E[s⁴] of 16-QAM is real and negative.
  double theta = (std::arg(acc) - kPi) / 4.0;
  while (theta <= -kPi / 4.0) theta += kPi / 2.0;
  while (theta > kPi / 4.0) theta -= kPi / 2.0;
  return theta;
}

double mean_power(std::span<const cplx> z) {
  double acc = 0.0;
  for (const cplx& v : z) acc += std::norm(v);
  return z.empty() ? 0.0 : acc / static_cast<double>(z.size());
}

// Decision-directed slope of the phase error, in cycles per symbol.
double phase_slope(std::span<const cplx> z) {
  const double theta = fourth_power_phase(z);
  const double p = mean_power(z);
  if (p <= 0.0) fail(ErrorKind::EstimationFailure, "zero-power symbol block");
  const cplx derot = std::polar(1.0 / std::sqrt(p), -theta);
  const double n_mean = 0.5 * static_cast<double>(z.size() - 1);
  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  for (std::size_t n = 0; n < z.size(); ++n) {
    const cplx v = z[n] * derot;
    const cplx d = decide(v);
    const double e = std::arg(v * std::conj(d));
    const double w = std::norm(d);
    const double x = static_cast<double>(n) - n_mean;
    sw += w;
    swx += w * x;
    swy += w * e;
    swxx += w * x * x;
    swxy += w * x * e;
  }
  const double denom = sw * swxx - swx * swx;
  if (denom <= 0.0) fail(ErrorKind::EstimationFailure, "degenerate phase regression");
  return (sw * swxy - swx * swy) / denom / (2.0 * kPi);
}

std::vector<cplx> derotate(std::span<const cplx> symbols, double cycles_per_symbol) {
  std::vector<cplx> out(symbols.begin(), symbols.end());
  apply_frequency_shift_inplace(out, -cycles_per_symbol, 1.0);
  return out;
}

// Refines `start_hz` on `symbols` with two decision-directed passes.
double refine_frequency(std::span<const cplx> symbols, double symbol_rate_hz,
                        double start_hz) {
  double total = start_hz;
  for (int pass = 0; pass < 2; ++pass) {
    const std::vector<cplx> z = derotate(symbols, total / symbol_rate_hz);
    total += phase_slope(z) * symbol_rate_hz;
  }
  return total;
}

struct CoarseEstimate {
  double hz = 0.0;
  double peak_to_median_db = 0.0;
};

CoarseEstimate coarse_frequency(std::span<const cplx> symbols, double symbol_rate_hz) {
  const double p = mean_power(symbols);
  if (!(p > 0.0)) fail(ErrorKind::EstimationFailure, "zero-power symbol stream");
  const double scale = 1.0 / p;
  std::vector<cplx> x4(symbols.size());
  for (std::size_t n = 0; n < symbols.size(); ++n) {
    const cplx v2 = symbols[n] * symbols[n] * scale;
    x4[n] = v2 * v2;
  }
  const std::size_t length = 4 * next_pow2(symbols.size());
  const std::vector<cplx> spectrum = fft(x4, length);
  std::vector<double> power(length);
  for (std::size_t k = 0; k < length; ++k) power[k] = std::norm(spectrum[k]);

  const std::size_t peak =
      static_cast<std::size_t>(std::max_element(power.begin(), power.end()) - power.begin());
  std::vector<double> sorted = power;
  auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(length / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double median = *mid;
  const double ratio_db =
      median > 0.0 ? 10.0 * std::log10(power[peak] / median) : INFINITY;
  if (!(ratio_db >= kMinPeakToMedianDb))
    fail(ErrorKind::EstimationFailure,
         "no dominant fourth-power spectral line (peak/median " +
             std::to_string(ratio_db) + " dB)");

  const double a = std::sqrt(power[(peak + length - 1) % length]);
  const double b = std::sqrt(power[peak]);
  const double c = std::sqrt(power[(peak + 1) % length]);
  const double curvature = a - 2.0 * b + c;
  const double delta = curvature != 0.0 ? 0.5 * (a - c) / curvature : 0.0;

  double bin = static_cast<double>(peak) + std::clamp(delta, -0.5, 0.5);
  if (bin >= static_cast<double>(length) / 2.0) bin -= static_cast<double>(length);
  const double f4 = bin / static_cast<double>(length) * symbol_rate_hz;
  return {f4 / 4.0, ratio_db};
}

std::vector<cplx> filter_symbols_impl(const IqFrame& frame, std::span<const double> h,
                                      bool all_samples) {
  const std::size_t taps = h.size();
  const std::size_t half = (taps - 1) / 2;
  const std::size_t n_out = all_samples ? frame.samples.size() : frame.n_symbols;
  const auto& x = frame.samples;
  std::vector<cplx> out(n_out);
  for (std::size_t m = 0; m < n_out; ++m) {
    const std::size_t k = all_samples ? m : frame.symbol_sample(m);
    // y[k] = Σ_j h[j]·x[k + half - j]
    double re = 0.0, im = 0.0;
    const std::ptrdiff_t base =
        static_cast<std::ptrdiff_t>(k + half);
    const std::size_t j_lo =
        base >= static_cast<std::ptrdiff_t>(x.size()) ? static_cast<std::size_t>(base) - x.size() + 1 : 0;
    const std::size_t j_hi = std::min(taps - 1, static_cast<std::size_t>(base));
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
      const cplx& s = x[static_cast<std::size_t>(base) - j];
      re += h[j] * s.real();
      im += h[j] * s.imag();
    }
    out[m] = cplx(re, im);
  }
  return out;
}

void check_filter_params(const IqFrame& frame, double rolloff, int span_symbols) {
  require(rolloff == frame.rolloff && span_symbols == frame.span_symbols,
          "matched filter parameters do not match the frame's pulse shaping");
}

// 2x2 real matrix acting on (I, Q).
struct Mat2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;  // [[a, b], [c, d]]

  cplx apply(cplx v) const {
    return cplx(a * v.real() + b * v.imag(), c * v.real() + d * v.imag());
  }
  double det() const { return a * d - b * c; }
  Mat2 inverse() const {
    const double k = 1.0 / det();
    return {d * k, -b * k, -c * k, a * k};
  }
};

Mat2 fit_linear_model(std::span<const cplx> y, std::span<const cplx> decisions) {
  double yi_di = 0, yi_dq = 0, yq_di = 0, yq_dq = 0;
  double di_di = 0, di_dq = 0, dq_dq = 0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    const double di = decisions[n].real(), dq = decisions[n].imag();
    yi_di += y[n].real() * di;
    yi_dq += y[n].real() * dq;
    yq_di += y[n].imag() * di;
    yq_dq += y[n].imag() * dq;
    di_di += di * di;
    di_dq += di * dq;
    dq_dq += dq * dq;
  }
  const Mat2 syd{yi_di, yi_dq, yq_di, yq_dq};
  const Mat2 sdd{di_di, di_dq, di_dq, dq_dq};
  if (!(std::abs(sdd.det()) > 0.0))
    fail(ErrorKind::InsufficientData, "decisions do not span the I/Q plane");
  const Mat2 inv = sdd.inverse();
  return {syd.a * inv.a + syd.b * inv.c, syd.a * inv.b + syd.b * inv.d,
          syd.c * inv.a + syd.d * inv.c, syd.c * inv.b + syd.d * inv.d};
}

}  // namespace

RxProfile RxProfile::sample(const ParamSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  RxProfile rx;
  rx.lo_offset_ppm = sample_truncated_normal(spec.lo_offset_ppm, rng);
  rx.iq_gain_imbalance_db = sample_truncated_normal(spec.iq_gain_imbalance_db, rng);
  rx.iq_phase_imbalance_deg = sample_truncated_normal(spec.iq_phase_imbalance_deg, rng);
  return rx;
}

std::span<const std::string_view, kFeatureCount> FeatureVector::names() {
  return kFeatureNames;
}

AgcResult agc(IqFrame frame) {
  const double level = rms(frame.samples);
  if (!(level > 0.0)) fail(ErrorKind::EstimationFailure, "agc: all-zero frame");
  const double scale = 1.0 / level;
  for (cplx& s : frame.samples) s *= scale;
  return {std::move(frame), -20.0 * std::log10(level)};
}

IqFrame matched_filter(const IqFrame& frame, double rolloff, int span_symbols,
                       bool bypass) {
  check_filter_params(frame, rolloff, span_symbols);
  if (bypass) return frame;
  const std::vector<double> h = rrc_taps(frame.samples_per_symbol, rolloff, span_symbols);
  IqFrame out = frame;
  out.samples = filter_symbols_impl(frame, h, true);
  return out;
}

std::vector<cplx> sample_symbols(const IqFrame& frame) {
  require(frame.n_symbols == 0 ||
              frame.symbol_sample(frame.n_symbols - 1) < frame.samples.size(),
          "sample_symbols: symbol timing exceeds frame length");
  std::vector<cplx> out(frame.n_symbols);
  for (std::size_t n = 0; n < frame.n_symbols; ++n)
    out[n] = frame.samples[frame.symbol_sample(n)];
  return out;
}

std::vector<cplx> matched_filter_symbols(const IqFrame& frame, double rolloff,
                                         int span_symbols, bool bypass) {
  check_filter_params(frame, rolloff, span_symbols);
  if (bypass) return sample_symbols(frame);
  require(frame.n_symbols == 0 ||
              frame.symbol_sample(frame.n_symbols - 1) < frame.samples.size(),
          "matched_filter_symbols: symbol timing exceeds frame length");
  const std::vector<double> h = rrc_taps(frame.samples_per_symbol, rolloff, span_symbols);
  return filter_symbols_impl(frame, h, false);
}

FrequencyEstimate estimate_frequency(std::span<const cplx> symbols,
                                     double symbol_rate_hz) {
  if (symbols.size() < kMinFrequencySymbols)
    fail(ErrorKind::InsufficientData,
         "frequency estimation needs at least " +
             std::to_string(kMinFrequencySymbols) + " symbols");
  const CoarseEstimate coarse = coarse_frequency(symbols, symbol_rate_hz);
  const double total = refine_frequency(symbols, symbol_rate_hz, coarse.hz);
  return {coarse.hz, total - coarse.hz, coarse.peak_to_median_db};
}

double estimate_frequency_offset(const IqFrame& frame) {
  require(frame.samples.size() >= 4096,
          "estimate_frequency_offset: frame needs at least 4096 samples");
  return estimate_frequency(sample_symbols(frame), frame.symbol_rate_hz).total_hz();
}

double estimate_frequency_drift(std::span<const cplx> symbols, double symbol_rate_hz) {
  if (symbols.size() < 2 * kMinFrequencySymbols)
    fail(ErrorKind::InsufficientData, "drift estimation needs two half-frames");
  return estimate_frequency_drift(symbols, symbol_rate_hz,
                                  coarse_frequency(symbols, symbol_rate_hz).hz);
}

double estimate_frequency_drift(std::span<const cplx> symbols, double symbol_rate_hz,
                                double coarse_hz) {
  if (symbols.size() < 2 * kMinFrequencySymbols)
    fail(ErrorKind::InsufficientData, "drift estimation needs two half-frames");
  const std::size_t half = symbols.size() / 2;
  const double first = refine_frequency(symbols.first(half), symbol_rate_hz, coarse_hz);
  const double second = refine_frequency(symbols.subspan(half, half), symbol_rate_hz, coarse_hz);
  return second - first;
}

double estimate_frequency_drift(const IqFrame& frame) {
  return estimate_frequency_drift(sample_symbols(frame), frame.symbol_rate_hz);
}

IqMoments estimate_iq_moments(std::span<const cplx> symbols) {
  require(!symbols.empty(), "estimate_iq_moments: no symbols");
  double a = 0.0, b = 0.0, c = 0.0;
  for (const cplx& s : symbols) {
    a += s.real() * s.real();
    b += s.imag() * s.imag();
    c += s.real() * s.imag();
  }
  const double n = static_cast<double>(symbols.size());
  a /= n;
  b /= n;
  c /= n;
  if (!(b > 0.0)) fail(ErrorKind::EstimationFailure, "no quadrature power");
  const double phi = std::atan(-c / b);
  const double t = std::tan(phi);
  const double base = a - b * t * t;
  if (!(base > 0.0)) fail(ErrorKind::EstimationFailure, "moment inversion is singular");
  const double g = std::sqrt(b / (std::cos(phi) * std::cos(phi) * base));
  return {20.0 * std::log10(g), rad_to_deg(phi)};
}

IqFeatures extract_iq_features(std::span<const cplx> symbols) {
  require(!symbols.empty(), "extract_iq_features: no symbols");
  const double p = mean_power(symbols);
  if (!(p > 0.0)) fail(ErrorKind::InsufficientData, "zero-power symbols");

  // Power-normalize and remove the blind carrier phase.
  const cplx pre = std::polar(1.0 / std::sqrt(p), -fourth_power_phase(symbols));
  std::vector<cplx> y(symbols.size());
  for (std::size_t n = 0; n < y.size(); ++n) y[n] = symbols[n] * pre;

  // Seed: y ≈ c·M·s with M from the moment inversion.
  Mat2 model;
  try {
    const IqMoments m = estimate_iq_moments(y);
    const double g = db_to_amplitude(m.gain_db);
    const double phi = deg_to_rad(m.phase_deg);
    double a = 0.0, b = 0.0;
    for (const cplx& v : y) {
      a += v.real() * v.real();
      b += v.imag() * v.imag();
    }
    a /= static_cast<double>(y.size());
    b /= static_cast<double>(y.size());
    const double t = std::tan(phi);
    const double c = std::sqrt(2.0 * (a - b * t * t));
    model = {c, -c * g * std::sin(phi), 0.0, c * g * std::cos(phi)};
  } catch (const Error&) {
    model = {};
  }

  std::vector<cplx> decisions(y.size());
  for (int pass = 0; pass < 4; ++pass) {
    if (!(std::abs(model.det()) > 0.0))
      fail(ErrorKind::EstimationFailure, "singular I/Q model");
    const Mat2 inv = model.inverse();
    for (std::size_t n = 0; n < y.size(); ++n) decisions[n] = decide(inv.apply(y[n]));
    model = fit_linear_model(y, decisions);
  }

  // model = R(θ)·U with U upper triangular: U = r11·[[1, -g sinφ], [0, g cosφ]].
  const double r11 = std::hypot(model.a, model.c);
  const double theta = std::atan2(model.c, model.a);
  const double u01 = std::cos(theta) * model.b + std::sin(theta) * model.d;
  const double u11 = -std::sin(theta) * model.b + std::cos(theta) * model.d;
  if (!(r11 > 0.0) || !(u11 > 0.0))
    fail(ErrorKind::EstimationFailure, "I/Q model is not orientation-preserving");

  IqFeatures f;
  f.gain_db = 20.0 * std::log10(std::hypot(u11, u01) / r11);
  f.phase_deg = rad_to_deg(std::atan2(-u01, u11));

  const Mat2 inv = model.inverse();
  double err = 0.0;
  double outer_sum = 0.0, inner_sum = 0.0;
  std::size_t outer_n = 0, inner_n = 0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    const cplx z = inv.apply(y[n]);
    const cplx d = decide(z);
    err += std::norm(z - d);
    const double li = std::abs(d.real() * kSqrt10), lq = std::abs(d.imag() * kSqrt10);
    if (li > 2.0 && lq > 2.0) {
      outer_sum += std::abs(z);
      ++outer_n;
    } else if (li < 2.0 && lq < 2.0) {
      inner_sum += std::abs(z);
      ++inner_n;
    }
  }
  if (outer_n < kMinSymbolsPerRing || inner_n < kMinSymbolsPerRing)
    fail(ErrorKind::InsufficientData,
         "too few ring decisions (outer " + std::to_string(outer_n) + ", inner " +
             std::to_string(inner_n) + ")");
  const double ratio =
      (outer_sum / static_cast<double>(outer_n)) / (inner_sum / static_cast<double>(inner_n));
  f.ring_compression = std::clamp(ratio / 3.0, 1e-6, 1.5);
  f.evm = std::sqrt(err / static_cast<double>(y.size()));
  f.snr_db = -20.0 * std::log10(std::max(f.evm, 1e-6));
  return f;
}

IqFrame apply_receiver_impairments(IqFrame frame, const RxProfile& rx,
                                   double carrier_hz) {
  if (rx.is_ideal()) return frame;
  apply_frequency_shift_inplace(frame.samples, ppm_to_hz(rx.lo_offset_ppm, carrier_hz),
                                frame.sample_rate_hz);
  apply_iq_imbalance_inplace(frame.samples, rx.iq_gain_imbalance_db,
                             rx.iq_phase_imbalance_deg);
  return frame;
}

FeatureVector receive_and_extract(const IqFrame& frame, const RxProfile& rx,
                                  const ReceiverConfig& cfg) {
  require(cfg.carrier_frequency_hz > 0.0, "ReceiverConfig.carrier_frequency_hz must be > 0");
  frame.validate();
  try {
    AgcResult gained =
        agc(apply_receiver_impairments(frame, rx, cfg.carrier_frequency_hz));
    const IqFrame& f = gained.frame;
    const std::vector<cplx> symbols =
        matched_filter_symbols(f, f.rolloff, f.span_symbols, !cfg.matched_filter);

    const FrequencyEstimate freq = estimate_frequency(symbols, f.symbol_rate_hz);
    const double drift = estimate_frequency_drift(symbols, f.symbol_rate_hz, freq.coarse_hz);

    // Correct on the frame's absolute time base so the residual carrier
    // phase stays near zero.
    std::vector<cplx> corrected(symbols.size());
    const double w = 2.0 * kPi * freq.total_hz() / f.sample_rate_hz;
    for (std::size_t n = 0; n < symbols.size(); ++n)
      corrected[n] = symbols[n] * std::polar(1.0, -w * static_cast<double>(f.symbol_sample(n)));

    const IqFeatures iq = extract_iq_features(corrected);

    FeatureVector fv;
    fv[Feature::FreqOffsetPpm] = freq.total_hz() / cfg.carrier_frequency_hz * 1e6;
    fv[Feature::GainImbalanceDb] = iq.gain_db;
    fv[Feature::PhaseImbalanceDeg] = iq.phase_deg;
    fv[Feature::RingCompression] = iq.ring_compression;
    fv[Feature::ResidualEvm] = iq.evm;
    fv[Feature::AgcGainDb] = gained.gain_db;
    fv[Feature::FreqDriftHz] = drift;
    fv[Feature::SnrDb] = iq.snr_db;
    for (double v : fv.values)
      if (!std::isfinite(v)) fail(ErrorKind::EstimationFailure, "non-finite feature");
    return fv;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument) throw;
    throw Error(ErrorKind::FrameRejected, std::string("frame rejected: ") + e.what());
  }
}

void write_feature_csv(std::ostream& os, std::span<const FeatureVector> rows,
                       std::span<const int> labels) {
  require(rows.size() == labels.size(), "write_feature_csv: label count mismatch");
  for (std::string_view name : FeatureVector::names()) os << name << ',';
  os << "device_id\n";
  char buf[32];
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (double v : rows[r].values) {
      std::snprintf(buf, sizeof buf, "%.17g,", v);
      os << buf;
    }
    os << labels[r] << '\n';
  }
}

}  // namespace rfpuf
