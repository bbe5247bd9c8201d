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

#include "rfpuf/txchain.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

namespace rfpuf {
namespace {

constexpr double kInvSqrt10 = 0.31622776601683794;

// Gray order on two bits (b0 b1): 00→-3, 01→-1, 11→+1, 10→+3.
constexpr std::array<double, 4> kGrayLevel = {-3.0, -1.0, +3.0, +1.0};

const std::array<cplx, 16>& constellation() {
  static const std::array<cplx, 16> points = [] {
    std::array<cplx, 16> p{};
    constexpr std::array<double, 4> levels = {-3.0, -1.0, 1.0, 3.0};
    for (int i = 0; i < 4; ++i)
      for (int q = 0; q < 4; ++q)
        p[i * 4 + q] = cplx(levels[i], levels[q]) * kInvSqrt10;
    return p;
  }();
  return points;
}

void check_bits(const BitStream& bits) {
  require(bits.size() >= 4 && bits.size() % kBitsPerSymbol == 0,
          "bit stream length must be a positive multiple of 4");
  for (std::uint8_t b : bits.bits) require(b <= 1, "bit values must be 0 or 1");
}

void write_le_double(std::ostream& os, double v) {
  auto u = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xff);
  os.write(bytes, 8);
}

double read_le_double(std::istream& is) {
  unsigned char bytes[8];
  is.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

}  // namespace

void IqFrame::validate() const {
  require(samples_per_symbol >= 4, "IqFrame: samples_per_symbol must be >= 4");
  require(sample_rate_hz > 0.0 && symbol_rate_hz > 0.0,
          "IqFrame: rates must be positive");
  require(std::abs(sample_rate_hz / symbol_rate_hz - samples_per_symbol) < 1e-9,
          "IqFrame: sample_rate / symbol_rate must equal samples_per_symbol");
  require(n_symbols == 0 || symbol_sample(n_symbols - 1) < samples.size(),
          "IqFrame: symbol timing exceeds sample count");
  for (const cplx& s : samples)
    require(std::isfinite(s.real()) && std::isfinite(s.imag()),
            "IqFrame: non-finite sample");
}

void FrameConfig::validate() const {
  require(frame_bits >= 4 && frame_bits % kBitsPerSymbol == 0,
          "FrameConfig.frame_bits must be a positive multiple of 4");
  require(samples_per_symbol >= 4, "FrameConfig.samples_per_symbol must be >= 4");
  require(rolloff > 0.0 && rolloff <= 1.0, "FrameConfig.rolloff must be in (0, 1]");
  require(span_symbols >= 2 && span_symbols % 2 == 0,
          "FrameConfig.span_symbols must be even and >= 2");
  require(symbol_rate_hz > 0.0, "FrameConfig.symbol_rate_hz must be > 0");
  require(carrier_frequency_hz > 0.0,
          "FrameConfig.carrier_frequency_hz must be > 0");
}

BitStream generate_prbs(std::size_t length_bits, std::uint64_t seed) {
  require(length_bits >= 4 && length_bits % 4 == 0,
          "generate_prbs: length must be >= 4 and divisible by 4");
  std::mt19937_64 rng(seed);
  BitStream out;
  out.bits.resize(length_bits);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < length_bits; ++i) {
    if (i % 64 == 0) word = rng();
    out.bits[i] = static_cast<std::uint8_t>((word >> (63 - i % 64)) & 1u);
  }
  return out;
}

std::vector<cplx> map_16qam(const BitStream& bits) {
  check_bits(bits);
  std::vector<cplx> symbols(bits.size() / 4);
  for (std::size_t n = 0; n < symbols.size(); ++n) {
    const std::uint8_t* b = &bits.bits[4 * n];
    const double i_level = kGrayLevel[(b[0] & 1) * 2 + (b[1] & 1)];
    const double q_level = kGrayLevel[(b[2] & 1) * 2 + (b[3] & 1)];
    symbols[n] = cplx(i_level, q_level) * kInvSqrt10;
  }
  return symbols;
}

std::span<const cplx, 16> qam16_points() { return constellation(); }

std::vector<double> rrc_taps(int samples_per_symbol, double rolloff,
                             int span_symbols) {
  require(samples_per_symbol >= 1, "rrc_taps: samples_per_symbol must be >= 1");
  require(rolloff > 0.0 && rolloff <= 1.0, "rrc_taps: rolloff must be in (0, 1]");
  require(span_symbols >= 2 && span_symbols % 2 == 0,
          "rrc_taps: span must be even and >= 2");
  const int half = span_symbols * samples_per_symbol / 2;
  const double b = rolloff;
  std::vector<double> h(2 * half + 1);
  for (int k = -half; k <= half; ++k) {
    const double t = static_cast<double>(k) / samples_per_symbol;
    double v = 0.0;
    if (k == 0) {
      v = 1.0 - b + 4.0 * b / kPi;
    } else if (std::abs(std::abs(4.0 * b * t) - 1.0) < 1e-9) {
      v = b / std::sqrt(2.0) *
          ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
           (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
    } else {
      v = (std::sin(kPi * t * (1.0 - b)) +
           4.0 * b * t * std::cos(kPi * t * (1.0 + b))) /
          (kPi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t)));
    }
    h[k + half] = v;
  }
  double energy = 0.0;
  for (double v : h) energy += v * v;
  const double norm = 1.0 / std::sqrt(energy);
  for (double& v : h) v *= norm;
  return h;
}

IqFrame pulse_shape(std::span<const cplx> symbols, int samples_per_symbol,
                    double rolloff, int span_symbols, double symbol_rate_hz) {
  require(!symbols.empty(), "pulse_shape: no symbols");
  require(symbol_rate_hz > 0.0, "pulse_shape: symbol rate must be > 0");
  const std::vector<double> h = rrc_taps(samples_per_symbol, rolloff, span_symbols);
  const std::size_t sps = static_cast<std::size_t>(samples_per_symbol);

  IqFrame frame;
  frame.samples.assign(symbols.size() * sps + h.size() - 1, cplx{});
  frame.samples_per_symbol = samples_per_symbol;
  frame.symbol_rate_hz = symbol_rate_hz;
  frame.sample_rate_hz = symbol_rate_hz * samples_per_symbol;
  frame.n_symbols = symbols.size();
  frame.first_symbol_sample = (h.size() - 1) / 2;
  frame.rolloff = rolloff;
  frame.span_symbols = span_symbols;

  for (std::size_t n = 0; n < symbols.size(); ++n) {
    const cplx s = symbols[n];
    cplx* out = frame.samples.data() + n * sps;
    for (std::size_t j = 0; j < h.size(); ++j) out[j] += h[j] * s;
  }
  return frame;
}

void apply_iq_imbalance_inplace(std::span<cplx> samples, double gain_db,
                                double phase_deg) {
  require(std::isfinite(gain_db) && std::isfinite(phase_deg),
          "apply_iq_imbalance: parameters must be finite");
  const double g = db_to_amplitude(gain_db);
  const double phi = deg_to_rad(phase_deg);
  const double g_sin = g * std::sin(phi);
  const double g_cos = g * std::cos(phi);
  for (cplx& s : samples) {
    const double i = s.real();
    const double q = s.imag();
    s = cplx(i - g_sin * q, g_cos * q);
  }
}

IqFrame apply_iq_imbalance(IqFrame frame, double gain_db, double phase_deg) {
  apply_iq_imbalance_inplace(frame.samples, gain_db, phase_deg);
  return frame;
}

double rapp_gain(double amplitude, double v_sat) {
  const double x = amplitude / v_sat;
  const double x2 = x * x;
  // (1 + x^(2p))^(-1/(2p)) with p = 2.
  return 1.0 / std::sqrt(std::sqrt(1.0 + x2 * x2));
}

IqFrame apply_pa_nonlinearity(IqFrame frame, double backoff_db) {
  require(std::isfinite(backoff_db), "apply_pa_nonlinearity: back-off must be finite");
  const double level = rms(frame.samples);
  if (level == 0.0) return frame;
  const double v_sat = level * db_to_amplitude(backoff_db);
  for (cplx& s : frame.samples) s *= rapp_gain(std::abs(s), v_sat);
  return frame;
}

void apply_frequency_shift_inplace(std::span<cplx> samples, double shift_hz,
                                   double sample_rate_hz) {
  require(std::isfinite(shift_hz), "frequency shift must be finite");
  if (shift_hz == 0.0) return;
  // Exact phasor at the start of each block, recurrence inside it.
  constexpr std::size_t kBlock = 64;
  const double w = 2.0 * kPi * shift_hz / sample_rate_hz;
  const cplx step = std::polar(1.0, w);
  for (std::size_t start = 0; start < samples.size(); start += kBlock) {
    cplx rot = std::polar(1.0, w * static_cast<double>(start));
    const std::size_t end = std::min(samples.size(), start + kBlock);
    for (std::size_t k = start; k < end; ++k) {
      samples[k] *= rot;
      rot *= step;
    }
  }
}

IqFrame apply_frequency_shift(IqFrame frame, double shift_hz) {
  apply_frequency_shift_inplace(frame.samples, shift_hz, frame.sample_rate_hz);
  return frame;
}

IqFrame apply_lo_offset(IqFrame frame, double offset_ppm, double carrier_hz) {
  require(std::isfinite(offset_ppm) && std::isfinite(carrier_hz),
          "apply_lo_offset: parameters must be finite");
  return apply_frequency_shift(std::move(frame), ppm_to_hz(offset_ppm, carrier_hz));
}

IqFrame transmit(const BitStream& bits, const TxProfile& tx,
                 const FrameConfig& cfg) {
  cfg.validate();
  const std::vector<cplx> symbols = map_16qam(bits);
  IqFrame frame = pulse_shape(symbols, cfg.samples_per_symbol, cfg.rolloff,
                              cfg.span_symbols, cfg.symbol_rate_hz);
  apply_iq_imbalance_inplace(frame.samples, tx.iq_gain_imbalance_db,
                             tx.iq_phase_imbalance_deg);
  frame = apply_pa_nonlinearity(std::move(frame), tx.pa_backoff_db);
  apply_frequency_shift_inplace(
      frame.samples, ppm_to_hz(tx.lo_offset_ppm, cfg.carrier_frequency_hz),
      frame.sample_rate_hz);
  return frame;
}

double rms(std::span<const cplx> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const cplx& s : samples) acc += std::norm(s);
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

void write_iq_dump(const std::filesystem::path& path, const IqFrame& frame) {
  std::ofstream data(path, std::ios::binary);
  if (!data) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  for (const cplx& s : frame.samples) {
    write_le_double(data, s.real());
    write_le_double(data, s.imag());
  }
  if (!data) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");

  std::filesystem::path hdr_path = path;
  hdr_path += ".hdr";
  std::ofstream hdr(hdr_path);
  if (!hdr) fail(ErrorKind::Io, "cannot open '" + hdr_path.string() + "' for writing");
  char buf[96];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, v);
    hdr << buf;
  };
  hdr << "# interleaved little-endian float64 I/Q pairs\n";
  hdr << "sample_count = " << frame.samples.size() << '\n';
  put("sample_rate_hz", frame.sample_rate_hz);
  put("symbol_rate_hz", frame.symbol_rate_hz);
  hdr << "samples_per_symbol = " << frame.samples_per_symbol << '\n';
  hdr << "n_symbols = " << frame.n_symbols << '\n';
  hdr << "first_symbol_sample = " << frame.first_symbol_sample << '\n';
  put("rolloff", frame.rolloff);
  hdr << "span_symbols = " << frame.span_symbols << '\n';
}

IqFrame read_iq_dump(const std::filesystem::path& path) {
  std::filesystem::path hdr_path = path;
  hdr_path += ".hdr";
  std::ifstream hdr(hdr_path);
  if (!hdr) fail(ErrorKind::Io, "cannot open '" + hdr_path.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(hdr, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Parse, "bad header line: " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorKind::Parse, std::string("header missing key ") + key);
    return it->second;
  };
  IqFrame frame;
  const std::size_t count = std::stoull(get("sample_count"));
  frame.sample_rate_hz = std::stod(get("sample_rate_hz"));
  frame.symbol_rate_hz = std::stod(get("symbol_rate_hz"));
  frame.samples_per_symbol = std::stoi(get("samples_per_symbol"));
  frame.n_symbols = std::stoull(get("n_symbols"));
  frame.first_symbol_sample = std::stoull(get("first_symbol_sample"));
  frame.rolloff = std::stod(get("rolloff"));
  frame.span_symbols = std::stoi(get("span_symbols"));

  std::ifstream data(path, std::ios::binary);
  if (!data) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  frame.samples.resize(count);
  for (cplx& s : frame.samples) {
    const double re = read_le_double(data);
    const double im = read_le_double(data);
    s = cplx(re, im);
  }
  if (!data) fail(ErrorKind::Io, "'" + path.string() + "' is truncated");
  return frame;
}

}  // namespace rfpuf
