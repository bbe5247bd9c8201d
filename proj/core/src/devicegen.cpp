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

#include "rfpuf/devicegen.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "rfpuf/common.hpp"

namespace rfpuf {
namespace {

constexpr std::string_view kFleetHeader =
    "device_id,lo_offset_ppm,iq_gain_imbalance_db,iq_phase_imbalance_deg,"
    "pa_backoff_db";

void validate_gaussian(const Gaussian& g, const char* name) {
  require(std::isfinite(g.mean) && std::isfinite(g.std_dev),
          std::string("ParamSpec.") + name + " must be finite");
  require(g.std_dev >= 0.0,
          std::string("ParamSpec.") + name + " std_dev must be >= 0");
}

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    fail(ErrorKind::Parse, "fleet line " + std::to_string(line_no) +
                               ": bad number '" + std::string(field) + "'");
  return value;
}

}  // namespace

void ParamSpec::validate() const {
  require(std::isfinite(carrier_frequency_hz) && carrier_frequency_hz > 0.0,
          "ParamSpec.carrier_frequency_hz must be finite and > 0");
  validate_gaussian(lo_offset_ppm, "lo_offset_ppm");
  validate_gaussian(iq_gain_imbalance_db, "iq_gain_imbalance_db");
  validate_gaussian(iq_phase_imbalance_deg, "iq_phase_imbalance_deg");
  validate_gaussian(pa_backoff_db, "pa_backoff_db");
  validate_gaussian(eb_n0_db, "eb_n0_db");
  validate_gaussian(doppler_hz, "doppler_hz");
  require(std::isfinite(channel_gain_min_db) &&
              std::isfinite(channel_gain_max_db) &&
              channel_gain_min_db <= channel_gain_max_db,
          "ParamSpec channel gain range must be finite and ordered");
}

double sample_truncated_normal(const Gaussian& g, std::mt19937_64& rng) {
  if (g.std_dev == 0.0) return g.mean;
  std::normal_distribution<double> unit(0.0, 1.0);
  for (;;) {
    const double z = unit(rng);
    if (std::abs(z) <= 3.0) return g.mean + g.std_dev * z;
  }
}

std::vector<TxProfile> sample_fleet(std::size_t n, const ParamSpec& spec,
                                    std::uint64_t seed) {
  require(n >= 1, "sample_fleet: n must be >= 1");
  spec.validate();
  std::vector<TxProfile> fleet(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i, Stream::Fleet));
    TxProfile& p = fleet[i];
    p.device_id = static_cast<int>(i);
    p.lo_offset_ppm = sample_truncated_normal(spec.lo_offset_ppm, rng);
    p.iq_gain_imbalance_db =
        sample_truncated_normal(spec.iq_gain_imbalance_db, rng);
    p.iq_phase_imbalance_deg =
        sample_truncated_normal(spec.iq_phase_imbalance_deg, rng);
    p.pa_backoff_db = sample_truncated_normal(spec.pa_backoff_db, rng);
  }
  return fleet;
}

ChannelRealization sample_channel(const ParamSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  ChannelRealization ch;
  ch.eb_n0_db = sample_truncated_normal(spec.eb_n0_db, rng);
  ch.doppler_hz = sample_truncated_normal(spec.doppler_hz, rng);
  std::uniform_real_distribution<double> gain(spec.channel_gain_min_db,
                                              spec.channel_gain_max_db);
  ch.gain_db = spec.channel_gain_min_db == spec.channel_gain_max_db
                   ? spec.channel_gain_min_db
                   : gain(rng);
  return ch;
}

void write_fleet(std::ostream& os, std::span<const TxProfile> fleet) {
  os << kFleetHeader << '\n';
  char buf[160];
  for (const TxProfile& p : fleet) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n",
                  p.device_id, p.lo_offset_ppm, p.iq_gain_imbalance_db,
                  p.iq_phase_imbalance_deg, p.pa_backoff_db);
    os << buf;
  }
  if (!os) fail(ErrorKind::Io, "write_fleet: stream error");
}

std::vector<TxProfile> read_fleet(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<TxProfile> fleet;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kFleetHeader)
        fail(ErrorKind::Parse, "fleet file: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 5)
      fail(ErrorKind::Parse,
           "fleet line " + std::to_string(line_no) + ": expected 5 fields");
    TxProfile p;
    int id = 0;
    auto [ptr, ec] = std::from_chars(fields[0].data(),
                                     fields[0].data() + fields[0].size(), id);
    if (ec != std::errc{} || ptr != fields[0].data() + fields[0].size())
      fail(ErrorKind::Parse,
           "fleet line " + std::to_string(line_no) + ": bad device id");
    p.device_id = id;
    p.lo_offset_ppm = parse_double(fields[1], line_no);
    p.iq_gain_imbalance_db = parse_double(fields[2], line_no);
    p.iq_phase_imbalance_deg = parse_double(fields[3], line_no);
    p.pa_backoff_db = parse_double(fields[4], line_no);
    fleet.push_back(p);
  }
  if (!header_seen) fail(ErrorKind::Parse, "fleet file: missing header");
  return fleet;
}

}  // namespace rfpuf
