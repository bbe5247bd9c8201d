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

#include "rfpuf/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>

#include "rfpuf/csv.hpp"

namespace rfpuf {

std::string_view to_string(RxMode m) {
  switch (m) {
    case RxMode::Ideal: return "ideal";
    case RxMode::NonIdeal: return "nonideal";
    case RxMode::Compensated: return "compensated";
  }
  return "unknown";
}

RxMode parse_rx_mode(std::string_view s) {
  if (s == "ideal") return RxMode::Ideal;
  if (s == "nonideal") return RxMode::NonIdeal;
  if (s == "compensated") return RxMode::Compensated;
  fail(ErrorKind::Parse, "unknown rx_mode '" + std::string(s) + "' (ideal, nonideal, compensated)");
}

PipelineConfig ExperimentConfig::pipeline() const {
  PipelineConfig p;
  p.spec = spec;
  p.frame = frame;
  p.frame.carrier_frequency_hz = spec.carrier_frequency_hz;
  p.matched_filter = rrc_enabled;
  p.threads = threads;
  return p;
}

void ExperimentConfig::validate() const {
  require(n_seeds >= 1, "n_seeds must be >= 1");
  require(n_tx >= 2, "n_tx must be >= 2");
  require(!n_tx_list.empty() && std::all_of(n_tx_list.begin(), n_tx_list.end(),
                                            [](std::size_t n) { return n >= 2; }),
          "n_tx_list entries must be >= 2");
  require(n_hidden >= 1, "n_hidden must be >= 1");
  require(!hidden_list.empty() && std::all_of(hidden_list.begin(), hidden_list.end(),
                                              [](int h) { return h >= 1; }),
          "hidden_list entries must be >= 1");
  require(n_train_iterations >= 1, "n_train_iterations must be >= 1");
  require(!iterations_list.empty() && std::all_of(iterations_list.begin(), iterations_list.end(),
                                                  [](std::size_t n) { return n >= 1; }),
          "iterations_list entries must be >= 1");
  require(n_eval_frames >= 1, "n_eval_frames must be >= 1");
  require(!ebn0_sigma_list.empty() && std::all_of(ebn0_sigma_list.begin(), ebn0_sigma_list.end(),
                                                  [](double s) { return s >= 0.0; }),
          "ebn0_sigma_list entries must be >= 0");
  require(fig6d_n_tx >= 2 && fig6ef_n_tx >= 2, "fleet sizes must be >= 2");
  require(evals_per_device >= 2, "evals_per_device must be >= 2");
  require(fig7_devices >= 2 && fig7_replicates >= 1, "fig7 counts must be >= 1");
  require(!fig10_n_tx_list.empty() && std::all_of(fig10_n_tx_list.begin(), fig10_n_tx_list.end(),
                                                  [](std::size_t n) { return n >= 2; }),
          "fig10_n_tx_list entries must be >= 2");
  require(loopback_iterations >= 1, "loopback_iterations must be >= 1");
  require(far_thresholds >= 2, "far_thresholds must be >= 2");
  require(threads >= 1, "threads must be >= 1");
  pipeline().validate();
  training.validate();
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view why) {
  fail(ErrorKind::Parse, "config key '" + std::string(key) + "': bad value '" + std::string(value) +
                             "' (" + std::string(why) + ")");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  v = trim(v);
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) bad_value(key, v, "not a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  bad_value(key, v, "expected true/false");
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view v) {
  std::vector<T> out;
  v = trim(v);
  if (v.empty()) bad_value(key, v, "empty list");
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const auto comma = v.find(',', pos);
    const auto item = v.substr(pos, comma == std::string_view::npos ? v.npos : comma - pos);
    out.push_back(parse_number<T>(key, item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += format_double(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

struct Entry {
  std::string_view key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Entry number(std::string_view key, T ExperimentConfig::*field) {
  return {key, [key, field](ExperimentConfig& c, std::string_view v) { c.*field = parse_number<T>(key, v); },
          [field](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(c.*field);
            else
              return std::to_string(c.*field);
          }};
}

template <typename T>
Entry list(std::string_view key, std::vector<T> ExperimentConfig::*field) {
  return {key, [key, field](ExperimentConfig& c, std::string_view v) { c.*field = parse_list<T>(key, v); },
          [field](const ExperimentConfig& c) { return join(c.*field); }};
}

// Nested double fields (spec, frame, receiver, training).
template <typename F>
Entry real(std::string_view key, F ref) {
  return {key, [key, ref](ExperimentConfig& c, std::string_view v) { ref(c) = parse_number<double>(key, v); },
          [ref](const ExperimentConfig& c) { return format_double(ref(const_cast<ExperimentConfig&>(c))); }};
}

template <typename F>
Entry integer(std::string_view key, F ref) {
  return {key, [key, ref](ExperimentConfig& c, std::string_view v) {
            using T = std::remove_reference_t<decltype(ref(c))>;
            ref(c) = parse_number<T>(key, v);
          },
          [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    using C = ExperimentConfig;
    std::vector<Entry> t;
    t.push_back(number("master_seed", &C::master_seed));
    t.push_back(number("n_seeds", &C::n_seeds));
    t.push_back(number("n_tx", &C::n_tx));
    t.push_back(list("n_tx_list", &C::n_tx_list));
    t.push_back(number("n_hidden", &C::n_hidden));
    t.push_back(list("hidden_list", &C::hidden_list));
    t.push_back(number("n_train_iterations", &C::n_train_iterations));
    t.push_back(list("iterations_list", &C::iterations_list));
    t.push_back(number("n_eval_frames", &C::n_eval_frames));
    t.push_back(real("ebn0_sigma_db", [](C& c) -> double& { return c.spec.eb_n0_db.std_dev; }));
    t.push_back(list("ebn0_sigma_list", &C::ebn0_sigma_list));
    t.push_back({"rrc_enabled",
                 [](C& c, std::string_view v) { c.rrc_enabled = parse_bool("rrc_enabled", v); },
                 [](const C& c) { return std::string(c.rrc_enabled ? "true" : "false"); }});
    t.push_back(number("fig6d_n_tx", &C::fig6d_n_tx));
    t.push_back(number("evals_per_device", &C::evals_per_device));
    t.push_back(number("fig6ef_n_tx", &C::fig6ef_n_tx));
    t.push_back(number("fig7_devices", &C::fig7_devices));
    t.push_back(number("fig7_replicates", &C::fig7_replicates));
    t.push_back(list("fig10_n_tx_list", &C::fig10_n_tx_list));
    t.push_back({"rx_mode", [](C& c, std::string_view v) { c.rx_mode = parse_rx_mode(trim(v)); },
                 [](const C& c) { return std::string(to_string(c.rx_mode)); }});
    t.push_back(real("rx_lo_offset_ppm", [](C& c) -> double& { return c.nonideal_rx.lo_offset_ppm; }));
    t.push_back(real("rx_iq_gain_imbalance_db", [](C& c) -> double& { return c.nonideal_rx.iq_gain_imbalance_db; }));
    t.push_back(real("rx_iq_phase_imbalance_deg", [](C& c) -> double& { return c.nonideal_rx.iq_phase_imbalance_deg; }));
    t.push_back(number("loopback_iterations", &C::loopback_iterations));
    t.push_back(number("far_thresholds", &C::far_thresholds));
    t.push_back(real("target_error", [](C& c) -> double& { return c.training.target_error; }));
    t.push_back(integer("max_epochs", [](C& c) -> int& { return c.training.max_epochs; }));
    t.push_back({"optimizer",
                 [](C& c, std::string_view v) {
                   v = trim(v);
                   if (v == "scg") c.training.optimizer = Optimizer::ScaledConjugateGradient;
                   else if (v == "momentum") c.training.optimizer = Optimizer::MomentumDescent;
                   else bad_value("optimizer", v, "expected scg or momentum");
                 },
                 [](const C& c) {
                   return std::string(c.training.optimizer == Optimizer::ScaledConjugateGradient ? "scg" : "momentum");
                 }});
    t.push_back(real("learning_rate", [](C& c) -> double& { return c.training.learning_rate; }));
    t.push_back(real("momentum", [](C& c) -> double& { return c.training.momentum; }));
    t.push_back(real("carrier_hz", [](C& c) -> double& { return c.spec.carrier_frequency_hz; }));
    t.push_back(real("lo_mean_ppm", [](C& c) -> double& { return c.spec.lo_offset_ppm.mean; }));
    t.push_back(real("lo_sigma_ppm", [](C& c) -> double& { return c.spec.lo_offset_ppm.std_dev; }));
    t.push_back(real("iq_gain_mean_db", [](C& c) -> double& { return c.spec.iq_gain_imbalance_db.mean; }));
    t.push_back(real("iq_gain_sigma_db", [](C& c) -> double& { return c.spec.iq_gain_imbalance_db.std_dev; }));
    t.push_back(real("iq_phase_mean_deg", [](C& c) -> double& { return c.spec.iq_phase_imbalance_deg.mean; }));
    t.push_back(real("iq_phase_sigma_deg", [](C& c) -> double& { return c.spec.iq_phase_imbalance_deg.std_dev; }));
    t.push_back(real("pa_backoff_mean_db", [](C& c) -> double& { return c.spec.pa_backoff_db.mean; }));
    t.push_back(real("pa_backoff_sigma_db", [](C& c) -> double& { return c.spec.pa_backoff_db.std_dev; }));
    t.push_back(real("ebn0_mean_db", [](C& c) -> double& { return c.spec.eb_n0_db.mean; }));
    t.push_back(real("doppler_mean_hz", [](C& c) -> double& { return c.spec.doppler_hz.mean; }));
    t.push_back(real("doppler_sigma_hz", [](C& c) -> double& { return c.spec.doppler_hz.std_dev; }));
    t.push_back(real("channel_gain_min_db", [](C& c) -> double& { return c.spec.channel_gain_min_db; }));
    t.push_back(real("channel_gain_max_db", [](C& c) -> double& { return c.spec.channel_gain_max_db; }));
    t.push_back(integer("frame_bits", [](C& c) -> std::size_t& { return c.frame.frame_bits; }));
    t.push_back(integer("samples_per_symbol", [](C& c) -> int& { return c.frame.samples_per_symbol; }));
    t.push_back(real("rolloff", [](C& c) -> double& { return c.frame.rolloff; }));
    t.push_back(integer("span_symbols", [](C& c) -> int& { return c.frame.span_symbols; }));
    t.push_back(real("symbol_rate_hz", [](C& c) -> double& { return c.frame.symbol_rate_hz; }));
    return t;
  }();
  return table;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  if (key == "threads") {
    cfg.threads = parse_number<unsigned>(key, value);
    return;
  }
  if (key == "output_path") {
    cfg.output_path = std::string(trim(value));
    return;
  }
  for (const Entry& e : entries())
    if (e.key == key) {
      e.set(cfg, value);
      return;
    }
  fail(ErrorKind::Parse, "unknown config key '" + std::string(key) + "'");
}

void apply_config_text(ExperimentConfig& cfg, std::istream& is, std::string_view source) {
  std::string line;
  for (std::size_t n = 1; std::getline(is, line); ++n) {
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::Parse, std::string(source) + ":" + std::to_string(n) + ": expected 'key = value'");
    try {
      set_config_value(cfg, v.substr(0, eq), v.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorKind::Parse, std::string(source) + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

void load_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot read config file " + path.string());
  apply_config_text(cfg, is, path.string());
}

std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Entry& e : entries()) out.emplace_back(std::string(e.key), e.get(cfg));
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : entries()) keys.emplace_back(e.key);
  keys.emplace_back("threads");
  keys.emplace_back("output_path");
  return keys;
}

std::vector<std::size_t> parse_size_list(std::string_view s) {
  return parse_list<std::size_t>("list", s);
}

}  // namespace rfpuf
