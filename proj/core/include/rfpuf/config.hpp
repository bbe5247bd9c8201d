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
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rfpuf/devicegen.hpp"
#include "rfpuf/neural.hpp"
#include "rfpuf/pipeline.hpp"
#include "rfpuf/rxchain.hpp"
#include "rfpuf/txchain.hpp"

namespace rfpuf {

enum class RxMode { Ideal, NonIdeal, Compensated };
std::string_view to_string(RxMode m);
RxMode parse_rx_mode(std::string_view s);

/// Everything a run depends on. Two runs with equal configs (ignoring
/// `threads` and `output_path`) produce identical results.
struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  std::size_t n_seeds = 3;

  std::size_t n_tx = 200;
  std::vector<std::size_t> n_tx_list{10, 50, 200};
  int n_hidden = 50;
  std::vector<int> hidden_list{10, 25, 50, 100};
  std::size_t n_train_iterations = 10;
  std::vector<std::size_t> iterations_list{1, 2, 5, 10};
  std::size_t n_eval_frames = 2000;

  std::vector<double> ebn0_sigma_list{2.0, 6.0, 10.0};
  bool rrc_enabled = true;
  std::size_t fig6d_n_tx = 3;

  std::size_t evals_per_device = 50;
  std::size_t fig6ef_n_tx = 100;
  std::size_t fig7_devices = 1000;
  std::size_t fig7_replicates = 20;
  std::vector<std::size_t> fig10_n_tx_list{10, 50, 100};

  RxMode rx_mode = RxMode::Ideal;
  RxProfile nonideal_rx{8.3, 1.0, 5.0};
  std::size_t loopback_iterations = 10;

  std::size_t far_thresholds = 50;

  ParamSpec spec;
  FrameConfig frame;
  TrainingOptions training;

  // Execution only; excluded from the echo.
  unsigned threads = 1;
  std::filesystem::path output_path = "results";

  PipelineConfig pipeline() const;
  void validate() const;
};

/// Sets one key from its text value. Throws Parse for unknown keys or bad
/// values (the message names the key).
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Parses "key = value" lines; '#' starts a comment; blank lines ignored.
void apply_config_text(ExperimentConfig& cfg, std::istream& is, std::string_view source = "config");
/// Throws Io naming the path if it cannot be read.
void load_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Every result-affecting key with its resolved value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg);
std::vector<std::string> config_keys();

std::vector<std::size_t> parse_size_list(std::string_view s);

}  // namespace rfpuf
