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
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rfpuf/config.hpp"
#include "rfpuf/csv.hpp"
#include "rfpuf/neural.hpp"
#include "rfpuf/pufmetrics.hpp"
#include "rfpuf/randomness.hpp"

namespace rfpuf {

inline constexpr std::string_view kVersion = "0.1.0";

enum class ExperimentKind { Fig6a, Fig6b, Fig6c, Fig6d, Fig6ef, Fig7, Fig10 };
std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view s);
std::vector<ExperimentKind> all_experiment_kinds();

/// Seed of replicate `index` (seeds of one experiment, or fig7 replicates).
std::uint64_t replicate_seed(std::uint64_t master_seed, std::size_t index);
/// Fleet of the first n devices for a replicate; prefixes of larger fleets.
std::vector<TxProfile> replicate_fleet(std::uint64_t seed, std::size_t n, const ParamSpec& spec);
/// ceil(n_eval_frames / n_tx): the evaluation budget spread over the fleet.
std::size_t eval_frames_per_device(std::size_t n_eval_frames, std::size_t n_tx);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string diagnostic;
  DetectionResult detection;
  int epochs = 0;
  double train_error = 0.0;
  std::size_t train_rejected = 0;
};

struct SweepPoint {
  std::string arm;   // e.g. "rrc_on", "fixed_preamble", "compensated"
  std::string axis;  // swept quantity, e.g. "n_tx"
  double value = 0.0;
  std::vector<SeedOutcome> seeds;

  std::string file_stem() const;
  std::size_t ok_count() const;
  /// Median error probability over successful seeds; NaN if none.
  double median_error() const;
  std::size_t pooled_errors() const;
  std::size_t pooled_total() const;
  /// Wilson interval of the errors pooled over successful seeds.
  Interval pooled_ci() const;
};

struct DistanceSummary {
  std::uint64_t seed = 0;
  PufDistances distances;
  double median_intra = 0.0;
  double median_inter = 0.0;
};

struct RandomnessSummary {
  NistReport puf;         // probability-transform bits
  NistReport puf_minmax;  // min-max quantized geo-means
  NistReport prng;        // seeded PRNG baseline, same record layout
  std::size_t record_bits = 0;
};

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::Fig6a;
  std::vector<SweepPoint> points;
  std::vector<DistanceSummary> distances;   // fig6ef
  std::optional<RandomnessSummary> randomness;  // fig7

  const SweepPoint* find(std::string_view arm, double value) const;
};

using ProgressFn = std::function<void(std::string_view)>;

ExperimentResult run_experiment(ExperimentKind kind, const ExperimentConfig& cfg,
                                const ProgressFn& progress = {});

/// Header comment lines for result files: tool, version, kind and every
/// result-affecting config value.
std::vector<std::string> config_echo_lines(const ExperimentConfig& cfg, std::string_view what);

/// Named CSV tables for a result (file name → table).
std::vector<std::pair<std::string, CsvTable>> result_tables(const ExperimentResult& result,
                                                            const ExperimentConfig& cfg);
/// Writes result_tables() under cfg.output_path; returns the written paths.
std::vector<std::filesystem::path> write_experiment(const ExperimentResult& result,
                                                    const ExperimentConfig& cfg);

/// Train on an accepted training set and score an evaluation set. Errors
/// (too many rejections, empty classes) become a failed outcome.
SeedOutcome train_and_evaluate(const LabeledFeatures& train, const LabeledFeatures& eval,
                               const TrainingOptions& options, std::uint64_t seed);

/// Authentication report at n_tx: detection error, FAR/FRR with EER,
/// distances and CRP strength.
struct PufReport {
  std::uint64_t seed = 0;
  SeedOutcome detection;
  FarFrrCurve far_frr;
  DistanceSummary distances;
  int crp_bits = 0;
};

PufReport run_report(const ExperimentConfig& cfg, const ProgressFn& progress = {});
std::vector<std::pair<std::string, CsvTable>> report_tables(const PufReport& report,
                                                            const ExperimentConfig& cfg);

}  // namespace rfpuf
