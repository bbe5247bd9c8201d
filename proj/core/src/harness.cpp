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

#include "rfpuf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace rfpuf {

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Fig6a: return "fig6a";
    case ExperimentKind::Fig6b: return "fig6b";
    case ExperimentKind::Fig6c: return "fig6c";
    case ExperimentKind::Fig6d: return "fig6d";
    case ExperimentKind::Fig6ef: return "fig6ef";
    case ExperimentKind::Fig7: return "fig7";
    case ExperimentKind::Fig10: return "fig10";
  }
  return "unknown";
}

std::vector<ExperimentKind> all_experiment_kinds() {
  return {ExperimentKind::Fig6a, ExperimentKind::Fig6b, ExperimentKind::Fig6c, ExperimentKind::Fig6d,
          ExperimentKind::Fig6ef, ExperimentKind::Fig7, ExperimentKind::Fig10};
}

ExperimentKind parse_experiment_kind(std::string_view s) {
  for (ExperimentKind k : all_experiment_kinds())
    if (to_string(k) == s) return k;
  fail(ErrorKind::Parse, "unknown experiment kind '" + std::string(s) +
                             "' (fig6a, fig6b, fig6c, fig6d, fig6ef, fig7, fig10)");
}

std::uint64_t replicate_seed(std::uint64_t master_seed, std::size_t index) {
  return derive_seed(master_seed, index, Stream::Replicate);
}

std::vector<TxProfile> replicate_fleet(std::uint64_t seed, std::size_t n, const ParamSpec& spec) {
  return sample_fleet(n, spec, derive_seed(seed, 0, Stream::Fleet));
}

std::size_t eval_frames_per_device(std::size_t n_eval_frames, std::size_t n_tx) {
  require(n_tx > 0, "eval_frames_per_device: n_tx must be > 0");
  return std::max<std::size_t>(1, (n_eval_frames + n_tx - 1) / n_tx);
}

// --- sweep points ------------------------------------------------------------

std::string SweepPoint::file_stem() const {
  std::string v = format_double(value);
  std::replace(v.begin(), v.end(), '.', 'p');
  std::replace(v.begin(), v.end(), '-', 'm');
  return (arm.empty() ? "" : arm + "_") + axis + "_" + v;
}

std::size_t SweepPoint::ok_count() const {
  return static_cast<std::size_t>(
      std::count_if(seeds.begin(), seeds.end(), [](const SeedOutcome& s) { return s.ok; }));
}

double SweepPoint::median_error() const {
  std::vector<double> p;
  for (const auto& s : seeds)
    if (s.ok) p.push_back(s.detection.probability);
  if (p.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(p.begin(), p.end());
  const std::size_t m = p.size() / 2;
  return p.size() % 2 ? p[m] : 0.5 * (p[m - 1] + p[m]);
}

std::size_t SweepPoint::pooled_errors() const {
  std::size_t e = 0;
  for (const auto& s : seeds)
    if (s.ok) e += s.detection.errors;
  return e;
}

std::size_t SweepPoint::pooled_total() const {
  std::size_t t = 0;
  for (const auto& s : seeds)
    if (s.ok) t += s.detection.total;
  return t;
}

Interval SweepPoint::pooled_ci() const {
  const std::size_t total = pooled_total();
  if (total == 0) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  return wilson_interval(pooled_errors(), total);
}

const SweepPoint* ExperimentResult::find(std::string_view arm, double value) const {
  for (const auto& p : points)
    if (p.arm == arm && p.value == value) return &p;
  return nullptr;
}

// --- training helpers --------------------------------------------------------

namespace {

SeedOutcome failed(std::uint64_t seed, const std::string& why) {
  SeedOutcome o;
  o.seed = seed;
  o.diagnostic = why;
  return o;
}

struct TrainedModel {
  MlpModel model;
  TrainingReport report;
  std::size_t rejected = 0;
};

TrainedModel train_model(const LabeledFeatures& train, const TrainingOptions& options,
                         std::uint64_t seed) {
  check_rejection_rate(train, "training set");
  TrainedModel t;
  t.rejected = train.rejected();
  t.model = train_classifier(train.matrix(), train.labels, options, seed, &t.report);
  return t;
}

SeedOutcome score(const TrainedModel& t, const LabeledFeatures& eval, std::uint64_t seed) {
  SeedOutcome o;
  o.seed = seed;
  o.detection = false_detection_probability(t.model, eval);
  o.epochs = t.report.epochs;
  o.train_error = t.report.final_error;
  o.train_rejected = t.rejected;
  o.ok = true;
  return o;
}

template <typename Fn>
SeedOutcome guarded(std::uint64_t seed, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return failed(seed, std::string(to_string(e.kind())) + ": " + e.what());
  }
}

TrainingOptions with_hidden(const ExperimentConfig& cfg, int hidden) {
  TrainingOptions o = cfg.training;
  o.hidden_dim = hidden;
  return o;
}

LabeledFeatures simulate_set(std::span<const TxProfile> fleet, std::size_t per_device,
                             ChallengeMode challenge, BatchRole role, const PipelineConfig& pc,
                             std::uint64_t seed, const RxProfile& rx = {}) {
  const RxProfile receivers[] = {rx};
  return collect(simulate_batch(fleet, {per_device, challenge, role}, pc, seed, receivers));
}

void report(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// --- experiments -------------------------------------------------------------

void run_fig6a(const ExperimentConfig& cfg, ExperimentResult& res, const ProgressFn& progress) {
  const auto sizes = sorted_unique(cfg.n_tx_list);
  for (std::size_t n : sizes) res.points.push_back({"", "n_tx", static_cast<double>(n), {}});
  const PipelineConfig pc = cfg.pipeline();
  const std::size_t iters = cfg.n_train_iterations;
  for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = replicate_seed(cfg.master_seed, s);
    const auto fleet = replicate_fleet(seed, sizes.back(), cfg.spec);
    std::optional<FrameBatch> train_batch;
    std::string diag;
    try {
      const RxProfile ideal[] = {RxProfile{}};
      train_batch = simulate_batch(fleet, {iters, ChallengeMode::Fresh, BatchRole::Training}, pc, seed, ideal);
    } catch (const Error& e) {
      diag = e.what();
    }
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const std::size_t n = sizes[i];
      report(progress, "fig6a seed " + std::to_string(s) + " n_tx " + std::to_string(n));
      res.points[i].seeds.push_back(guarded(seed, [&] {
        if (!train_batch) fail(ErrorKind::FrameRejected, diag);
        const auto train = collect(subset(*train_batch, iters, n, iters));
        const auto sub = std::span(fleet).first(n);
        const auto eval = simulate_set(sub, eval_frames_per_device(cfg.n_eval_frames, n),
                                       ChallengeMode::Fresh, BatchRole::Evaluation, pc, seed);
        return score(train_model(train, with_hidden(cfg, cfg.n_hidden), seed), eval, seed);
      }));
    }
  }
}

void run_fig6b(const ExperimentConfig& cfg, ExperimentResult& res, const ProgressFn& progress) {
  for (int h : cfg.hidden_list) res.points.push_back({"", "n_hidden", static_cast<double>(h), {}});
  const PipelineConfig pc = cfg.pipeline();
  const std::size_t n = cfg.n_tx;
  for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = replicate_seed(cfg.master_seed, s);
    const auto fleet = replicate_fleet(seed, n, cfg.spec);
    report(progress, "fig6b seed " + std::to_string(s) + " simulating");
    std::optional<LabeledFeatures> train, eval;
    std::string diag;
    try {
      train = simulate_set(fleet, cfg.n_train_iterations, ChallengeMode::Fresh, BatchRole::Training, pc, seed);
      eval = simulate_set(fleet, eval_frames_per_device(cfg.n_eval_frames, n), ChallengeMode::Fresh,
                          BatchRole::Evaluation, pc, seed);
    } catch (const Error& e) {
      diag = e.what();
    }
    for (std::size_t i = 0; i < cfg.hidden_list.size(); ++i) {
      report(progress, "fig6b seed " + std::to_string(s) + " n_hidden " + std::to_string(cfg.hidden_list[i]));
      res.points[i].seeds.push_back(guarded(seed, [&] {
        if (!train) fail(ErrorKind::FrameRejected, diag);
        return score(train_model(*train, with_hidden(cfg, cfg.hidden_list[i]), seed), *eval, seed);
      }));
    }
  }
}

void run_fig6c(const ExperimentConfig& cfg, ExperimentResult& res, const ProgressFn& progress) {
  const auto iters = sorted_unique(cfg.iterations_list);
  for (std::size_t k : iters) res.points.push_back({"variable", "iterations", static_cast<double>(k), {}});
  res.points.push_back({"fixed_preamble", "iterations", static_cast<double>(cfg.n_train_iterations), {}});
  const PipelineConfig pc = cfg.pipeline();
  const std::size_t n = cfg.n_tx;
  const std::size_t per_eval = eval_frames_per_device(cfg.n_eval_frames, n);
  for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = replicate_seed(cfg.master_seed, s);
    const auto fleet = replicate_fleet(seed, n, cfg.spec);
    report(progress, "fig6c seed " + std::to_string(s) + " simulating");
    std::optional<FrameBatch> train_batch;
    std::optional<LabeledFeatures> eval;
    std::string diag;
    try {
      const RxProfile ideal[] = {RxProfile{}};
      train_batch = simulate_batch(fleet, {iters.back(), ChallengeMode::Fresh, BatchRole::Training}, pc, seed, ideal);
      eval = simulate_set(fleet, per_eval, ChallengeMode::Fresh, BatchRole::Evaluation, pc, seed);
    } catch (const Error& e) {
      diag = e.what();
    }
    for (std::size_t i = 0; i < iters.size(); ++i) {
      report(progress, "fig6c seed " + std::to_string(s) + " iterations " + std::to_string(iters[i]));
      res.points[i].seeds.push_back(guarded(seed, [&] {
        if (!train_batch) fail(ErrorKind::FrameRejected, diag);
        const auto train = collect(subset(*train_batch, iters.back(), n, iters[i]));
        return score(train_model(train, with_hidden(cfg, cfg.n_hidden), seed), *eval, seed);
      }));
    }
    report(progress, "fig6c seed " + std::to_string(s) + " fixed preamble");
    res.points.back().seeds.push_back(guarded(seed, [&] {
      const auto train = simulate_set(fleet, cfg.n_train_iterations, ChallengeMode::Fixed,
                                      BatchRole::Training, pc, seed);
      const auto fixed_eval =
          simulate_set(fleet, per_eval, ChallengeMode::Fixed, BatchRole::Evaluation, pc, seed);
      return score(train_model(train, with_hidden(cfg, cfg.n_hidden), seed), fixed_eval, seed);
    }));
  }
}

void run_fig6d(const ExperimentConfig& cfg, ExperimentResult& res, const ProgressFn& progress) {
  for (double sigma : cfg.ebn0_sigma_list)
    for (bool rrc : {true, false})
      res.points.push_back({rrc ? "rrc_on" : "rrc_off", "ebn0_sigma_db", sigma, {}});
  const std::size_t n = cfg.fig6d_n_tx;
  for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = replicate_seed(cfg.master_seed, s);
    const auto fleet = replicate_fleet(seed, n, cfg.spec);
    for (SweepPoint& point : res.points) {
      report(progress, "fig6d seed " + std::to_string(s) + " " + point.file_stem());
      point.seeds.push_back(guarded(seed, [&] {
        PipelineConfig pc = cfg.pipeline();
        pc.spec.eb_n0_db.std_dev = point.value;
        pc.matched_filter = point.arm == "rrc_on";
        const auto train = simulate_set(fleet, cfg.n_train_iterations, ChallengeMode::Fresh,
                                        BatchRole::Training, pc, seed);
        const auto eval = simulate_set(fleet, eval_frames_per_device(cfg.n_eval_frames, n),
                                       ChallengeMode::Fresh, BatchRole::Evaluation, pc, seed);
        return score(train_model(train, with_hidden(cfg, cfg.n_hidden), seed), eval, seed);
      }));
    }
  }
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void run_fig6ef(const ExperimentConfig& cfg, ExperimentResult& res, const ProgressFn& progress) {
  const PipelineConfig pc = cfg.pipeline();
  for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = replicate_seed(cfg.master_seed, s);
    report(progress, "fig6ef seed " + std::to_string(s));
    const auto fleet = replicate_fleet(seed, cfg.fig6ef_n_tx, cfg.spec);
    DistanceSummary d;
    d.seed = seed;
    d.distances = compute_distances(fleet, cfg.evals_per_device, pc, seed);
    d.median_intra = median_of(d.distances.d_intra);
    d.median_inter = median_of(d.distances.d_inter);
    res.distances.push_back(std::move(d));
  }
}

inline constexpr std::size_t kCdfReferenceDevices = std::size_t{1} << 20;

void run_fig7(const ExperimentConfig& cfg, ExperimentResult& res, const ProgressFn& progress) {
  const PipelineConfig pc = cfg.pipeline();
  const GeoMeanReference ref = geo_mean_reference(cfg.spec);
  const GeoMeanCdf cdf = GeoMeanCdf::from_model(
      cfg.spec, kCdfReferenceDevices, derive_seed(cfg.master_seed, 0, Stream::Baseline));
  RandomnessSummary out;
  NistConfig nist;
  for (std::size_t r = 0; r < cfg.fig7_replicates; ++r) {
    report(progress, "fig7 replicate " + std::to_string(r));
    const std::uint64_t seed = replicate_seed(cfg.master_seed, r);
    const auto fleet = replicate_fleet(seed, cfg.fig7_devices, cfg.spec);
    const RxProfile ideal[] = {RxProfile{}};
    const FrameBatch batch =
        simulate_batch(fleet, {1, ChallengeMode::SharedPerIndex, BatchRole::Evaluation}, pc, seed, ideal);
    std::vector<double> geo;
    geo.reserve(fleet.size());
    for (const auto& fv : batch.by_receiver[0])
      if (fv) geo.push_back(geo_mean_ppm(*fv, ref));

    const Bits puf = puf_bitstream(geo, BitDerivation::ProbabilityTransform, &cdf);
    const Bits minmax = puf_bitstream(geo, BitDerivation::MinMax);
    Bits prng(puf.size());
    std::mt19937_64 rng(derive_seed(seed, 0, Stream::Baseline));
    for (std::size_t i = 0; i < prng.size(); i += 64) {
      const std::uint64_t w = rng();
      for (std::size_t b = 0; b < 64 && i + b < prng.size(); ++b)
        prng[i + b] = static_cast<std::uint8_t>((w >> (63 - b)) & 1U);
    }
    nist.record_length = puf.size();
    out.record_bits = std::max(out.record_bits, puf.size());
    out.puf.add(run_nist_record(puf, nist), nist.alpha);
    out.puf_minmax.add(run_nist_record(minmax, nist), nist.alpha);
    out.prng.add(run_nist_record(prng, nist), nist.alpha);
  }
  res.randomness = std::move(out);
}

void run_fig10(const ExperimentConfig& cfg, ExperimentResult& res, const ProgressFn& progress) {
  const auto sizes = sorted_unique(cfg.fig10_n_tx_list);
  const char* arms[] = {"ideal", "nonideal", "compensated"};
  for (std::size_t n : sizes)
    for (const char* arm : arms) res.points.push_back({arm, "n_tx", static_cast<double>(n), {}});
  const PipelineConfig pc = cfg.pipeline();
  const std::size_t iters = cfg.n_train_iterations;
  const RxProfile receivers[] = {RxProfile{}, cfg.nonideal_rx};

  for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = replicate_seed(cfg.master_seed, s);
    const auto fleet = replicate_fleet(seed, sizes.back(), cfg.spec);
    std::optional<FrameBatch> train_batch, loop_batch;
    std::string diag;
    try {
      report(progress, "fig10 seed " + std::to_string(s) + " simulating training and loopback frames");
      train_batch = simulate_batch(fleet, {iters, ChallengeMode::Fresh, BatchRole::Training}, pc, seed,
                                   std::span(receivers).first(1));
      loop_batch = simulate_batch(fleet, {cfg.loopback_iterations, ChallengeMode::Fresh, BatchRole::Training},
                                  pc, derive_seed(seed, 0, Stream::Receiver), receivers);
    } catch (const Error& e) {
      diag = e.what();
    }
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const std::size_t n = sizes[i];
      report(progress, "fig10 seed " + std::to_string(s) + " n_tx " + std::to_string(n));
      SeedOutcome outcomes[3];
      try {
        if (!train_batch) fail(ErrorKind::FrameRejected, diag);
        const TrainedModel model = train_model(collect(subset(*train_batch, iters, n, iters)),
                                               with_hidden(cfg, cfg.n_hidden), seed);
        // Loopback pairs where both receivers produced features.
        const FrameBatch loop = subset(*loop_batch, cfg.loopback_iterations, n, cfg.loopback_iterations);
        std::vector<FeatureVector> ideal_rows, nonideal_rows;
        for (std::size_t f = 0; f < loop.frame_count(); ++f)
          if (loop.by_receiver[0][f] && loop.by_receiver[1][f]) {
            ideal_rows.push_back(*loop.by_receiver[0][f]);
            nonideal_rows.push_back(*loop.by_receiver[1][f]);
          }
        const CompensatorModel comp = train_compensator(to_matrix(ideal_rows), to_matrix(nonideal_rows));

        const FrameBatch eval = simulate_batch(
            std::span(fleet).first(n),
            {eval_frames_per_device(cfg.n_eval_frames, n), ChallengeMode::Fresh, BatchRole::Evaluation}, pc,
            seed, receivers);
        const LabeledFeatures ideal = collect(eval, 0);
        const LabeledFeatures nonideal = collect(eval, 1);
        LabeledFeatures compensated = nonideal;
        for (auto& row : compensated.rows) row = apply_compensator(comp, row);
        outcomes[0] = score(model, ideal, seed);
        outcomes[1] = score(model, nonideal, seed);
        outcomes[2] = score(model, compensated, seed);
      } catch (const Error& e) {
        for (auto& o : outcomes) o = failed(seed, std::string(to_string(e.kind())) + ": " + e.what());
      }
      for (std::size_t a = 0; a < 3; ++a) res.points[i * 3 + a].seeds.push_back(outcomes[a]);
    }
  }
}

}  // namespace

SeedOutcome train_and_evaluate(const LabeledFeatures& train, const LabeledFeatures& eval,
                               const TrainingOptions& options, std::uint64_t seed) {
  return guarded(seed, [&] { return score(train_model(train, options, seed), eval, seed); });
}

ExperimentResult run_experiment(ExperimentKind kind, const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  ExperimentResult res;
  res.kind = kind;
  switch (kind) {
    case ExperimentKind::Fig6a: run_fig6a(cfg, res, progress); break;
    case ExperimentKind::Fig6b: run_fig6b(cfg, res, progress); break;
    case ExperimentKind::Fig6c: run_fig6c(cfg, res, progress); break;
    case ExperimentKind::Fig6d: run_fig6d(cfg, res, progress); break;
    case ExperimentKind::Fig6ef: run_fig6ef(cfg, res, progress); break;
    case ExperimentKind::Fig7: run_fig7(cfg, res, progress); break;
    case ExperimentKind::Fig10: run_fig10(cfg, res, progress); break;
  }
  return res;
}

// --- output ------------------------------------------------------------------

std::vector<std::string> config_echo_lines(const ExperimentConfig& cfg, std::string_view what) {
  std::vector<std::string> lines;
  lines.push_back("rfpuf " + std::string(kVersion) + " " + std::string(what));
  for (const auto& [k, v] : config_echo(cfg)) lines.push_back(k + " = " + v);
  return lines;
}

namespace {

CsvTable with_echo(CsvTable t, const std::vector<std::string>& echo) {
  for (const auto& line : echo) t.add_comment(line);
  return t;
}

CsvTable point_table(const SweepPoint& p) {
  CsvTable t({"seed", "status", "errors", "total", "error_probability", "ci_low", "ci_high", "epochs",
              "train_error", "train_rejected", "diagnostic"});
  for (const auto& s : p.seeds) {
    if (s.ok)
      t.add_row({std::to_string(s.seed), "ok", std::to_string(s.detection.errors), std::to_string(s.detection.total),
                 format_double(s.detection.probability), format_double(s.detection.ci.low),
                 format_double(s.detection.ci.high), std::to_string(s.epochs), format_double(s.train_error),
                 std::to_string(s.train_rejected), ""});
    else
      t.add_row({std::to_string(s.seed), "failed", "", "", "", "", "", "", "", "", s.diagnostic});
  }
  return t;
}

std::vector<std::pair<std::string, CsvTable>> sweep_tables(const ExperimentResult& res,
                                                           const std::vector<std::string>& echo) {
  const std::string kind(to_string(res.kind));
  std::vector<std::pair<std::string, CsvTable>> out;
  CsvTable summary({"arm", "axis", "value", "seeds_ok", "seeds_failed", "median_error", "pooled_errors",
                    "pooled_total", "ci_low", "ci_high"});
  for (const auto& p : res.points) {
    const Interval ci = p.pooled_ci();
    summary.add_row({p.arm, p.axis, format_double(p.value), std::to_string(p.ok_count()),
                     std::to_string(p.seeds.size() - p.ok_count()), format_double(p.median_error()),
                     std::to_string(p.pooled_errors()), std::to_string(p.pooled_total()), format_double(ci.low),
                     format_double(ci.high)});
    out.emplace_back(kind + "_" + p.file_stem() + ".csv", with_echo(point_table(p), echo));
  }
  out.emplace_back(kind + "_summary.csv", with_echo(std::move(summary), echo));
  return out;
}

void add_histogram(CsvTable& t, const std::string& seed, const char* which, const std::vector<double>& v,
                   double hi, std::size_t bins) {
  std::vector<std::size_t> counts(bins, 0);
  for (double x : v) {
    auto b = static_cast<std::size_t>(x / hi * static_cast<double>(bins));
    ++counts[std::min(b, bins - 1)];
  }
  for (std::size_t b = 0; b < bins; ++b)
    t.add_row({seed, which, format_double(hi * static_cast<double>(b) / static_cast<double>(bins)),
               format_double(hi * static_cast<double>(b + 1) / static_cast<double>(bins)), std::to_string(counts[b])});
}

inline constexpr std::size_t kHistogramBins = 50;

std::vector<std::pair<std::string, CsvTable>> distance_tables(const std::vector<DistanceSummary>& ds,
                                                              const std::vector<std::string>& echo) {
  CsvTable summary({"seed", "intra_pairs", "inter_pairs", "median_intra_ppm", "median_inter_ppm",
                    "worst_intra_ppm", "worst_inter_ppm", "identifiability", "sampled_pairs"});
  CsvTable hist({"seed", "distribution", "bin_low_ppm", "bin_high_ppm", "count"});
  for (const auto& d : ds) {
    const auto& x = d.distances;
    const std::string seed = std::to_string(d.seed);
    summary.add_row({seed, std::to_string(x.d_intra.size()), std::to_string(x.d_inter.size()),
                     format_double(d.median_intra), format_double(d.median_inter),
                     format_double(x.worst_case_d_intra), format_double(x.worst_case_d_inter),
                     format_double(x.identifiability), std::to_string(x.sampled_pairs)});
    const double hi = std::max(*std::max_element(x.d_intra.begin(), x.d_intra.end()),
                               *std::max_element(x.d_inter.begin(), x.d_inter.end()));
    const double top = hi > 0.0 ? hi * (1.0 + 1e-12) : 1.0;
    add_histogram(hist, seed, "intra", x.d_intra, top, kHistogramBins);
    add_histogram(hist, seed, "inter", x.d_inter, top, kHistogramBins);
  }
  return {{"fig6ef_summary.csv", with_echo(std::move(summary), echo)},
          {"fig6ef_histogram.csv", with_echo(std::move(hist), echo)}};
}

std::vector<std::pair<std::string, CsvTable>> randomness_tables(const RandomnessSummary& r,
                                                                const std::vector<std::string>& echo) {
  CsvTable t({"test", "puf_pass_rate", "puf_minmax_pass_rate", "prng_pass_rate", "records_run", "records_skipped",
              "record_bits"});
  for (std::size_t i = 0; i < kNistTestCount; ++i) {
    const auto test = static_cast<NistTest>(i);
    t.add_row({std::string(to_string(test)), format_double(r.puf[test].pass_rate()),
               format_double(r.puf_minmax[test].pass_rate()), format_double(r.prng[test].pass_rate()),
               std::to_string(r.puf[test].run), std::to_string(r.puf[test].skipped), std::to_string(r.record_bits)});
  }
  return {{"fig7_randomness.csv", with_echo(std::move(t), echo)}};
}

}  // namespace

std::vector<std::pair<std::string, CsvTable>> result_tables(const ExperimentResult& res,
                                                            const ExperimentConfig& cfg) {
  const auto echo = config_echo_lines(cfg, "experiment " + std::string(to_string(res.kind)));
  if (res.kind == ExperimentKind::Fig6ef) return distance_tables(res.distances, echo);
  if (res.kind == ExperimentKind::Fig7) {
    require(res.randomness.has_value(), "fig7 result has no randomness summary");
    return randomness_tables(*res.randomness, echo);
  }
  return sweep_tables(res, echo);
}

namespace {

std::vector<std::filesystem::path> save_all(const std::vector<std::pair<std::string, CsvTable>>& tables,
                                            const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  for (const auto& [name, table] : tables) {
    const auto path = dir / name;
    table.save(path);
    written.push_back(path);
  }
  return written;
}

}  // namespace

std::vector<std::filesystem::path> write_experiment(const ExperimentResult& res, const ExperimentConfig& cfg) {
  return save_all(result_tables(res, cfg), cfg.output_path);
}

// --- report ------------------------------------------------------------------

PufReport run_report(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  PufReport rep;
  rep.seed = replicate_seed(cfg.master_seed, 0);
  const std::uint64_t seed = rep.seed;
  const PipelineConfig pc = cfg.pipeline();
  const std::size_t n = cfg.n_tx;
  const auto fleet = replicate_fleet(seed, n, cfg.spec);

  report(progress, "report: training");
  const auto train = simulate_set(fleet, cfg.n_train_iterations, ChallengeMode::Fresh, BatchRole::Training, pc, seed);
  const TrainedModel model = train_model(train, with_hidden(cfg, cfg.n_hidden), seed);
  report(progress, "report: evaluating");
  const auto eval = simulate_set(fleet, eval_frames_per_device(cfg.n_eval_frames, n), ChallengeMode::Fresh,
                                 BatchRole::Evaluation, pc, seed);
  rep.detection = score(model, eval, seed);

  // Every evaluation frame doubles as an impostor attempt claiming another id.
  std::mt19937_64 rng(derive_seed(seed, 1, Stream::PairSampling));
  std::uniform_int_distribution<std::size_t> other(1, n - 1);
  std::vector<int> claims;
  for (int label : eval.labels) claims.push_back(static_cast<int>((static_cast<std::size_t>(label) + other(rng)) % n));
  for (int label : eval.rejected_labels)
    claims.push_back(static_cast<int>((static_cast<std::size_t>(label) + other(rng)) % n));
  rep.far_frr = far_frr_curve(model.model, eval, eval, claims, linear_thresholds(0.0, 1.0, cfg.far_thresholds));

  report(progress, "report: distances");
  const auto dist_fleet = std::span(fleet).first(std::min(n, cfg.fig6ef_n_tx));
  rep.distances.seed = seed;
  rep.distances.distances = compute_distances(dist_fleet, cfg.evals_per_device, pc, seed);
  rep.distances.median_intra = median_of(rep.distances.distances.d_intra);
  rep.distances.median_inter = median_of(rep.distances.distances.d_inter);
  rep.crp_bits = 16 * static_cast<int>(kDeviceFeatureCount);
  return rep;
}

std::vector<std::pair<std::string, CsvTable>> report_tables(const PufReport& r, const ExperimentConfig& cfg) {
  const auto echo = config_echo_lines(cfg, "report");
  CsvTable summary({"metric", "value"});
  const auto& d = r.detection.detection;
  const auto& x = r.distances.distances;
  const BigInt crps = crp_count(static_cast<int>(kDeviceFeatureCount), 16);
  const std::pair<std::string, std::string> rows[] = {
      {"seed", std::to_string(r.seed)},
      {"n_tx", std::to_string(cfg.n_tx)},
      {"false_detection_probability", format_double(d.probability)},
      {"false_detection_ci_low", format_double(d.ci.low)},
      {"false_detection_ci_high", format_double(d.ci.high)},
      {"eval_frames", std::to_string(d.total)},
      {"train_rejected", std::to_string(r.detection.train_rejected)},
      {"equal_error_rate", format_double(r.far_frr.eer)},
      {"eer_threshold", format_double(r.far_frr.eer_threshold)},
      {"median_intra_ppm", format_double(r.distances.median_intra)},
      {"median_inter_ppm", format_double(r.distances.median_inter)},
      {"worst_intra_ppm", format_double(x.worst_case_d_intra)},
      {"worst_inter_ppm", format_double(x.worst_case_d_inter)},
      {"identifiability", format_double(x.identifiability)},
      {"crp_count", crps.str()},
      {"crp_guess_log2", format_double(crp_guess_log2(static_cast<int>(kDeviceFeatureCount), 16))},
  };
  for (const auto& [k, v] : rows) summary.add_row({k, v});
  CsvTable curve({"threshold", "far", "frr"});
  for (const auto& p : r.far_frr.points)
    curve.add_row({format_double(p.threshold), format_double(p.far), format_double(p.frr)});
  return {{"report_summary.csv", with_echo(std::move(summary), echo)},
          {"report_far_frr.csv", with_echo(std::move(curve), echo)}};
}

}  // namespace rfpuf
