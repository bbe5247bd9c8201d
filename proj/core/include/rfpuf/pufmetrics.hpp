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
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "rfpuf/neural.hpp"
#include "rfpuf/pipeline.hpp"
#include "rfpuf/rxchain.hpp"

namespace rfpuf {

/// Nominal value and full-scale range of each device feature, in feature
/// order. A zero full scale excludes that feature from the geometric mean.
struct GeoMeanReference {
  std::array<double, kDeviceFeatureCount> nominal{};
  std::array<double, kDeviceFeatureCount> full_scale{};

  std::size_t active_count() const;
};

/// Full scale = 6σ of the matching ParamSpec entry. Ring compression and EVM
/// have no spec entry and are excluded (noted in `warnings`).
GeoMeanReference geo_mean_reference(const ParamSpec& spec,
                                    std::vector<std::string>* warnings = nullptr);

/// Geometric mean of |x - nominal| / full_scale · 1e6 over the active
/// device features. Throws InvalidArgument if no feature is active.
double geo_mean_ppm(const FeatureVector& fv, const GeoMeanReference& ref);
double geo_mean_ppm(const FeatureVector& fv, const ParamSpec& spec);

struct PufDistances {
  std::vector<double> d_intra;
  std::vector<double> d_inter;
  double worst_case_d_intra = 0.0;  // max over intra pairs
  double worst_case_d_inter = 0.0;  // min over inter pairs
  double identifiability = 0.0;     // P(intra < inter) over sampled pairs
  std::size_t sampled_pairs = 0;
};

/// values[d][j] is the geo-mean of device d at evaluation j; evaluation j uses
/// the same challenge for every device. NaN marks a rejected frame.
PufDistances distances_from_values(const std::vector<std::vector<double>>& values,
                                   std::uint64_t seed, std::size_t n_samples = 200000);

/// Exact P(intra < inter) over every (intra, inter) combination.
double exact_identifiability(std::span<const double> d_intra, std::span<const double> d_inter);

/// Simulates k evaluations per device on an ideal receiver.
PufDistances compute_distances(std::span<const TxProfile> fleet, std::size_t k,
                               const PipelineConfig& cfg, std::uint64_t seed,
                               std::size_t n_samples = 200000);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for k successes out of n (z = 1.96 gives 95%).
Interval wilson_interval(std::size_t k, std::size_t n, double z = 1.96);

struct DetectionResult {
  std::size_t errors = 0;
  std::size_t total = 0;
  double probability = 0.0;
  Interval ci;
};

DetectionResult detection_from_predictions(std::span<const int> predicted,
                                           std::span<const int> truth,
                                           std::size_t rejected = 0);

/// Misclassification fraction; rejected frames count as errors.
DetectionResult false_detection_probability(const MlpModel& model,
                                            const LabeledFeatures& eval_set);

struct FarFrrPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

struct FarFrrCurve {
  std::vector<FarFrrPoint> points;
  double eer = 0.0;
  double eer_threshold = 0.0;
};

/// One verification: the device claims `claimed_id`; the model predicted
/// `prediction`. A rejected frame has `rejected` set.
struct VerificationAttempt {
  int claimed_id = 0;
  Prediction prediction;
  bool rejected = false;
};

/// Thresholds must be sorted ascending.
FarFrrCurve far_frr_curve(std::span<const VerificationAttempt> genuine,
                          std::span<const VerificationAttempt> impostor,
                          std::span<const double> thresholds);

std::vector<VerificationAttempt> make_attempts(const MlpModel& model, const LabeledFeatures& set,
                                               std::span<const int> claimed_ids);

/// Convenience: genuine claims are the true labels; impostor claims are given.
FarFrrCurve far_frr_curve(const MlpModel& model, const LabeledFeatures& genuine,
                          const LabeledFeatures& impostor, std::span<const int> impostor_claims,
                          std::span<const double> thresholds);

/// Uniformly spaced thresholds over [lo, hi].
std::vector<double> linear_thresholds(double lo, double hi, std::size_t n);

using BigInt = boost::multiprecision::cpp_int;

/// 2^(bits·m) challenge-response pairs.
BigInt crp_count(int m, int bits_per_feature);
/// log2 of the adversary's single-guess success probability, -(bits·m).
double crp_guess_log2(int m, int bits_per_feature);

}  // namespace rfpuf
