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

#include "rfpuf/pufmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace rfpuf {

std::size_t GeoMeanReference::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(full_scale.begin(), full_scale.end(), [](double s) { return s > 0.0; }));
}

GeoMeanReference geo_mean_reference(const ParamSpec& spec, std::vector<std::string>* warnings) {
  spec.validate();
  GeoMeanReference ref;
  const Gaussian entries[] = {spec.lo_offset_ppm, spec.iq_gain_imbalance_db,
                              spec.iq_phase_imbalance_deg};
  for (std::size_t j = 0; j < 3; ++j) {
    ref.nominal[j] = entries[j].mean;
    ref.full_scale[j] = 6.0 * entries[j].std_dev;
    if (ref.full_scale[j] == 0.0 && warnings)
      warnings->push_back(std::string(FeatureVector::names()[j]) +
                          " has zero spread; excluded from the geometric mean");
  }
  ref.nominal[3] = 1.0;  // ring compression of an undistorted constellation
  ref.nominal[4] = 0.0;
  if (warnings) {
    warnings->push_back("ring_compression has no spec entry; excluded from the geometric mean");
    warnings->push_back("residual_evm has no spec entry; excluded from the geometric mean");
  }
  return ref;
}

double geo_mean_ppm(const FeatureVector& fv, const GeoMeanReference& ref) {
  double log_sum = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < kDeviceFeatureCount; ++j) {
    if (!(ref.full_scale[j] > 0.0)) continue;
    require(std::isfinite(fv.values[j]), "geo_mean_ppm: non-finite feature");
    const double ppm = std::abs(fv.values[j] - ref.nominal[j]) / ref.full_scale[j] * 1e6;
    if (ppm == 0.0) return 0.0;
    log_sum += std::log(ppm);
    ++used;
  }
  require(used > 0, "geo_mean_ppm: every device feature has zero range");
  return std::exp(log_sum / static_cast<double>(used));
}

double geo_mean_ppm(const FeatureVector& fv, const ParamSpec& spec) {
  return geo_mean_ppm(fv, geo_mean_reference(spec));
}

double exact_identifiability(std::span<const double> d_intra, std::span<const double> d_inter) {
  require(!d_intra.empty() && !d_inter.empty(), "exact_identifiability: empty distribution");
  std::vector<double> inter(d_inter.begin(), d_inter.end());
  std::sort(inter.begin(), inter.end());
  long double wins = 0.0L;
  for (double a : d_intra)
    wins += static_cast<long double>(inter.end() - std::upper_bound(inter.begin(), inter.end(), a));
  return static_cast<double>(wins / (static_cast<long double>(d_intra.size()) *
                                     static_cast<long double>(inter.size())));
}

PufDistances distances_from_values(const std::vector<std::vector<double>>& values,
                                   std::uint64_t seed, std::size_t n_samples) {
  require(values.size() >= 2, "compute_distances: need at least 2 devices");
  const std::size_t k = values.front().size();
  require(k >= 2, "compute_distances: need at least 2 evaluations per device");
  for (const auto& row : values)
    require(row.size() == k, "compute_distances: ragged evaluation matrix");

  PufDistances out;
  for (const auto& row : values)
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b)
        if (!std::isnan(row[a]) && !std::isnan(row[b]))
          out.d_intra.push_back(std::abs(row[a] - row[b]));
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t d = 0; d < values.size(); ++d)
      for (std::size_t e = d + 1; e < values.size(); ++e)
        if (!std::isnan(values[d][j]) && !std::isnan(values[e][j]))
          out.d_inter.push_back(std::abs(values[d][j] - values[e][j]));
  if (out.d_intra.empty() || out.d_inter.empty())
    fail(ErrorKind::InsufficientData, "compute_distances: too many rejected evaluations");

  out.worst_case_d_intra = *std::max_element(out.d_intra.begin(), out.d_intra.end());
  out.worst_case_d_inter = *std::min_element(out.d_inter.begin(), out.d_inter.end());
  if (n_samples == 0) {
    out.identifiability = exact_identifiability(out.d_intra, out.d_inter);
    out.sampled_pairs = out.d_intra.size() * out.d_inter.size();
    return out;
  }
  std::mt19937_64 rng(derive_seed(seed, 0, Stream::PairSampling));
  std::uniform_int_distribution<std::size_t> pick_intra(0, out.d_intra.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_inter(0, out.d_inter.size() - 1);
  std::size_t wins = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double a = out.d_intra[pick_intra(rng)];
    const double b = out.d_inter[pick_inter(rng)];
    if (a < b) ++wins;
  }
  out.identifiability = static_cast<double>(wins) / static_cast<double>(n_samples);
  out.sampled_pairs = n_samples;
  return out;
}

PufDistances compute_distances(std::span<const TxProfile> fleet, std::size_t k,
                               const PipelineConfig& cfg, std::uint64_t seed,
                               std::size_t n_samples) {
  require(k >= 2, "compute_distances: need at least 2 evaluations per device");
  const BatchSpec spec{k, ChallengeMode::SharedPerIndex, BatchRole::Evaluation};
  const RxProfile ideal[] = {RxProfile{}};
  const FrameBatch batch = simulate_batch(fleet, spec, cfg, seed, ideal);
  const GeoMeanReference ref = geo_mean_reference(cfg.spec);
  std::vector<std::vector<double>> values(fleet.size(), std::vector<double>(k));
  for (std::size_t f = 0; f < batch.frame_count(); ++f) {
    const auto& fv = batch.by_receiver[0][f];
    values[f / k][f % k] = fv ? geo_mean_ppm(*fv, ref) : std::numeric_limits<double>::quiet_NaN();
  }
  return distances_from_values(values, seed, n_samples);
}

Interval wilson_interval(std::size_t k, std::size_t n, double z) {
  require(n > 0 && k <= n, "wilson_interval: need 0 <= k <= n, n > 0");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

DetectionResult detection_from_predictions(std::span<const int> predicted,
                                           std::span<const int> truth, std::size_t rejected) {
  require(predicted.size() == truth.size(), "false_detection_probability: size mismatch");
  DetectionResult r;
  r.total = predicted.size() + rejected;
  if (r.total == 0) fail(ErrorKind::InsufficientData, "false_detection_probability: empty set");
  r.errors = rejected;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] != truth[i]) ++r.errors;
  r.probability = static_cast<double>(r.errors) / static_cast<double>(r.total);
  r.ci = wilson_interval(r.errors, r.total);
  return r;
}

DetectionResult false_detection_probability(const MlpModel& model, const LabeledFeatures& set) {
  if (set.total() == 0) fail(ErrorKind::InsufficientData, "false_detection_probability: empty set");
  std::vector<int> predicted;
  if (!set.rows.empty()) {
    const std::vector<Prediction> p = predict(model, set.matrix());
    predicted.reserve(p.size());
    for (const Prediction& q : p) predicted.push_back(q.class_id);
  }
  return detection_from_predictions(predicted, set.labels, set.rejected());
}

FarFrrCurve far_frr_curve(std::span<const VerificationAttempt> genuine,
                          std::span<const VerificationAttempt> impostor,
                          std::span<const double> thresholds) {
  require(!genuine.empty() && !impostor.empty(), "far_frr_curve: empty genuine or impostor set");
  require(!thresholds.empty(), "far_frr_curve: no thresholds");
  require(std::is_sorted(thresholds.begin(), thresholds.end()),
          "far_frr_curve: thresholds must be sorted ascending");

  FarFrrCurve curve;
  curve.points.reserve(thresholds.size());
  for (double tau : thresholds) {
    require(std::isfinite(tau), "far_frr_curve: non-finite threshold");
    auto accepted = [tau](const VerificationAttempt& a) {
      return !a.rejected && a.prediction.class_id == a.claimed_id && a.prediction.confidence >= tau;
    };
    const auto ga = std::count_if(genuine.begin(), genuine.end(), accepted);
    const auto ia = std::count_if(impostor.begin(), impostor.end(), accepted);
    curve.points.push_back({tau, static_cast<double>(ia) / static_cast<double>(impostor.size()),
                            1.0 - static_cast<double>(ga) / static_cast<double>(genuine.size())});
  }

  // Equal error rate: first sign change of FAR - FRR, linearly interpolated.
  const auto& pts = curve.points;
  std::size_t best = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (std::abs(pts[i].far - pts[i].frr) < std::abs(pts[best].far - pts[best].frr)) best = i;
  curve.eer = 0.5 * (pts[best].far + pts[best].frr);
  curve.eer_threshold = pts[best].threshold;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double d0 = pts[i].far - pts[i].frr;
    const double d1 = pts[i + 1].far - pts[i + 1].frr;
    if (d0 >= 0.0 && d1 <= 0.0 && d0 != d1) {
      const double t = d0 / (d0 - d1);
      curve.eer = pts[i].far + t * (pts[i + 1].far - pts[i].far);
      curve.eer_threshold = pts[i].threshold + t * (pts[i + 1].threshold - pts[i].threshold);
      break;
    }
  }
  return curve;
}

std::vector<VerificationAttempt> make_attempts(const MlpModel& model, const LabeledFeatures& set,
                                               std::span<const int> claimed_ids) {
  require(claimed_ids.size() == set.total(),
          "make_attempts: need one claim per frame (accepted rows first, then rejected)");
  std::vector<VerificationAttempt> out;
  out.reserve(set.total());
  if (!set.rows.empty()) {
    const std::vector<Prediction> p = predict(model, set.matrix());
    for (std::size_t i = 0; i < p.size(); ++i) out.push_back({claimed_ids[i], p[i], false});
  }
  for (std::size_t i = 0; i < set.rejected(); ++i)
    out.push_back({claimed_ids[set.rows.size() + i], {}, true});
  return out;
}

FarFrrCurve far_frr_curve(const MlpModel& model, const LabeledFeatures& genuine,
                          const LabeledFeatures& impostor, std::span<const int> impostor_claims,
                          std::span<const double> thresholds) {
  std::vector<int> genuine_claims = genuine.labels;
  genuine_claims.insert(genuine_claims.end(), genuine.rejected_labels.begin(),
                        genuine.rejected_labels.end());
  const auto g = make_attempts(model, genuine, genuine_claims);
  const auto i = make_attempts(model, impostor, impostor_claims);
  return far_frr_curve(g, i, thresholds);
}

std::vector<double> linear_thresholds(double lo, double hi, std::size_t n) {
  require(n >= 2 && lo <= hi, "linear_thresholds: need n >= 2 and lo <= hi");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i)
    t[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return t;
}

BigInt crp_count(int m, int bits_per_feature) {
  require(m >= 1 && bits_per_feature >= 1, "crp_count: m and bits must be >= 1");
  BigInt one = 1;
  return one << (static_cast<unsigned>(m) * static_cast<unsigned>(bits_per_feature));
}

double crp_guess_log2(int m, int bits_per_feature) {
  require(m >= 1 && bits_per_feature >= 1, "crp_guess_log2: m and bits must be >= 1");
  return -static_cast<double>(m) * static_cast<double>(bits_per_feature);
}

}  // namespace rfpuf
