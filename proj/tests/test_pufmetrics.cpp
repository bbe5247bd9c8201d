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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rfpuf/pufmetrics.hpp"

namespace rfpuf {
namespace {

FeatureVector nominal_features() {
  FeatureVector fv;
  fv[Feature::RingCompression] = 1.0;
  return fv;
}

TEST(GeoMean, NominalIsZero) {
  EXPECT_EQ(geo_mean_ppm(nominal_features(), ParamSpec{}), 0.0);
}

TEST(GeoMean, ThreeSigmaIsHalfScale) {
  FeatureVector fv = nominal_features();
  fv[Feature::FreqOffsetPpm] = 3.0 * 8.3;
  fv[Feature::GainImbalanceDb] = 3.0;
  fv[Feature::PhaseImbalanceDeg] = -15.0;
  fv[Feature::RingCompression] = 0.9;  // excluded from the mean
  EXPECT_NEAR(geo_mean_ppm(fv, ParamSpec{}), 500000.0, 1e-6);
}

TEST(GeoMean, GeometricMeanOfDeviations) {
  FeatureVector fv = nominal_features();
  fv[Feature::FreqOffsetPpm] = 8.3 * 6.0 * 0.1;   // 0.1 of full scale
  fv[Feature::GainImbalanceDb] = 6.0 * 0.2;
  fv[Feature::PhaseImbalanceDeg] = 30.0 * 0.4;
  EXPECT_NEAR(geo_mean_ppm(fv, ParamSpec{}), std::cbrt(0.1 * 0.2 * 0.4) * 1e6, 1e-6);
}

TEST(GeoMean, ReferenceExcludesUnspecifiedFeatures) {
  std::vector<std::string> warnings;
  const GeoMeanReference ref = geo_mean_reference(ParamSpec{}, &warnings);
  EXPECT_EQ(ref.active_count(), 3u);
  EXPECT_EQ(warnings.size(), 2u);
  EXPECT_DOUBLE_EQ(ref.full_scale[0], 6.0 * 8.3);
}

TEST(GeoMean, NoActiveFeatureThrows) {
  GeoMeanReference ref;
  EXPECT_THROW(geo_mean_ppm(nominal_features(), ref), Error);
}

// Brute-force oracle: walk every pair of evaluations.
struct BruteDistances {
  std::vector<double> intra, inter;
  double p = 0.0;
};

BruteDistances brute(const std::vector<std::vector<double>>& v) {
  BruteDistances b;
  const std::size_t n = v.size(), k = v[0].size();
  for (std::size_t d1 = 0; d1 < n; ++d1)
    for (std::size_t j1 = 0; j1 < k; ++j1)
      for (std::size_t d2 = 0; d2 < n; ++d2)
        for (std::size_t j2 = 0; j2 < k; ++j2) {
          const bool later = d2 > d1 || (d2 == d1 && j2 > j1);
          if (!later) continue;
          if (d1 == d2) b.intra.push_back(std::abs(v[d1][j1] - v[d2][j2]));
          else if (j1 == j2) b.inter.push_back(std::abs(v[d1][j1] - v[d2][j2]));
        }
  double wins = 0.0;
  for (double a : b.intra)
    for (double c : b.inter) wins += a < c;
  b.p = wins / static_cast<double>(b.intra.size() * b.inter.size());
  return b;
}

std::vector<std::vector<double>> random_values(std::size_t n, std::size_t k, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dev(0.0, spread), noise(0.0, 1.0);
  std::vector<std::vector<double>> v(n, std::vector<double>(k));
  for (auto& row : v) {
    const double centre = dev(rng);
    for (auto& x : row) x = centre + noise(rng);
  }
  return v;
}

TEST(Distances, MatchBruteForceEnumeration) {
  for (double spread : {0.5, 3.0, 20.0}) {
    const auto v = random_values(10, 5, spread, 3);
    const BruteDistances b = brute(v);
    const PufDistances exact = distances_from_values(v, 1, 0);
    ASSERT_EQ(exact.d_intra.size(), b.intra.size());
    ASSERT_EQ(exact.d_inter.size(), b.inter.size());
    EXPECT_NEAR(exact.identifiability, b.p, 1e-12);
    EXPECT_EQ(exact.worst_case_d_intra, *std::max_element(b.intra.begin(), b.intra.end()));
    EXPECT_EQ(exact.worst_case_d_inter, *std::min_element(b.inter.begin(), b.inter.end()));

    const std::size_t samples = 200000;
    const PufDistances sampled = distances_from_values(v, 7, samples);
    const double sd = std::sqrt(b.p * (1.0 - b.p) / samples);
    EXPECT_NEAR(sampled.identifiability, b.p, 3.0 * sd + 1e-12) << spread;
  }
}

TEST(Distances, RejectedEvaluationsAreSkipped) {
  auto v = random_values(3, 3, 5.0, 4);
  v[1][2] = std::nan("");
  const PufDistances d = distances_from_values(v, 1, 0);
  EXPECT_EQ(d.d_intra.size(), 3u + 1u + 3u);
  EXPECT_EQ(d.d_inter.size(), 3u + 3u + 1u);
}

TEST(Distances, IndistinguishableDevicesAreCoinFlips) {
  const auto v = random_values(30, 10, 0.0, 5);
  EXPECT_NEAR(distances_from_values(v, 1, 0).identifiability, 0.5, 0.05);
}

TEST(Distances, SimulatedDegenerateFleetNearHalf) {
  // Every device at the same (non-zero) impairments; Table-I geo-mean scaling.
  ParamSpec fleet_spec;
  fleet_spec.lo_offset_ppm = {2.0, 0.0};
  fleet_spec.iq_gain_imbalance_db = {0.5, 0.0};
  fleet_spec.iq_phase_imbalance_deg = {3.0, 0.0};
  fleet_spec.pa_backoff_db = {30.0, 0.0};
  PipelineConfig pc;
  pc.frame.frame_bits = 8000;
  const auto fleet = sample_fleet(8, fleet_spec, 6);
  const PufDistances d = compute_distances(fleet, 6, pc, 9, 0);
  EXPECT_NEAR(d.identifiability, 0.5, 0.1);
}

TEST(Distances, NeedsTwoDevicesAndEvaluations) {
  EXPECT_THROW(distances_from_values({{1.0, 2.0}}, 1), Error);
  EXPECT_THROW(distances_from_values({{1.0}, {2.0}}, 1), Error);
}

// --- detection --------------------------------------------------------------

double wilson_oracle_low(double k, double n, double z) {
  const double p = k / n;
  return (p + z * z / (2 * n) - z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n))) / (1 + z * z / n);
}

TEST(Detection, PerfectClassifier) {
  const std::vector<int> t = {0, 1, 2, 3};
  const DetectionResult d = detection_from_predictions(t, t);
  EXPECT_EQ(d.errors, 0u);
  EXPECT_EQ(d.probability, 0.0);
  EXPECT_EQ(d.ci.low, 0.0);
  EXPECT_NEAR(d.ci.high, 1.96 * 1.96 / (4 + 1.96 * 1.96), 1e-12);
}

TEST(Detection, ChanceLevel) {
  const int n = 10;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, n - 1);
  std::vector<int> pred, truth;
  for (int i = 0; i < 20000; ++i) {
    truth.push_back(i % n);
    pred.push_back(u(rng));
  }
  const DetectionResult d = detection_from_predictions(pred, truth);
  const double p = 1.0 - 1.0 / n;
  EXPECT_NEAR(d.probability, p, 3.0 * std::sqrt(p * (1 - p) / 20000));
}

TEST(Detection, RejectedFramesCountAsErrors) {
  const std::vector<int> t = {0, 1};
  const DetectionResult d = detection_from_predictions(t, t, 2);
  EXPECT_EQ(d.errors, 2u);
  EXPECT_EQ(d.total, 4u);
  EXPECT_DOUBLE_EQ(d.probability, 0.5);
}

TEST(Detection, WilsonMatchesClosedForm) {
  const Interval ci = wilson_interval(7, 50);
  EXPECT_NEAR(ci.low, wilson_oracle_low(7, 50, 1.96), 1e-12);
  EXPECT_LT(ci.low, 7.0 / 50.0);
  EXPECT_GT(ci.high, 7.0 / 50.0);
  EXPECT_THROW(wilson_interval(3, 2), Error);
}

// --- FAR / FRR --------------------------------------------------------------

std::vector<VerificationAttempt> random_attempts(std::size_t n, int classes, bool genuine, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cls(0, classes - 1);
  std::uniform_real_distribution<double> conf(1.0 / classes, 1.0);
  std::bernoulli_distribution rej(0.05), right(genuine ? 0.8 : 0.3);
  std::vector<VerificationAttempt> out;
  for (std::size_t i = 0; i < n; ++i) {
    VerificationAttempt a;
    a.claimed_id = cls(rng);
    a.prediction.class_id = right(rng) ? a.claimed_id : (a.claimed_id + 1) % classes;
    a.prediction.confidence = conf(rng);
    a.rejected = rej(rng);
    out.push_back(a);
  }
  return out;
}

double brute_rate(const std::vector<VerificationAttempt>& v, double tau, bool count_accepts) {
  double hits = 0.0;
  for (const auto& a : v) {
    const bool accept = !a.rejected && a.prediction.class_id == a.claimed_id && a.prediction.confidence >= tau;
    hits += count_accepts ? accept : !accept;
  }
  return hits / static_cast<double>(v.size());
}

TEST(FarFrr, MatchesBruteForceAndIsMonotone) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto gen = random_attempts(400, 10, true, seed);
    const auto imp = random_attempts(400, 10, false, seed + 100);
    const auto taus = linear_thresholds(0.0, 1.0, 50);
    const FarFrrCurve c = far_frr_curve(gen, imp, taus);
    ASSERT_EQ(c.points.size(), 50u);
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      EXPECT_DOUBLE_EQ(c.points[i].far, brute_rate(imp, taus[i], true));
      EXPECT_DOUBLE_EQ(c.points[i].frr, brute_rate(gen, taus[i], false));
      if (i > 0) {
        EXPECT_LE(c.points[i].far, c.points[i - 1].far);
        EXPECT_GE(c.points[i].frr, c.points[i - 1].frr);
      }
    }
    EXPECT_GE(c.eer, 0.0);
    EXPECT_LE(c.eer, 1.0);
  }
}

TEST(FarFrr, PerfectClassifierExtremes) {
  std::vector<VerificationAttempt> gen, imp;
  for (int i = 0; i < 20; ++i) {
    gen.push_back({i % 4, {i % 4, 0.9}, false});
    imp.push_back({(i + 1) % 4, {i % 4, 0.9}, false});
  }
  const double taus[] = {0.0, 1.0 + 1e-9};
  const FarFrrCurve c = far_frr_curve(gen, imp, taus);
  EXPECT_EQ(c.points[0].far, 0.0);
  EXPECT_EQ(c.points[0].frr, 0.0);
  EXPECT_EQ(c.points[1].far, 0.0);
  EXPECT_EQ(c.points[1].frr, 1.0);
}

TEST(FarFrr, UnsortedThresholdsThrow) {
  const auto gen = random_attempts(10, 3, true, 1);
  const double taus[] = {0.5, 0.2};
  EXPECT_THROW(far_frr_curve(gen, gen, taus), Error);
}

TEST(FarFrr, LinearThresholds) {
  const auto t = linear_thresholds(0.0, 1.0, 5);
  ASSERT_EQ(t.size(), 5u);
  EXPECT_DOUBLE_EQ(t[0], 0.0);
  EXPECT_DOUBLE_EQ(t[2], 0.5);
  EXPECT_DOUBLE_EQ(t[4], 1.0);
}

// --- CRP strength -----------------------------------------------------------

TEST(Crp, Counts) {
  EXPECT_EQ(crp_count(5, 16), BigInt(1) << 80);
  EXPECT_EQ(crp_count(1, 1), BigInt(2));
  EXPECT_EQ(crp_count(5, 16).str(), "1208925819614629174706176");
  EXPECT_NEAR(80.0 * std::log10(2.0), 24.08, 0.005);
  EXPECT_DOUBLE_EQ(crp_guess_log2(5, 16), -80.0);
  EXPECT_THROW(crp_count(0, 16), Error);
}

}  // namespace
}  // namespace rfpuf
