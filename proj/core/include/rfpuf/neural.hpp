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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rfpuf/pipeline.hpp"
#include "rfpuf/rxchain.hpp"

namespace rfpuf {

/// Per-feature z-normalization learned from training data.
struct Normalization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
};

/// Input → tanh hidden layer → softmax output.
struct MlpModel {
  int input_dim = 0;
  int hidden_dim = 0;
  int output_dim = 0;
  Eigen::MatrixXd w1;  // hidden × input
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // output × hidden
  Eigen::VectorXd b2;
  Normalization norm;

  /// Zero weights, identity normalization.
  static MlpModel zeros(int input_dim, int hidden_dim, int output_dim);

  std::size_t parameter_count() const;
  void validate() const;
  bool operator==(const MlpModel& other) const;
};

enum class Optimizer { ScaledConjugateGradient, MomentumDescent };

struct TrainingOptions {
  int hidden_dim = 50;
  double target_error = 1e-3;  // mean cross-entropy on the training set
  int max_epochs = 2000;
  Optimizer optimizer = Optimizer::ScaledConjugateGradient;
  double learning_rate = 0.5;  // momentum descent only
  double momentum = 0.9;       // momentum descent only

  void validate() const;
};

struct TrainingReport {
  int epochs = 0;
  double final_error = 0.0;
  bool reached_target = false;
  std::vector<std::string> warnings;
};

/// Full-batch training. Rows are put into a canonical order first, so the
/// result does not depend on input row order.
MlpModel train_classifier(const Eigen::MatrixXd& features, std::span<const int> labels,
                          const TrainingOptions& options, std::uint64_t seed,
                          TrainingReport* report = nullptr);

struct Prediction {
  int class_id = 0;
  double confidence = 0.0;
};

Eigen::VectorXd predict_proba(const MlpModel& model, std::span<const double> x);
Prediction predict(const MlpModel& model, std::span<const double> x);
Prediction predict(const MlpModel& model, const FeatureVector& fv);
/// One prediction per row.
std::vector<Prediction> predict(const MlpModel& model, const Eigen::MatrixXd& rows);

/// Fresh PRBS and channel per (device, iteration); one row per accepted frame,
/// device-major. Throws FrameRejected if more than 10% of frames are rejected.
LabeledFeatures build_training_set(std::span<const TxProfile> fleet, std::size_t n_iterations,
                                   const PipelineConfig& cfg, std::uint64_t seed,
                                   const RxProfile& rx = {},
                                   ChallengeMode challenge = ChallengeMode::Fresh);

inline constexpr double kMaxRejectionRate = 0.10;
/// Throws FrameRejected when the rejection rate of `set` exceeds the limit.
void check_rejection_rate(const LabeledFeatures& set, std::string_view what);

void save_model(std::ostream& os, const MlpModel& model);
MlpModel load_model(std::istream& is);

namespace mlp {

/// Flattened parameters in the order w1, b1, w2, b2 (column-major matrices).
Eigen::VectorXd pack(const MlpModel& model);
void unpack(MlpModel& model, const Eigen::VectorXd& params);

/// Mean cross-entropy over already-normalized rows (n × input_dim); fills
/// the gradient with respect to pack() order when `gradient` is non-null.
double cross_entropy(const MlpModel& model, const Eigen::MatrixXd& x,
                     std::span<const int> labels, Eigen::VectorXd* gradient);

Normalization fit_normalization(const Eigen::MatrixXd& x, std::vector<std::string>* warnings);
Eigen::MatrixXd normalize(const Normalization& norm, const Eigen::MatrixXd& x);

}  // namespace mlp

// Receiver-signature compensation: per-feature affine map non-ideal → ideal.
struct CompensatorModel {
  std::array<double, kFeatureCount> scale;
  std::array<double, kFeatureCount> offset;

  CompensatorModel() { scale.fill(1.0); offset.fill(0.0); }
  static CompensatorModel identity() { return {}; }
  void validate() const;
};

CompensatorModel train_compensator(const Eigen::MatrixXd& ideal_rows,
                                   const Eigen::MatrixXd& nonideal_rows,
                                   std::vector<std::string>* warnings = nullptr);
FeatureVector apply_compensator(const CompensatorModel& comp, const FeatureVector& fv);
Eigen::MatrixXd apply_compensator(const CompensatorModel& comp, const Eigen::MatrixXd& rows);
CompensatorModel inverse(const CompensatorModel& comp);

}  // namespace rfpuf
