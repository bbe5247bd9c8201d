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
#include <string>

#include "rfpuf/neural.hpp"

namespace rfpuf {

void CompensatorModel::validate() const {
  for (std::size_t j = 0; j < kFeatureCount; ++j)
    require(std::isfinite(scale[j]) && std::isfinite(offset[j]),
            "CompensatorModel contains non-finite values");
}

CompensatorModel train_compensator(const Eigen::MatrixXd& ideal_rows,
                                   const Eigen::MatrixXd& nonideal_rows,
                                   std::vector<std::string>* warnings) {
  require(ideal_rows.rows() == nonideal_rows.rows(),
          "train_compensator: ideal and non-ideal row counts differ");
  require(ideal_rows.cols() == static_cast<Eigen::Index>(kFeatureCount) &&
              nonideal_rows.cols() == static_cast<Eigen::Index>(kFeatureCount),
          "train_compensator: expected 8 feature columns");
  require(ideal_rows.rows() >= 2, "train_compensator: need at least 2 pairs");
  require(ideal_rows.allFinite() && nonideal_rows.allFinite(),
          "train_compensator: non-finite feature value");

  CompensatorModel comp;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const Eigen::ArrayXd x = nonideal_rows.col(col).array();
    const Eigen::ArrayXd y = ideal_rows.col(col).array();
    const double mx = x.mean();
    const double my = y.mean();
    const Eigen::ArrayXd dx = x - mx;
    const double sxx = dx.square().sum();
    if (!(sxx > 1e-24 * std::max(1.0, mx * mx) * static_cast<double>(x.size()))) {
      if (warnings)
        warnings->push_back("feature " + std::string(FeatureVector::names()[j]) +
                            " has no spread in the non-ideal rows; identity fallback");
      continue;
    }
    comp.scale[j] = (dx * (y - my)).sum() / sxx;
    comp.offset[j] = my - comp.scale[j] * mx;
  }
  comp.validate();
  return comp;
}

FeatureVector apply_compensator(const CompensatorModel& comp, const FeatureVector& fv) {
  FeatureVector out;
  for (std::size_t j = 0; j < kFeatureCount; ++j)
    out.values[j] = comp.scale[j] * fv.values[j] + comp.offset[j];
  return out;
}

Eigen::MatrixXd apply_compensator(const CompensatorModel& comp, const Eigen::MatrixXd& rows) {
  require(rows.cols() == static_cast<Eigen::Index>(kFeatureCount),
          "apply_compensator: expected 8 feature columns");
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    out.col(c) = (rows.col(c).array() * comp.scale[j] + comp.offset[j]).matrix();
  }
  return out;
}

CompensatorModel inverse(const CompensatorModel& comp) {
  CompensatorModel inv;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    require(comp.scale[j] != 0.0, "inverse: zero scale is not invertible");
    inv.scale[j] = 1.0 / comp.scale[j];
    inv.offset[j] = -comp.offset[j] / comp.scale[j];
  }
  return inv;
}

}  // namespace rfpuf
