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
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rfpuf/channel.hpp"
#include "rfpuf/devicegen.hpp"
#include "rfpuf/rxchain.hpp"
#include "rfpuf/txchain.hpp"

namespace rfpuf {

/// Everything needed to turn (device, challenge, channel) into features.
struct PipelineConfig {
  ParamSpec spec;
  FrameConfig frame;
  bool matched_filter = true;
  unsigned threads = 1;

  ReceiverConfig receiver() const {
    return {matched_filter, spec.carrier_frequency_hz};
  }
  void validate() const;
};

/// How challenges are chosen across a batch.
enum class ChallengeMode {
  Fresh,           // new PRBS for every (device, index)
  SharedPerIndex,  // all devices see the same PRBS at a given index
  Fixed,           // one PRBS for everything (a fixed preamble)
};

enum class BatchRole { Training, Evaluation };

struct BatchSpec {
  std::size_t frames_per_device = 1;
  ChallengeMode challenge = ChallengeMode::Fresh;
  BatchRole role = BatchRole::Training;
};

struct FrameSeeds {
  std::uint64_t prbs = 0;
  std::uint64_t channel = 0;
  std::uint64_t noise = 0;
};

/// Seeds for frame `index` of the device with id `device_id`. They depend on
/// the device id (not its position), so sub-fleets reuse the same frames.
FrameSeeds frame_seeds(std::uint64_t seed, int device_id, std::size_t index,
                       const BatchSpec& spec);

/// transmit → channel for one frame.
IqFrame simulate_frame(const TxProfile& tx, const FrameSeeds& seeds,
                       const PipelineConfig& cfg);

/// Device-major batch: frame f belongs to fleet[f / frames_per_device].
/// by_receiver[r][f] is empty when receiver r rejected frame f.
struct FrameBatch {
  std::vector<int> labels;
  std::vector<std::vector<std::optional<FeatureVector>>> by_receiver;

  std::size_t frame_count() const { return labels.size(); }
};

FrameBatch simulate_batch(std::span<const TxProfile> fleet, const BatchSpec& spec,
                          const PipelineConfig& cfg, std::uint64_t seed,
                          std::span<const RxProfile> receivers);

/// Accepted rows with their labels; rejected frames are counted per label.
struct LabeledFeatures {
  std::vector<FeatureVector> rows;
  std::vector<int> labels;
  std::vector<int> rejected_labels;

  std::size_t rejected() const { return rejected_labels.size(); }
  std::size_t total() const { return rows.size() + rejected_labels.size(); }
  Eigen::MatrixXd matrix() const;
};

LabeledFeatures collect(const FrameBatch& batch, std::size_t receiver = 0);

/// Keeps only the frames of devices whose id is < n_devices, and at most
/// `per_device` frames per device (in index order).
FrameBatch subset(const FrameBatch& batch, std::size_t frames_per_device,
                  std::size_t n_devices, std::size_t per_device);

Eigen::MatrixXd to_matrix(std::span<const FeatureVector> rows);

}  // namespace rfpuf
