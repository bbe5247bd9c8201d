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

#include "rfpuf/pipeline.hpp"

#include <string>

#include "rfpuf/parallel.hpp"

namespace rfpuf {

void PipelineConfig::validate() const {
  spec.validate();
  frame.validate();
  require(spec.carrier_frequency_hz == frame.carrier_frequency_hz,
          "parameter spec and frame config disagree on the carrier frequency");
}

FrameSeeds frame_seeds(std::uint64_t seed, int device_id, std::size_t index,
                       const BatchSpec& spec) {
  const bool eval = spec.role == BatchRole::Evaluation;
  const Stream prbs = eval ? Stream::EvalPrbs : Stream::Prbs;
  const Stream channel = eval ? Stream::EvalChannel : Stream::Channel;
  const Stream noise = eval ? Stream::EvalNoise : Stream::Noise;
  const auto id = static_cast<std::uint64_t>(device_id);

  FrameSeeds s;
  switch (spec.challenge) {
    case ChallengeMode::Fresh:
      s.prbs = derive_seed(derive_seed(seed, id, prbs), index, prbs);
      break;
    case ChallengeMode::SharedPerIndex:
      s.prbs = derive_seed(seed, index, prbs);
      break;
    case ChallengeMode::Fixed:
      s.prbs = derive_seed(seed, 0, Stream::Baseline);
      break;
  }
  s.channel = derive_seed(derive_seed(seed, id, channel), index, channel);
  s.noise = derive_seed(derive_seed(seed, id, noise), index, noise);
  return s;
}

IqFrame simulate_frame(const TxProfile& tx, const FrameSeeds& seeds,
                       const PipelineConfig& cfg) {
  const BitStream bits = generate_prbs(cfg.frame.frame_bits, seeds.prbs);
  const ChannelRealization ch = sample_channel(cfg.spec, seeds.channel);
  return apply_channel(transmit(bits, tx, cfg.frame), ch, seeds.noise);
}

FrameBatch simulate_batch(std::span<const TxProfile> fleet, const BatchSpec& spec,
                          const PipelineConfig& cfg, std::uint64_t seed,
                          std::span<const RxProfile> receivers) {
  cfg.validate();
  require(spec.frames_per_device > 0, "frames_per_device must be positive");
  require(!receivers.empty(), "at least one receiver is required");

  const std::size_t per = spec.frames_per_device;
  const std::size_t n = fleet.size() * per;
  FrameBatch batch;
  batch.labels.resize(n);
  batch.by_receiver.assign(receivers.size(),
                           std::vector<std::optional<FeatureVector>>(n));
  const ReceiverConfig rcfg = cfg.receiver();

  parallel_for(n, cfg.threads, [&](std::size_t f) {
    const TxProfile& tx = fleet[f / per];
    batch.labels[f] = tx.device_id;
    const IqFrame frame = simulate_frame(tx, frame_seeds(seed, tx.device_id, f % per, spec), cfg);
    for (std::size_t r = 0; r < receivers.size(); ++r) {
      try {
        batch.by_receiver[r][f] = receive_and_extract(frame, receivers[r], rcfg);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::FrameRejected) throw;
      }
    }
  });
  return batch;
}

Eigen::MatrixXd to_matrix(std::span<const FeatureVector> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
  return m;
}

Eigen::MatrixXd LabeledFeatures::matrix() const { return to_matrix(rows); }

LabeledFeatures collect(const FrameBatch& batch, std::size_t receiver) {
  require(receiver < batch.by_receiver.size(), "receiver index out of range");
  LabeledFeatures out;
  const auto& col = batch.by_receiver[receiver];
  out.rows.reserve(col.size());
  out.labels.reserve(col.size());
  for (std::size_t f = 0; f < col.size(); ++f) {
    if (col[f]) {
      out.rows.push_back(*col[f]);
      out.labels.push_back(batch.labels[f]);
    } else {
      out.rejected_labels.push_back(batch.labels[f]);
    }
  }
  return out;
}

FrameBatch subset(const FrameBatch& batch, std::size_t frames_per_device,
                  std::size_t n_devices, std::size_t per_device) {
  require(frames_per_device > 0 && per_device <= frames_per_device,
          "per_device must not exceed the batch's frames per device");
  FrameBatch out;
  out.by_receiver.resize(batch.by_receiver.size());
  for (std::size_t f = 0; f < batch.labels.size(); ++f) {
    if (batch.labels[f] < 0 || static_cast<std::size_t>(batch.labels[f]) >= n_devices) continue;
    if (f % frames_per_device >= per_device) continue;
    out.labels.push_back(batch.labels[f]);
    for (std::size_t r = 0; r < batch.by_receiver.size(); ++r)
      out.by_receiver[r].push_back(batch.by_receiver[r][f]);
  }
  return out;
}

}  // namespace rfpuf
