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


#include <benchmark/benchmark.h>

#include <random>

#include "rfpuf/channel.hpp"
#include "rfpuf/devicegen.hpp"
#include "rfpuf/neural.hpp"
#include "rfpuf/pipeline.hpp"
#include "rfpuf/randomness.hpp"
#include "rfpuf/rxchain.hpp"
#include "rfpuf/txchain.hpp"

namespace {

using namespace rfpuf;

const TxProfile& device() {
  static const TxProfile tx = sample_fleet(1, ParamSpec{}, 7).front();
  return tx;
}

IqFrame received_frame() {
  const ParamSpec spec;
  IqFrame f = transmit(generate_prbs(30000, 1), device(), FrameConfig{});
  return apply_channel(std::move(f), sample_channel(spec, 2), 3);
}

void BM_Transmit(benchmark::State& state) {
  const BitStream bits = generate_prbs(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(transmit(bits, device(), FrameConfig{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Transmit)->Arg(3000)->Arg(30000)->Unit(benchmark::kMillisecond);

void BM_Channel(benchmark::State& state) {
  const IqFrame f = transmit(generate_prbs(30000, 1), device(), FrameConfig{});
  const ChannelRealization ch = sample_channel(ParamSpec{}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(apply_channel(f, ch, 3));
}
BENCHMARK(BM_Channel)->Unit(benchmark::kMillisecond);

void BM_Receive(benchmark::State& state) {
  const IqFrame f = received_frame();
  const ReceiverConfig cfg{state.range(0) != 0, ParamSpec{}.carrier_frequency_hz};
  for (auto _ : state) benchmark::DoNotOptimize(receive_and_extract(f, RxProfile{}, cfg));
}
BENCHMARK(BM_Receive)->Arg(1)->Arg(0)->ArgName("matched_filter")->Unit(benchmark::kMillisecond);

void BM_Train(benchmark::State& state) {
  const auto n_tx = static_cast<std::size_t>(state.range(0));
  const ParamSpec spec;
  const auto fleet = sample_fleet(n_tx, spec, 11);
  PipelineConfig pc;
  const BatchSpec bs{10, ChallengeMode::Fresh, BatchRole::Training};
  const RxProfile ideal[] = {RxProfile{}};
  const LabeledFeatures rows = collect(simulate_batch(fleet, bs, pc, 12, ideal));
  const Eigen::MatrixXd x = rows.matrix();
  TrainingOptions opt;
  for (auto _ : state) benchmark::DoNotOptimize(train_classifier(x, rows.labels, opt, 13));
}
BENCHMARK(BM_Train)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_NistSubset(benchmark::State& state) {
  std::mt19937_64 rng(5);
  Bits bits(1000000);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1);
  NistConfig cfg;
  cfg.record_length = 100000;
  for (auto _ : state) benchmark::DoNotOptimize(nist_subset(bits, cfg));
}
BENCHMARK(BM_NistSubset)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
