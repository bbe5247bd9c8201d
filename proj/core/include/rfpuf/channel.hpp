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

#include "rfpuf/devicegen.hpp"
#include "rfpuf/txchain.hpp"

namespace rfpuf {

/// Noise variance per complex sample for a given Eb/N0:
///   σ² = P_sig / (10^(EbN0/10) · bits_per_symbol / samples_per_symbol).
double noise_variance(double signal_power, double eb_n0_db,
                      int bits_per_symbol, int samples_per_symbol);

/// Flat channel: gain → Doppler rotation → complex AWGN, in that order.
/// eb_n0_db = +inf disables the noise stage.
IqFrame apply_channel(IqFrame frame, const ChannelRealization& ch,
                      std::uint64_t seed, int bits_per_symbol = kBitsPerSymbol);

}  // namespace rfpuf
