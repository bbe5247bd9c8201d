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

#include <span>
#include <vector>

#include "rfpuf/common.hpp"

namespace rfpuf {

/// Forward DFT (unnormalized, e^{-j2πkn/N}) of any length. Thread-safe.
std::vector<cplx> fft(std::span<const cplx> input);

/// Forward DFT of `input` zero-padded (or truncated) to `length` points.
std::vector<cplx> fft(std::span<const cplx> input, std::size_t length);

std::size_t next_pow2(std::size_t n);

}  // namespace rfpuf
