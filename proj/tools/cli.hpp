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

#include <ostream>
#include <string>
#include <vector>

namespace rfpuf::cli {

/// Exit statuses of the rfpuf tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs the tool on `args` (args[0] is the program name). Results go to `out`,
/// progress and the one-line error record to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `error kind=<kind> message="<text>"` with quotes and backslashes escaped.
std::string error_line(std::string_view kind, std::string_view message);

}  // namespace rfpuf::cli
