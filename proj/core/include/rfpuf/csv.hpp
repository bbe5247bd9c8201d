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

#include <filesystem>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rfpuf {

/// RFC-4180 field quoting (only when the field needs it).
std::string csv_escape(std::string_view field);

/// Shortest round-trip decimal text (dot separator, locale independent).
std::string format_double(double v);

/// In-memory CSV: optional '#' comment preamble, header, rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_comment(std::string line);
  void add_row(std::vector<std::string> fields);

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  void write(std::ostream& os) const;
  /// Writes to a temporary file then renames it into place.
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> comments_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace rfpuf
