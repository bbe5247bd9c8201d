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

#include "rfpuf/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "rfpuf/common.hpp"

namespace rfpuf {

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  require(!columns_.empty(), "CsvTable: no columns");
}

void CsvTable::add_comment(std::string line) {
  require(line.find('\n') == std::string::npos, "CsvTable: comment contains a newline");
  comments_.push_back(std::move(line));
}

void CsvTable::add_row(std::vector<std::string> fields) {
  require(fields.size() == columns_.size(), "CsvTable: row has " + std::to_string(fields.size()) +
                                                " fields, expected " + std::to_string(columns_.size()));
  rows_.push_back(std::move(fields));
}

void CsvTable::write(std::ostream& os) const {
  for (const auto& c : comments_) os << "# " << c << '\n';
  auto line = [&os](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << csv_escape(fields[i]);
    os << '\n';
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
}

void CsvTable::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) fail(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    write(os);
    if (!os) fail(ErrorKind::Io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace rfpuf
