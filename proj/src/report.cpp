// Copyright 2026 The dpclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpclip/report.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "dpclip/errors.hpp"

namespace dpclip::report {
namespace {

bool numeric_looking(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E';
  });
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(row[i]);
  }
  out << "\r\n";
}

}  // namespace

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "text") return Format::Text;
  throw ParseError("unknown report format '" + s + "'");
}

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw std::invalid_argument("report row width differs from header");
  rows_.push_back(std::move(row));
}

void Table::write(std::ostream& out, Format format) const {
  if (format == Format::Csv) {
    write_csv(out);
  } else {
    write_text(out);
  }
}

void Table::write_csv(std::ostream& out) const {
  write_csv_row(out, header_);
  for (const auto& row : rows_) write_csv_row(out, row);
}

void Table::write_text(std::ostream& out) const {
  std::vector<std::size_t> width(header_.size());
  for (std::size_t c = 0; c < header_.size(); ++c) width[c] = header_[c].size();
  for (const auto& row : rows_)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      const std::string pad(width[c] - row[c].size(), ' ');
      line += numeric_looking(row[c]) ? pad + row[c] : row[c] + pad;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  };
  emit(header_);
  std::string rule;
  for (std::size_t c = 0; c < width.size(); ++c) {
    if (c) rule += "  ";
    rule += std::string(width[c], '-');
  }
  out << rule << '\n';
  for (const auto& row : rows_) emit(row);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace dpclip::report
