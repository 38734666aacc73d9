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

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dpclip::report {

enum class Format { Csv, Text };

Format parse_format(const std::string& s);

/// A header plus rows of already-formatted cells.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  /// Throws std::invalid_argument when the row width differs from the header.
  void add_row(std::vector<std::string> row);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  void write(std::ostream& out, Format format) const;
  void write_csv(std::ostream& out) const;
  /// Columns padded to their widest cell; numeric-looking cells right-aligned.
  void write_text(std::ostream& out) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// RFC 4180: quote when the field holds a comma, quote, CR or LF; double
/// embedded quotes.
std::string csv_escape(const std::string& field);

/// Shortest round-trip representation of a double.
std::string format_double(double v);

}  // namespace dpclip::report
