// Copyright 2026 The impact_governor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IMPACT_GOVERNOR__CSV_TABLE_HPP_
#define IMPACT_GOVERNOR__CSV_TABLE_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace impact_governor::detail
{

/// Numeric CSV with a single header row. Cells are parsed as doubles.
class CsvTable
{
public:
  static CsvTable read(const std::filesystem::path & path);
  static CsvTable parse(std::string_view text, const std::string & origin = "<memory>");

  const std::vector<std::string> & header() const { return header_; }
  std::size_t rows() const { return rows_; }
  bool has_column(std::string_view name) const;
  /// Throws MissingColumn.
  const std::vector<double> & column(std::string_view name) const;

private:
  std::string origin_;
  std::vector<std::string> header_;
  std::vector<std::vector<double>> columns_;
  std::size_t rows_ = 0;
};

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

}  // namespace impact_governor::detail

#endif  // IMPACT_GOVERNOR__CSV_TABLE_HPP_
