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

#include "csv_table.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "impact_governor/error.hpp"

namespace impact_governor::detail
{

std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, char sep)
{
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) {
      break;
    }
    pos = next + 1;
  }
  return out;
}

CsvTable CsvTable::read(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

CsvTable CsvTable::parse(std::string_view text, const std::string & origin)
{
  CsvTable table;
  table.origin_ = origin;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    const auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto fields = split_fields(line);
    if (!have_header) {
      for (auto f : fields) {
        table.header_.emplace_back(f);
      }
      table.columns_.resize(table.header_.size());
      have_header = true;
      continue;
    }
    if (fields.size() != table.header_.size()) {
      throw Error(
        ErrorCode::InvalidArgument, origin + ":" + std::to_string(line_no) + ": expected " +
        std::to_string(table.header_.size()) + " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      double value = 0.0;
      const auto * first = fields[i].data();
      const auto * last = first + fields[i].size();
      const auto res = std::from_chars(first, last, value);
      if (res.ec != std::errc() || res.ptr != last) {
        throw Error(
          ErrorCode::InvalidArgument,
          origin + ":" + std::to_string(line_no) + ": not a number: '" + std::string(fields[i]) + "'");
      }
      table.columns_[i].push_back(value);
    }
    ++table.rows_;
  }
  if (!have_header) {
    throw Error(ErrorCode::EmptyStream, origin + ": no header row");
  }
  return table;
}

bool CsvTable::has_column(std::string_view name) const
{
  for (const auto & h : header_) {
    if (h == name) {
      return true;
    }
  }
  return false;
}

const std::vector<double> & CsvTable::column(std::string_view name) const
{
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) {
      return columns_[i];
    }
  }
  throw Error(ErrorCode::MissingColumn, origin_ + ": column '" + std::string(name) + "' absent");
}

}  // namespace impact_governor::detail
