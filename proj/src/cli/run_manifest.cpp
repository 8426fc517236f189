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

#include <cctype>
#include <chrono>
#include <fstream>
#include <iterator>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "impact_governor/cli.hpp"
#include "impact_governor/sim.hpp"

#ifndef IMPACT_GOVERNOR_VERSION
#define IMPACT_GOVERNOR_VERSION "0.0.0"
#endif

namespace impact_governor::cli
{

std::string_view tool_version() { return IMPACT_GOVERNOR_VERSION; }

int exit_code_for(ErrorCode code)
{
  switch (code) {
    case ErrorCode::MissingColumn:
    case ErrorCode::RateMismatch:
    case ErrorCode::EmptyStream:
    case ErrorCode::TriggerMissing:
    case ErrorCode::AlignmentOutOfTolerance:
    case ErrorCode::LengthMismatch:
    case ErrorCode::EmptyInput:
    case ErrorCode::SchemaVersionMismatch:
    case ErrorCode::InvalidConfig:
    case ErrorCode::ScenarioInvariantViolation:
    case ErrorCode::InvalidArgument:
    case ErrorCode::Io:
    case ErrorCode::Underdetermined:
    case ErrorCode::DegenerateX:
      return kExitInputError;
    case ErrorCode::InvariantViolation:
    case ErrorCode::RestitutionOutOfRange:
      return kExitInvariantViolation;
    default:
      return kExitRuntimeError;
  }
}

std::string utc_now()
{
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

std::string file_digest(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return {};
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fmt::format("{:016x}", sim::fnv1a64(bytes));
}

std::string slugify(std::string_view name)
{
  std::string out;
  bool pending = false;
  for (unsigned char c : name) {
    if (std::isalnum(c) && c < 0x80) {
      if (pending && !out.empty()) {
        out += '_';
      }
      pending = false;
      out += static_cast<char>(std::tolower(c));
    } else {
      pending = true;
    }
  }
  return out.empty() ? "unnamed" : out;
}

std::string RunManifest::config_hash() const
{
  nlohmann::json key;
  key["subcommand"] = subcommand;
  key["config"] = config;
  auto & files = key["inputs"];
  files = nlohmann::json::array();
  for (const auto & p : inputs) {
    files.push_back({std::filesystem::path(p).filename().string(), file_digest(p)});
  }
  return fmt::format("{:016x}", sim::fnv1a64(key.dump()));
}

nlohmann::ordered_json RunManifest::to_json() const
{
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand;
  j["tool_version"] = std::string(tool_version());
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["config"] = config;
  j["config_hash"] = config_hash();
  j["started_utc"] = started_utc;
  j["finished_utc"] = finished_utc;
  j["exit_code"] = exit_code;
  return j;
}

void RunManifest::write(const std::filesystem::path & path) const
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  }
  out << to_json().dump(2) << '\n';
}

}  // namespace impact_governor::cli
