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

#ifndef IMPACT_GOVERNOR__CLI_HPP_
#define IMPACT_GOVERNOR__CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "impact_governor/error.hpp"

namespace impact_governor::cli
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitRuntimeError = 3;
inline constexpr int kExitInvariantViolation = 4;

int exit_code_for(ErrorCode code);

std::string_view tool_version();

/// Provenance record written next to every run's outputs.
struct RunManifest
{
  std::string subcommand;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  /// Effective configuration; hashed together with the input file bytes.
  nlohmann::json config = nlohmann::json::object();
  std::string started_utc;
  std::string finished_utc;
  int exit_code = 0;

  /// Stable across re-runs with identical inputs and configuration.
  std::string config_hash() const;
  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path & path) const;
};

std::string utc_now();
/// FNV-1a over a file's bytes, as 16 hex digits. Missing files hash to "".
std::string file_digest(const std::filesystem::path & path);
/// Lowercase alphanumerics with every other run collapsed to '_'.
std::string slugify(std::string_view name);

/// Entry point shared by the binary and the tests. Normal output goes to
/// `out`, diagnostics to `err`; `in` feeds `govern --stdin`.
int run(const std::vector<std::string> & args, std::istream & in, std::ostream & out, std::ostream & err);

}  // namespace impact_governor::cli

#endif  // IMPACT_GOVERNOR__CLI_HPP_
