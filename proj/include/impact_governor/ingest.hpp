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

#ifndef IMPACT_GOVERNOR__INGEST_HPP_
#define IMPACT_GOVERNOR__INGEST_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace impact_governor::ingest
{

inline constexpr double kDefaultForceRateHz = 6250.0;
inline constexpr double kDefaultRangeRateHz = 1000.0;
/// Maximum tolerated timing error between the two acquisition clocks.
inline constexpr double kAlignmentToleranceS = 1.0e-4;
/// Declared rate vs. observed row spacing.
inline constexpr double kRateTolerance = 1.0e-4;

struct TrialMeta
{
  std::string trial_id;
  std::string configuration;  // e.g. "Carbon-0°"
  double mass_kg = 0.0;
  double angle_deg = 0.0;
  double nominal_speed_mps = 0.0;
  std::string material;
  // Filled by align_streams.
  double alignment_residual_s = 0.0;
  double range_offset_s = 0.0;  // trigger_time_range - trigger_time_force

  /// Throws InvariantViolation when mass <= 0 or angle outside [0, 90].
  void validate() const;
};

/// Both acquisition streams exactly as logged, each on its own clock.
struct RawAcquisition
{
  double sample_rate_force = kDefaultForceRateHz;
  std::vector<double> force_time;
  std::vector<double> force_ch1;
  std::vector<double> force_ch2;
  std::vector<double> force_ch3;
  std::vector<double> accel;
  std::optional<double> trigger_time_force;

  double sample_rate_range = kDefaultRangeRateHz;
  std::vector<double> range_time;
  std::vector<double> range;
  std::optional<double> trigger_time_range;
};

/// One trial on the force clock, t = 0 at the trigger instant.
struct TrialRecord
{
  double sample_rate = kDefaultForceRateHz;
  std::vector<double> time;
  std::vector<double> force_total;
  std::vector<double> accel;
  std::vector<double> range_resampled;
  // Range stream at its native rate on the shared (trigger-referenced) clock.
  // The velocity estimator runs on these samples rather than the held copy.
  double range_sample_rate = kDefaultRangeRateHz;
  std::vector<double> range_time;
  std::vector<double> range;
  TrialMeta meta;
};

struct LoadedTrial
{
  RawAcquisition raw;
  TrialMeta meta;
};

struct ForceStream
{
  std::vector<double> time;
  std::vector<double> ch1;
  std::vector<double> ch2;
  std::vector<double> ch3;
  std::vector<double> accel;
  std::optional<double> trigger_time;
};

struct RangeStream
{
  std::vector<double> time;
  std::vector<double> range;
  std::optional<double> trigger_time;
};

ForceStream load_force_stream(const std::filesystem::path & path, double declared_rate_hz);
RangeStream load_range_stream(const std::filesystem::path & path, double declared_rate_hz);

/// Loads a trial manifest (JSON) and both stream files it references.
/// Stream paths are resolved relative to the manifest's directory.
LoadedTrial load_trial(const std::filesystem::path & manifest_path);

/// Elementwise sum of the three load-cell channels.
std::vector<double> sum_load_cells(
  std::span<const double> ch1, std::span<const double> ch2, std::span<const double> ch3);

/// Shifts both streams so the trigger instants coincide at t = 0 and holds
/// the range stream onto the force grid.
TrialRecord align_streams(const RawAcquisition & raw, const TrialMeta & meta = {});

/// Zero-order hold of (src_time, src_value) onto dst_time. Before the first
/// source sample the first value is held.
std::vector<double> zero_order_hold(
  std::span<const double> src_time, std::span<const double> src_value,
  std::span<const double> dst_time);

}  // namespace impact_governor::ingest

#endif  // IMPACT_GOVERNOR__INGEST_HPP_
