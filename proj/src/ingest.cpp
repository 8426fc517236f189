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

#include "impact_governor/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "csv_table.hpp"
#include "impact_governor/error.hpp"

namespace impact_governor::ingest
{

namespace
{

void check_rate(const std::vector<double> & time, double declared_hz, const std::string & what)
{
  if (!(declared_hz > 0.0) || !std::isfinite(declared_hz)) {
    throw Error(ErrorCode::InvalidArgument, what + ": declared sample rate must be > 0");
  }
  if (time.size() < 2) {
    throw Error(ErrorCode::EmptyStream, what + ": fewer than two samples");
  }
  for (std::size_t i = 1; i < time.size(); ++i) {
    if (!(time[i] > time[i - 1])) {
      throw Error(
        ErrorCode::RateMismatch, what + ": timestamps not strictly increasing at row " +
        std::to_string(i));
    }
  }
  const double mean_step = (time.back() - time.front()) / static_cast<double>(time.size() - 1);
  const double deviation = std::abs(mean_step * declared_hz - 1.0);
  if (deviation > kRateTolerance) {
    throw Error(
      ErrorCode::RateMismatch, what + ": declared " + std::to_string(declared_hz) +
      " Hz but rows are spaced " + std::to_string(1.0 / mean_step) + " Hz apart");
  }
}

// First sample at which the trigger line reads high.
std::optional<double> first_trigger(
  const std::vector<double> & time, const std::vector<double> & trigger)
{
  for (std::size_t i = 0; i < trigger.size(); ++i) {
    if (trigger[i] > 0.5) {
      return time[i];
    }
  }
  return std::nullopt;
}

std::size_t nearest_index(std::span<const double> time, double t)
{
  const auto it = std::lower_bound(time.begin(), time.end(), t);
  if (it == time.begin()) {
    return 0;
  }
  if (it == time.end()) {
    return time.size() - 1;
  }
  const auto hi = static_cast<std::size_t>(it - time.begin());
  return (t - time[hi - 1] <= time[hi] - t) ? hi - 1 : hi;
}

}  // namespace

void TrialMeta::validate() const
{
  if (!(mass_kg > 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "airframe mass must be > 0");
  }
  if (!(angle_deg >= 0.0 && angle_deg <= 90.0)) {
    throw Error(ErrorCode::InvariantViolation, "impact angle must lie in [0, 90] deg");
  }
}

ForceStream load_force_stream(const std::filesystem::path & path, double declared_rate_hz)
{
  const auto table = detail::CsvTable::read(path);
  ForceStream s;
  s.time = table.column("t_s");
  s.ch1 = table.column("f1_N");
  s.ch2 = table.column("f2_N");
  s.ch3 = table.column("f3_N");
  s.accel = table.column("accel_mps2");
  const auto & trig = table.column("trigger");
  if (table.rows() == 0) {
    throw Error(ErrorCode::EmptyStream, path.string() + ": no data rows");
  }
  check_rate(s.time, declared_rate_hz, path.string());
  s.trigger_time = first_trigger(s.time, trig);
  return s;
}

RangeStream load_range_stream(const std::filesystem::path & path, double declared_rate_hz)
{
  const auto table = detail::CsvTable::read(path);
  RangeStream s;
  s.time = table.column("t_s");
  s.range = table.column("range_m");
  const auto & trig = table.column("trigger");
  if (table.rows() == 0) {
    throw Error(ErrorCode::EmptyStream, path.string() + ": no data rows");
  }
  check_rate(s.time, declared_rate_hz, path.string());
  s.trigger_time = first_trigger(s.time, trig);
  return s;
}

LoadedTrial load_trial(const std::filesystem::path & manifest_path)
{
  std::ifstream in(manifest_path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open " + manifest_path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::InvalidArgument, manifest_path.string() + ": " + e.what());
  }

  LoadedTrial out;
  try {
    out.meta.trial_id = doc.value("trial_id", manifest_path.stem().string());
    out.meta.configuration = doc.at("configuration").get<std::string>();
    out.meta.mass_kg = doc.at("mass_kg").get<double>();
    out.meta.angle_deg = doc.at("angle_deg").get<double>();
    out.meta.nominal_speed_mps = doc.at("nominal_speed_mps").get<double>();
    out.meta.material = doc.value("material", std::string{});
    out.raw.sample_rate_force = doc.value("sample_rate_force_hz", kDefaultForceRateHz);
    out.raw.sample_rate_range = doc.value("sample_rate_range_hz", kDefaultRangeRateHz);
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::InvalidArgument, manifest_path.string() + ": " + e.what());
  }
  out.meta.validate();

  const auto base = manifest_path.parent_path();
  const auto force_path = base / doc.at("force_csv").get<std::string>();
  const auto range_path = base / doc.at("range_csv").get<std::string>();

  auto force = load_force_stream(force_path, out.raw.sample_rate_force);
  auto range = load_range_stream(range_path, out.raw.sample_rate_range);
  out.raw.force_time = std::move(force.time);
  out.raw.force_ch1 = std::move(force.ch1);
  out.raw.force_ch2 = std::move(force.ch2);
  out.raw.force_ch3 = std::move(force.ch3);
  out.raw.accel = std::move(force.accel);
  out.raw.trigger_time_force = force.trigger_time;
  out.raw.range_time = std::move(range.time);
  out.raw.range = std::move(range.range);
  out.raw.trigger_time_range = range.trigger_time;
  return out;
}

std::vector<double> sum_load_cells(
  std::span<const double> ch1, std::span<const double> ch2, std::span<const double> ch3)
{
  if (ch1.size() != ch2.size() || ch1.size() != ch3.size()) {
    throw Error(ErrorCode::LengthMismatch, "load-cell channels differ in length");
  }
  std::vector<double> total(ch1.size());
  for (std::size_t i = 0; i < ch1.size(); ++i) {
    total[i] = ch1[i] + ch2[i] + ch3[i];
  }
  return total;
}

std::vector<double> zero_order_hold(
  std::span<const double> src_time, std::span<const double> src_value,
  std::span<const double> dst_time)
{
  if (src_time.size() != src_value.size()) {
    throw Error(ErrorCode::LengthMismatch, "zero-order hold: time/value lengths differ");
  }
  if (src_time.empty()) {
    throw Error(ErrorCode::EmptyStream, "zero-order hold: empty source");
  }
  std::vector<double> out(dst_time.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < dst_time.size(); ++i) {
    // Destination grids are monotone, so the source cursor only moves forward.
    while (j + 1 < src_time.size() && src_time[j + 1] <= dst_time[i]) {
      ++j;
    }
    out[i] = src_value[j];
  }
  return out;
}

TrialRecord align_streams(const RawAcquisition & raw, const TrialMeta & meta)
{
  if (!raw.trigger_time_force || !raw.trigger_time_range) {
    throw Error(
      ErrorCode::TriggerMissing,
      !raw.trigger_time_force ? "force stream has no trigger pulse" :
      "range stream has no trigger pulse");
  }
  if (!(raw.sample_rate_force > 0.0) || !(raw.sample_rate_range > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sample rates must be > 0");
  }
  const std::size_t n = raw.force_time.size();
  if (n == 0 || raw.range_time.empty()) {
    throw Error(ErrorCode::EmptyStream, "empty acquisition stream");
  }
  if (raw.force_ch1.size() != n || raw.accel.size() != n || raw.range.size() != raw.range_time.size()) {
    throw Error(ErrorCode::LengthMismatch, "stream channels differ in length");
  }

  TrialRecord rec;
  rec.meta = meta;
  rec.sample_rate = raw.sample_rate_force;
  rec.range_sample_rate = raw.sample_rate_range;
  rec.force_total = sum_load_cells(raw.force_ch1, raw.force_ch2, raw.force_ch3);
  rec.accel = raw.accel;

  // The force trigger sits on a force sample; rebuild a uniform grid around it.
  const double t_trig_f = *raw.trigger_time_force;
  const std::size_t i_trig = nearest_index(raw.force_time, t_trig_f);
  const double step = 1.0 / raw.sample_rate_force;
  rec.time.resize(n);
  double residual = std::abs(raw.force_time[i_trig] - t_trig_f);
  for (std::size_t i = 0; i < n; ++i) {
    rec.time[i] = (static_cast<double>(i) - static_cast<double>(i_trig)) * step;
    residual = std::max(residual, std::abs((raw.force_time[i] - t_trig_f) - rec.time[i]));
  }
  if (residual > kAlignmentToleranceS) {
    throw Error(
      ErrorCode::AlignmentOutOfTolerance,
      "force timestamps deviate " + std::to_string(residual * 1e3) +
      " ms from the uniform grid (limit 0.1 ms)");
  }

  const double t_trig_r = *raw.trigger_time_range;
  rec.range_time.resize(raw.range_time.size());
  for (std::size_t j = 0; j < raw.range_time.size(); ++j) {
    rec.range_time[j] = raw.range_time[j] - t_trig_r;
  }
  rec.range = raw.range;
  rec.range_resampled = zero_order_hold(rec.range_time, rec.range, rec.time);

  rec.meta.alignment_residual_s = residual;
  rec.meta.range_offset_s = t_trig_r - t_trig_f;
  return rec;
}

}  // namespace impact_governor::ingest
