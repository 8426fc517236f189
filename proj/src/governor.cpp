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

#include "impact_governor/governor.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "impact_governor/error.hpp"

namespace impact_governor::governor
{

std::string_view to_string(CapSource source)
{
  switch (source) {
    case CapSource::None: return "none";
    case CapSource::Iso: return "iso";
    case CapSource::Force: return "force";
    case CapSource::StaleFailsafe: return "stale-failsafe";
  }
  return "unknown";
}

std::string_view to_string(GovernorMode mode)
{
  return mode == GovernorMode::Binary ? "binary" : "ramp";
}

GovernorMode parse_mode(std::string_view name)
{
  if (name == "binary") {
    return GovernorMode::Binary;
  }
  if (name == "ramp") {
    return GovernorMode::Ramp;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown governor mode '" + std::string(name) + "'");
}

void GovernorConfig::validate() const
{
  auto require = [](bool ok, const char * what) {
    if (!ok) {
      throw Error(ErrorCode::InvalidConfig, what);
    }
  };
  require(t_q_s >= 0.0 && std::isfinite(t_q_s), "t_q_s must be >= 0");
  require(decel_mps2 > 0.0 && std::isfinite(decel_mps2), "decel_mps2 must be > 0");
  require(reach_margin_m >= 0.0 && std::isfinite(reach_margin_m), "reach_margin_m must be >= 0");
  require(v_cruise_mps > 0.0 && std::isfinite(v_cruise_mps), "v_cruise_mps must be > 0");
  require(f_star_n > 0.0 && std::isfinite(f_star_n), "f_star_N must be > 0");
  require(
    v_platform_max_mps > 0.0 && std::isfinite(v_platform_max_mps), "v_platform_max_mps must be > 0");
  require(detection_rate_hz > 0.0, "detection_rate_hz must be > 0");
  require(
    staleness_timeout_s >= 1.0 / detection_rate_hz,
    "staleness_timeout_s must be at least one detection period");
  require(ramp_exit_factor >= 1.0, "ramp_exit_factor must be >= 1");
  const double limit = body_region ? fit::body_region_limit(*body_region) : fit::max_body_region_limit();
  require(f_star_n <= limit, "f_star_N exceeds the body-region force limit in use");
  if (peak_to_average) {
    require(*peak_to_average > 0.0, "peak_to_average must be > 0");
  }
}

double GovernorConfig::average_force_target(const fit::AirframeProfile & profile) const
{
  if (f_star_kind == ForceTarget::Average) {
    return f_star_n;
  }
  const auto rho = peak_to_average ? peak_to_average : profile.peak_to_average;
  if (!rho || !(*rho > 0.0)) {
    throw Error(
      ErrorCode::InvalidConfig, "peak force target needs a peak-to-average ratio (config or profile)");
  }
  return f_star_n / *rho;
}

GovernorConfig governor_config_from_json(const nlohmann::json & doc, GovernorConfig cfg)
{
  try {
    cfg.t_q_s = doc.value("t_q_s", cfg.t_q_s);
    cfg.decel_mps2 = doc.value("decel_mps2", cfg.decel_mps2);
    cfg.reach_margin_m = doc.value("reach_margin_m", cfg.reach_margin_m);
    cfg.v_cruise_mps = doc.value("v_cruise_mps", cfg.v_cruise_mps);
    cfg.v_platform_max_mps = doc.value("v_platform_max_mps", cfg.v_platform_max_mps);
    cfg.staleness_timeout_s = doc.value("staleness_timeout_s", cfg.staleness_timeout_s);
    cfg.detection_rate_hz = doc.value("detection_rate_hz", cfg.detection_rate_hz);
    cfg.ramp_exit_factor = doc.value("ramp_exit_factor", cfg.ramp_exit_factor);
    if (doc.contains("mode")) {
      cfg.mode = parse_mode(doc.at("mode").get<std::string>());
    }
    if (doc.contains("stale_failsafe")) {
      const auto v = doc.at("stale_failsafe").get<std::string>();
      if (v == "force") {
        cfg.stale_failsafe = StaleFailsafe::ForceCap;
      } else if (v == "zero") {
        cfg.stale_failsafe = StaleFailsafe::Zero;
      } else {
        throw Error(ErrorCode::InvalidConfig, "stale_failsafe must be 'force' or 'zero'");
      }
    }
    if (doc.contains("body_region") && !doc.at("body_region").is_null()) {
      cfg.body_region = fit::parse_body_region(doc.at("body_region").get<std::string>());
      cfg.f_star_n = fit::body_region_limit(*cfg.body_region);
    }
    cfg.f_star_n = doc.value("f_star_N", cfg.f_star_n);
    if (doc.contains("f_star_kind")) {
      const auto v = doc.at("f_star_kind").get<std::string>();
      if (v == "average") {
        cfg.f_star_kind = ForceTarget::Average;
      } else if (v == "peak") {
        cfg.f_star_kind = ForceTarget::Peak;
      } else {
        throw Error(ErrorCode::InvalidConfig, "f_star_kind must be 'average' or 'peak'");
      }
    }
    if (doc.contains("peak_to_average") && !doc.at("peak_to_average").is_null()) {
      cfg.peak_to_average = doc.at("peak_to_average").get<double>();
    }
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::InvalidConfig, std::string("governor config: ") + e.what());
  }
  return cfg;
}

nlohmann::json governor_config_to_json(const GovernorConfig & cfg)
{
  nlohmann::json doc;
  doc["t_q_s"] = cfg.t_q_s;
  doc["decel_mps2"] = cfg.decel_mps2;
  doc["reach_margin_m"] = cfg.reach_margin_m;
  doc["v_cruise_mps"] = cfg.v_cruise_mps;
  doc["f_star_N"] = cfg.f_star_n;
  doc["f_star_kind"] = cfg.f_star_kind == ForceTarget::Average ? "average" : "peak";
  if (cfg.peak_to_average) {
    doc["peak_to_average"] = *cfg.peak_to_average;
  }
  if (cfg.body_region) {
    doc["body_region"] = std::string(fit::to_string(*cfg.body_region));
  }
  doc["v_platform_max_mps"] = cfg.v_platform_max_mps;
  doc["staleness_timeout_s"] = cfg.staleness_timeout_s;
  doc["detection_rate_hz"] = cfg.detection_rate_hz;
  doc["mode"] = std::string(to_string(cfg.mode));
  doc["stale_failsafe"] = cfg.stale_failsafe == StaleFailsafe::ForceCap ? "force" : "zero";
  doc["ramp_exit_factor"] = cfg.ramp_exit_factor;
  return doc;
}

double iso_radius(double v, const GovernorConfig & cfg)
{
  return v * cfg.t_q_s + 1.5 * v * v / cfg.decel_mps2 + cfg.reach_margin_m;
}

double iso_speed_cap(double d, const GovernorConfig & cfg)
{
  if (std::isinf(d) && d > 0.0) {
    return cfg.v_platform_max_mps;
  }
  const double slack = d - cfg.reach_margin_m;
  if (!(slack > 0.0)) {
    return 0.0;
  }
  // Positive root of 3 v^2 / (2 a) + T_q v - slack = 0, in the form that
  // stays accurate when T_q dominates.
  const double v = 2.0 * slack /
    (cfg.t_q_s + std::sqrt(cfg.t_q_s * cfg.t_q_s + 6.0 * slack / cfg.decel_mps2));
  return std::min(v, cfg.v_platform_max_mps);
}

double avg_impact_force(double v, const fit::AirframeProfile & profile)
{
  return profile.mass_kg * v * (1.0 + profile.e_hat(v)) / profile.dt_s;
}

bool force_map_monotone(const fit::AirframeProfile & profile, double v_max, std::size_t points)
{
  double prev = avg_impact_force(0.0, profile);
  for (std::size_t i = 1; i < points; ++i) {
    const double v = v_max * static_cast<double>(i) / static_cast<double>(points - 1);
    const double f = avg_impact_force(v, profile);
    if (f < prev) {
      return false;
    }
    prev = f;
  }
  return true;
}

ForceCap force_speed_cap(double f_star, const fit::AirframeProfile & profile, const GovernorConfig & cfg)
{
  if (!(f_star > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "force target must be > 0");
  }
  ForceCap out;
  const double v_max = cfg.v_platform_max_mps;
  out.non_monotone = !force_map_monotone(profile, v_max);
  // Invariant: F(lo) <= f_star < F(hi).
  double lo = 0.0;
  double hi = v_max;
  if (out.non_monotone) {
    // Bracket the first crossing so no slower speed exceeds the target.
    constexpr std::size_t kGrid = 1000;
    bool crossed = false;
    for (std::size_t i = 1; i <= kGrid && !crossed; ++i) {
      const double v = v_max * static_cast<double>(i) / static_cast<double>(kGrid);
      if (avg_impact_force(v, profile) > f_star) {
        hi = v;
        lo = v_max * static_cast<double>(i - 1) / static_cast<double>(kGrid);
        crossed = true;
      }
    }
    if (!crossed) {
      out.v = v_max;
      return out;
    }
  } else if (avg_impact_force(v_max, profile) <= f_star) {
    out.v = v_max;
    return out;
  }
  constexpr double kBracket = 1e-10;
  while (hi - lo > kBracket) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      break;
    }
    if (avg_impact_force(mid, profile) <= f_star) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.v = lo;
  return out;
}

FusedCap fuse_caps(double d, const GovernorConfig & cfg, double v_force, bool was_in_force_zone)
{
  const double v_max = cfg.v_platform_max_mps;
  const double force_cap = std::min(v_force, v_max);
  if (cfg.mode == GovernorMode::Binary) {
    if (d < iso_radius(cfg.v_cruise_mps, cfg)) {
      return {force_cap, CapSource::Force, true};
    }
    return {v_max, CapSource::None, false};
  }

  const double s_force = iso_radius(force_cap, cfg);
  const bool inside = was_in_force_zone ? d <= cfg.ramp_exit_factor * s_force : d < s_force;
  if (inside) {
    return {force_cap, CapSource::Force, true};
  }
  const double iso = iso_speed_cap(d, cfg);
  const double cap = std::max(force_cap, std::min(iso, v_max));
  CapSource source = CapSource::None;
  if (cap < v_max) {
    source = iso > force_cap ? CapSource::Iso : CapSource::Force;
  }
  return {cap, source, false};
}

FusedCap fuse_caps(double d, const GovernorConfig & cfg, const fit::AirframeProfile & profile)
{
  const double v_force = force_speed_cap(cfg.average_force_target(profile), profile, cfg).v;
  return fuse_caps(d, cfg, v_force, false);
}

double VelocityCommand::speed() const
{
  return std::sqrt(vx * vx + vy * vy + vz * vz);
}

bool VelocityCommand::finite() const
{
  return std::isfinite(vx) && std::isfinite(vy) && std::isfinite(vz);
}

VelocityCommand limit_command(const VelocityCommand & cmd, double cap)
{
  if (!(cap >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "speed cap must be >= 0");
  }
  if (!cmd.finite()) {
    return {0.0, 0.0, 0.0, cmd.t};
  }
  const double n = cmd.speed();
  // Rescaling lands within a few ulp of cap; accept that band as saturated
  // so a second pass leaves the command untouched.
  if (n <= cap + 1e-12 * std::max(1.0, cap)) {
    return cmd;
  }
  const double k = cap / n;
  return {cmd.vx * k, cmd.vy * k, cmd.vz * k, cmd.t};
}

Governor::Governor(GovernorConfig cfg, fit::AirframeProfile profile)
: cfg_(std::move(cfg)), profile_(std::move(profile))
{
  cfg_.validate();
  profile_.validate();
  const auto fc = force_speed_cap(cfg_.average_force_target(profile_), profile_, cfg_);
  v_force_ = fc.v;
  non_monotone_ = fc.non_monotone;
  s_cruise_ = iso_radius(cfg_.v_cruise_mps, cfg_);
  s_force_ = iso_radius(v_force_, cfg_);

  GovernorState initial;
  initial.active_cap = cfg_.stale_failsafe == StaleFailsafe::Zero ? 0.0 : v_force_;
  initial.cap_source = CapSource::StaleFailsafe;
  initial.s_current = cfg_.mode == GovernorMode::Binary ? s_cruise_ : s_force_;
  snapshot_.store(initial);
}

void Governor::on_range(double d, double t)
{
  if (std::isnan(d) || d < 0.0 || !std::isfinite(t)) {
    throw Error(ErrorCode::InvalidArgument, "range sample needs d >= 0 and a finite timestamp");
  }
  const auto prev = snapshot_.load();
  if (prev.has_distance && t < prev.last_distance_time) {
    return;  // out-of-order reading; keep the newer one
  }
  const auto fused = fuse_caps(d, cfg_, v_force_, prev.in_force_zone);
  GovernorState next;
  next.has_distance = true;
  next.last_distance = d;
  next.last_distance_time = t;
  next.active_cap = fused.cap;
  next.cap_source = fused.source;
  next.in_force_zone = fused.in_force_zone;
  next.s_current = cfg_.mode == GovernorMode::Binary ? s_cruise_ : s_force_;
  snapshot_.store(next);
}

void Governor::on_odometry(double vx, double vy, double vz, double /*t*/)
{
  odom_speed_.store(std::sqrt(vx * vx + vy * vy + vz * vz), std::memory_order_relaxed);
}

LimitedCommand Governor::on_command(const VelocityCommand & cmd)
{
  const auto st = snapshot_.load();
  const bool stale = !st.has_distance || (cmd.t - st.last_distance_time > cfg_.staleness_timeout_s);
  double cap = st.active_cap;
  CapSource source = st.cap_source;
  if (stale) {
    cap = cfg_.stale_failsafe == StaleFailsafe::Zero ? 0.0 : std::min(v_force_, cfg_.v_platform_max_mps);
    source = CapSource::StaleFailsafe;
  }

  LimitedCommand out;
  out.cmd = limit_command(cmd, cap);
  out.cap = cap;
  out.source = source;

  auto & r = out.record;
  r.t = cmd.t;
  r.input_speed = cmd.speed();
  r.output_speed = out.cmd.speed();
  r.d = st.has_distance ? st.last_distance : std::numeric_limits<double>::infinity();
  r.s = st.s_current;
  r.cap = cap;
  r.source = source;
  r.non_finite = !cmd.finite();
  r.clock_skew = last_command_t_ && cmd.t < *last_command_t_;
  r.violated = r.output_speed > cap + kComplianceEpsilon;

  last_command_t_ = last_command_t_ ? std::max(*last_command_t_, cmd.t) : cmd.t;
  ++emitted_;
  if (r.violated) {
    ++violations_;
  }
  if (sink_) {
    sink_(r);
  }
  return out;
}

std::string format_compliance_row(const ComplianceRecord & r)
{
  std::string flags;
  if (r.clock_skew) {
    flags += "clock_skew";
  }
  if (r.non_finite) {
    flags += flags.empty() ? "non_finite" : ";non_finite";
  }
  return fmt::format(
    "{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{},{}", r.t, r.input_speed, r.output_speed, r.d,
    r.s, r.cap, to_string(r.source), r.violated ? 1 : 0, flags);
}

ComplianceLog::ComplianceLog(const std::filesystem::path & path)
{
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  out_.open(path, std::ios::app);
  if (!out_) {
    throw Error(ErrorCode::Io, "cannot open compliance log " + path.string());
  }
  if (fresh) {
    out_ << kComplianceCsvHeader << '\n';
  }
}

ComplianceLog::~ComplianceLog()
{
  out_.flush();
}

void ComplianceLog::append(const ComplianceRecord & r)
{
  out_ << format_compliance_row(r) << '\n';
}

void ComplianceLog::flush()
{
  out_.flush();
}

}  // namespace impact_governor::governor
