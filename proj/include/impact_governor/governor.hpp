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

#ifndef IMPACT_GOVERNOR__GOVERNOR_HPP_
#define IMPACT_GOVERNOR__GOVERNOR_HPP_

#include <array>
#include <atomic>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>

#include <nlohmann/json_fwd.hpp>

#include "impact_governor/fit.hpp"

namespace impact_governor::governor
{

enum class GovernorMode { Binary, Ramp };
enum class CapSource { None, Iso, Force, StaleFailsafe };
enum class StaleFailsafe { ForceCap, Zero };
enum class ForceTarget { Average, Peak };

std::string_view to_string(CapSource source);
std::string_view to_string(GovernorMode mode);
GovernorMode parse_mode(std::string_view name);

struct GovernorConfig
{
  double t_q_s = 0.1;  // end-to-end response latency
  double decel_mps2 = 15.0;  // worst-case deceleration
  double reach_margin_m = 1.2;  // C
  double v_cruise_mps = 8.0;
  double f_star_n = 140.0;
  ForceTarget f_star_kind = ForceTarget::Average;
  /// Overrides the profile's peak-to-average ratio for peak targets.
  std::optional<double> peak_to_average;
  std::optional<fit::BodyRegion> body_region;
  double v_platform_max_mps = 10.0;
  double staleness_timeout_s = 0.3;
  double detection_rate_hz = 10.0;
  GovernorMode mode = GovernorMode::Binary;
  StaleFailsafe stale_failsafe = StaleFailsafe::ForceCap;
  /// Ramp mode leaves the force zone only beyond this multiple of its radius.
  double ramp_exit_factor = 1.05;

  /// Throws InvalidConfig.
  void validate() const;
  /// F* as an average-force target, after any peak-to-average conversion.
  double average_force_target(const fit::AirframeProfile & profile) const;
};

/// Reads the GovernorConfig fields of a JSON object; absent keys keep defaults.
GovernorConfig governor_config_from_json(const nlohmann::json & doc, GovernorConfig base = {});
nlohmann::json governor_config_to_json(const GovernorConfig & cfg);

// ---------------------------------------------------------------------------
// Pure cap math. All of these are reentrant.

/// S = v T_q + 3 v^2 / (2 a) + C.
double iso_radius(double v, const GovernorConfig & cfg);

/// Largest v with iso_radius(v) <= d, limited to v_platform_max (0 when d <= C).
double iso_speed_cap(double d, const GovernorConfig & cfg);

/// m v (1 + e(v)) / dt.
double avg_impact_force(double v, const fit::AirframeProfile & profile);

struct ForceCap
{
  double v = 0.0;
  bool non_monotone = false;
};

/// Bisection on [0, v_platform_max] for avg_impact_force(v) = f_star. The
/// returned speed always satisfies avg_impact_force(v) <= f_star.
ForceCap force_speed_cap(double f_star, const fit::AirframeProfile & profile, const GovernorConfig & cfg);

/// True when avg_impact_force is non-decreasing on a uniform grid over [0, v_max].
bool force_map_monotone(const fit::AirframeProfile & profile, double v_max, std::size_t points = 1000);

struct FusedCap
{
  double cap = 0.0;
  CapSource source = CapSource::None;
  bool in_force_zone = false;
};

FusedCap fuse_caps(double d, const GovernorConfig & cfg, double v_force, bool was_in_force_zone = false);
FusedCap fuse_caps(double d, const GovernorConfig & cfg, const fit::AirframeProfile & profile);

struct VelocityCommand
{
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;
  double t = 0.0;

  double speed() const;
  bool finite() const;
  bool operator==(const VelocityCommand &) const = default;
};

/// Direction-preserving saturation to `cap`. Non-finite input yields a zero
/// command with the same timestamp.
VelocityCommand limit_command(const VelocityCommand & cmd, double cap);

// ---------------------------------------------------------------------------
// Streaming runtime

struct ComplianceRecord
{
  double t = 0.0;
  double input_speed = 0.0;
  double output_speed = 0.0;
  double d = std::numeric_limits<double>::infinity();
  double s = 0.0;
  double cap = 0.0;
  CapSource source = CapSource::None;
  bool violated = false;
  bool clock_skew = false;
  bool non_finite = false;
};

inline constexpr double kComplianceEpsilon = 1e-9;

struct LimitedCommand
{
  VelocityCommand cmd;
  double cap = 0.0;
  CapSource source = CapSource::None;
  ComplianceRecord record;
};

/// Latest-distance snapshot shared between intake and limiter.
struct GovernorState
{
  bool has_distance = false;
  double last_distance = std::numeric_limits<double>::infinity();
  double last_distance_time = 0.0;
  double active_cap = 0.0;
  CapSource cap_source = CapSource::None;
  double s_current = 0.0;
  bool in_force_zone = false;
};

/// Single-writer sequence lock over a trivially copyable value. Readers
/// retry instead of blocking the writer.
template<class T>
class SeqlockCell
{
  static_assert(std::is_trivially_copyable_v<T>);
  static constexpr std::size_t kWords = (sizeof(T) + sizeof(std::uint64_t) - 1) / sizeof(std::uint64_t);

public:
  explicit SeqlockCell(const T & initial = T{}) { store(initial); }

  void store(const T & value)
  {
    std::array<std::uint64_t, kWords> raw{};
    std::memcpy(raw.data(), &value, sizeof(T));
    const auto seq = seq_.load(std::memory_order_relaxed);
    seq_.store(seq + 1, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);
    for (std::size_t i = 0; i < kWords; ++i) {
      words_[i].store(raw[i], std::memory_order_relaxed);
    }
    seq_.store(seq + 2, std::memory_order_release);
  }

  T load() const
  {
    std::array<std::uint64_t, kWords> raw{};
    while (true) {
      const auto before = seq_.load(std::memory_order_acquire);
      if (before & 1U) {
        continue;
      }
      for (std::size_t i = 0; i < kWords; ++i) {
        raw[i] = words_[i].load(std::memory_order_relaxed);
      }
      std::atomic_thread_fence(std::memory_order_acquire);
      if (seq_.load(std::memory_order_relaxed) == before) {
        break;
      }
    }
    T value;
    std::memcpy(static_cast<void *>(&value), raw.data(), sizeof(T));
    return value;
  }

private:
  std::atomic<std::uint64_t> seq_{0};
  std::array<std::atomic<std::uint64_t>, kWords> words_{};
};

/// Runtime speed governor.
///
/// on_range / on_odometry form the intake side: they recompute the cap and
/// publish a snapshot. on_command is the limiter side: it reads the latest
/// snapshot, applies the staleness failsafe and saturates the command. One
/// thread may drive each side concurrently.
class Governor
{
public:
  using RecordSink = std::function<void(const ComplianceRecord &)>;

  Governor(GovernorConfig cfg, fit::AirframeProfile profile);

  void on_range(double d, double t);
  void on_odometry(double vx, double vy, double vz, double t);
  LimitedCommand on_command(const VelocityCommand & cmd);

  void set_record_sink(RecordSink sink) { sink_ = std::move(sink); }

  const GovernorConfig & config() const { return cfg_; }
  const fit::AirframeProfile & profile() const { return profile_; }
  double v_force() const { return v_force_; }
  bool force_map_non_monotone() const { return non_monotone_; }
  double iso_zone_radius() const { return s_cruise_; }
  GovernorState state() const { return snapshot_.load(); }
  double last_odometry_speed() const { return odom_speed_.load(std::memory_order_relaxed); }

  std::uint64_t emitted() const { return emitted_; }
  std::uint64_t violations() const { return violations_; }

private:
  GovernorConfig cfg_;
  fit::AirframeProfile profile_;
  double v_force_ = 0.0;
  bool non_monotone_ = false;
  double s_cruise_ = 0.0;
  double s_force_ = 0.0;

  SeqlockCell<GovernorState> snapshot_;
  std::atomic<double> odom_speed_{0.0};

  // Limiter-side state.
  std::optional<double> last_command_t_;
  std::uint64_t emitted_ = 0;
  std::uint64_t violations_ = 0;
  RecordSink sink_;
};

inline constexpr const char * kComplianceCsvHeader =
  "t_s,input_speed_mps,output_speed_mps,d_m,S_m,cap_mps,source,violated,flags";

std::string format_compliance_row(const ComplianceRecord & r);

/// Append-only compliance log. The header is written when the file is new
/// or empty.
class ComplianceLog
{
public:
  explicit ComplianceLog(const std::filesystem::path & path);
  ~ComplianceLog();
  ComplianceLog(const ComplianceLog &) = delete;
  ComplianceLog & operator=(const ComplianceLog &) = delete;

  void append(const ComplianceRecord & r);
  void flush();

private:
  std::ofstream out_;
};

}  // namespace impact_governor::governor

#endif  // IMPACT_GOVERNOR__GOVERNOR_HPP_
