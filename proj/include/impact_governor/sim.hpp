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

#ifndef IMPACT_GOVERNOR__SIM_HPP_
#define IMPACT_GOVERNOR__SIM_HPP_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "impact_governor/fit.hpp"
#include "impact_governor/governor.hpp"

namespace impact_governor::sim
{

struct SimScenario
{
  std::string name = "scenario";
  std::vector<Eigen::Vector2d> goals;
  std::vector<Eigen::Vector2d> humans;
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  double physics_dt_s = 0.004;
  double detection_rate_hz = 10.0;
  double duration_s = 30.0;
  double k_attract = 1.0;
  double k_repulse = 2.0;
  double repulse_radius_m = 3.0;
  double goal_tolerance_m = 0.5;
  /// Gaussian noise on detected distance; 0 keeps the run noise-free.
  double range_noise_m = 0.0;
  std::uint64_t seed = 0;
  governor::GovernorConfig governor;
  fit::AirframeProfile profile;

  /// Throws ScenarioInvariantViolation.
  void validate() const;
  /// Physics steps between two detections.
  std::size_t detection_stride() const;
};

struct SimState
{
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double t = 0.0;
  double last_detection_t = -std::numeric_limits<double>::infinity();
  double nearest_d = std::numeric_limits<double>::infinity();
  std::size_t goal_index = 0;
};

double nearest_human_distance(const Eigen::Vector2d & p, const std::vector<Eigen::Vector2d> & humans);

/// Goal attraction plus human repulsion, norm-clipped to the cruise speed.
/// Advances to the next goal once within the goal tolerance.
governor::VelocityCommand potential_field_cmd(SimState & state, const SimScenario & scenario);

/// Velocity slews toward the command with |dv| <= accel_limit * dt, then the
/// position integrates the new velocity.
SimState step(const SimState & state, const governor::VelocityCommand & cmd, double dt, double accel_limit);

struct TrajectoryRow
{
  double t, x, y, vx, vy, speed, nearest_d, detected_d, cap;
  governor::CapSource source;
};

struct SimSummary
{
  std::size_t steps = 0;
  double v_force = 0.0;
  double zone_radius_m = 0.0;
  double settle_bound_s = 0.0;
  std::size_t zone_entries = 0;
  double max_settle_time_s = 0.0;
  std::size_t settle_violations = 0;
  std::size_t transient_violations = 0;
  double max_speed_in_zone_after_transient = 0.0;
  std::size_t near_contact_violations = 0;
  std::uint64_t compliance_violations = 0;
  std::size_t force_violations = 0;
  std::size_t capped_steps = 0;
  double min_distance_m = std::numeric_limits<double>::infinity();
  double max_speed = 0.0;
  std::size_t goals_reached = 0;
};

struct SimResult
{
  std::vector<TrajectoryRow> rows;
  SimSummary summary;
};

SimResult run_scenario(const SimScenario & scenario);

inline constexpr const char * kTrajectoryCsvHeader =
  "t_s,x_m,y_m,vx_mps,vy_mps,speed_mps,nearest_d_m,cap_mps,source,detected_d_m";

std::string trajectory_csv(const SimResult & result);
/// Whitespace-separated x y speed nearest_d columns for plotting tools.
std::string trajectory_plot_data(const SimResult & result);
nlohmann::json summary_to_json(const SimSummary & summary);

/// Profile may be inline or a path relative to base_dir.
SimScenario scenario_from_json(const nlohmann::json & doc, const std::filesystem::path & base_dir);
SimScenario load_scenario(const std::filesystem::path & path);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace impact_governor::sim

#endif  // IMPACT_GOVERNOR__SIM_HPP_
