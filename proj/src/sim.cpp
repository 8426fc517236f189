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

#include "impact_governor/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "impact_governor/error.hpp"

namespace impact_governor::sim
{

namespace
{

Eigen::Vector2d point_from_json(const nlohmann::json & j)
{
  if (j.is_array() && j.size() == 2) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  return {j.at("x").get<double>(), j.at("y").get<double>()};
}

}  // namespace

void SimScenario::validate() const
{
  auto require = [](bool ok, const std::string & what) {
    if (!ok) {
      throw Error(ErrorCode::ScenarioInvariantViolation, what);
    }
  };
  require(!goals.empty(), "scenario needs at least one goal");
  require(physics_dt_s > 0.0, "physics_dt must be > 0");
  require(detection_rate_hz > 0.0, "detection rate must be > 0");
  require(physics_dt_s < 1.0 / detection_rate_hz, "physics_dt must be shorter than the detection period");
  require(duration_s > 0.0, "duration must be > 0");
  require(
    k_attract >= 0.0 && k_repulse >= 0.0 && repulse_radius_m >= 0.0,
    "controller gains must be >= 0");
  require(goal_tolerance_m > 0.0, "goal tolerance must be > 0");
  require(range_noise_m >= 0.0, "range noise must be >= 0");
  try {
    governor.validate();
    profile.validate();
  } catch (const Error & e) {
    throw Error(ErrorCode::ScenarioInvariantViolation, e.what());
  }
}

std::size_t SimScenario::detection_stride() const
{
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(1.0 / (detection_rate_hz * physics_dt_s))));
}

double nearest_human_distance(const Eigen::Vector2d & p, const std::vector<Eigen::Vector2d> & humans)
{
  double best = std::numeric_limits<double>::infinity();
  for (const auto & h : humans) {
    best = std::min(best, (p - h).norm());
  }
  return best;
}

governor::VelocityCommand potential_field_cmd(SimState & state, const SimScenario & sc)
{
  const double v0 = sc.governor.v_cruise_mps;
  if ((sc.goals[state.goal_index % sc.goals.size()] - state.position).norm() < sc.goal_tolerance_m) {
    state.goal_index = (state.goal_index + 1) % sc.goals.size();
  }
  const Eigen::Vector2d goal = sc.goals[state.goal_index % sc.goals.size()];
  const Eigen::Vector2d to_goal = goal - state.position;
  const double goal_dist = to_goal.norm();

  Eigen::Vector2d desired = Eigen::Vector2d::Zero();
  if (goal_dist > 0.0) {
    desired += sc.k_attract * v0 * to_goal / goal_dist;
  }
  for (const auto & h : sc.humans) {
    const Eigen::Vector2d away = state.position - h;
    const double dh = away.norm();
    if (dh > 0.0 && dh < sc.repulse_radius_m) {
      desired += sc.k_repulse * v0 * (1.0 - dh / sc.repulse_radius_m) * away / dh;
    }
  }
  const double n = desired.norm();
  if (n > v0) {
    desired *= v0 / n;
  }
  return {desired.x(), desired.y(), 0.0, state.t};
}

SimState step(const SimState & state, const governor::VelocityCommand & cmd, double dt, double accel_limit)
{
  SimState next = state;
  const Eigen::Vector2d target(cmd.vx, cmd.vy);
  Eigen::Vector2d dv = target - state.velocity;
  const double max_dv = accel_limit * dt;
  const double n = dv.norm();
  if (n > max_dv) {
    dv *= max_dv / n;
  }
  next.velocity = state.velocity + dv;
  next.position = state.position + next.velocity * dt;
  next.t = state.t + dt;
  return next;
}

SimResult run_scenario(const SimScenario & input)
{
  SimScenario sc = input;
  sc.governor.detection_rate_hz = sc.detection_rate_hz;
  sc.validate();

  governor::Governor gov(sc.governor, sc.profile);
  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  const auto & cfg = gov.config();
  const double dt = sc.physics_dt_s;
  const auto steps = static_cast<std::size_t>(std::llround(sc.duration_s / dt));
  const std::size_t stride = sc.detection_stride();
  const double v_force = gov.v_force();

  SimResult result;
  auto & sum = result.summary;
  sum.steps = steps;
  sum.v_force = v_force;
  sum.zone_radius_m = gov.state().s_current;
  sum.settle_bound_s = cfg.t_q_s + std::max(0.0, cfg.v_cruise_mps - v_force) / cfg.decel_mps2 + 2.0 * dt;
  const double target = cfg.average_force_target(sc.profile);

  SimState state;
  state.position = sc.start;
  result.rows.reserve(steps);

  bool in_zone = false;
  double entry_t = 0.0;
  bool settled = false;
  std::size_t last_goal = state.goal_index;

  for (std::size_t k = 0; k < steps; ++k) {
    state.t = static_cast<double>(k) * dt;
    const double d_true = nearest_human_distance(state.position, sc.humans);
    if (k % stride == 0) {
      double d_meas = d_true;
      if (sc.range_noise_m > 0.0 && std::isfinite(d_meas)) {
        d_meas = std::max(0.0, d_meas + sc.range_noise_m * noise(rng));
      }
      gov.on_range(d_meas, state.t);
      state.nearest_d = d_meas;
      state.last_detection_t = state.t;
    }

    auto cmd = potential_field_cmd(state, sc);
    if (state.goal_index != last_goal) {
      ++sum.goals_reached;
      last_goal = state.goal_index;
    }
    const auto limited = gov.on_command(cmd);
    const double speed = state.velocity.norm();

    result.rows.push_back(
      {state.t, state.position.x(), state.position.y(), state.velocity.x(), state.velocity.y(),
        speed, d_true, state.nearest_d, limited.cap, limited.source});

    // Zone bookkeeping on the true distance.
    const bool inside = d_true < sum.zone_radius_m;
    if (inside && !in_zone) {
      ++sum.zone_entries;
      entry_t = state.t;
      settled = false;
    }
    in_zone = inside;
    if (inside) {
      const double since = state.t - entry_t;
      if (!settled && speed <= v_force + 1e-9) {
        settled = true;
        sum.max_settle_time_s = std::max(sum.max_settle_time_s, since);
      }
      if (since > sum.settle_bound_s) {
        if (!settled) {
          ++sum.settle_violations;
          settled = true;  // count each entry once
          sum.max_settle_time_s = std::max(sum.max_settle_time_s, since);
        }
        sum.max_speed_in_zone_after_transient = std::max(sum.max_speed_in_zone_after_transient, speed);
        if (speed > v_force + 1e-9) {
          ++sum.transient_violations;
        }
      }
    }
    if (d_true < cfg.reach_margin_m && speed > v_force + cfg.decel_mps2 * dt) {
      ++sum.near_contact_violations;
    }
    if ((limited.source == governor::CapSource::Force ||
      limited.source == governor::CapSource::StaleFailsafe) &&
      governor::avg_impact_force(limited.cmd.speed(), sc.profile) > target + 1e-3)
    {
      ++sum.force_violations;
    }
    if (limited.source != governor::CapSource::None) {
      ++sum.capped_steps;
    }
    sum.min_distance_m = std::min(sum.min_distance_m, d_true);
    sum.max_speed = std::max(sum.max_speed, speed);

    state = step(state, limited.cmd, dt, cfg.decel_mps2);
  }
  sum.compliance_violations = gov.violations();
  return result;
}

std::string trajectory_csv(const SimResult & result)
{
  std::string out = kTrajectoryCsvHeader;
  out += '\n';
  for (const auto & r : result.rows) {
    out += fmt::format(
      "{:.3f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{:.6f}\n", r.t, r.x, r.y, r.vx,
      r.vy, r.speed, r.nearest_d, r.cap, governor::to_string(r.source), r.detected_d);
  }
  return out;
}

std::string trajectory_plot_data(const SimResult & result)
{
  std::string out = "# x_m y_m speed_mps nearest_d_m\n";
  for (const auto & r : result.rows) {
    out += fmt::format("{:.6f} {:.6f} {:.6f} {:.6f}\n", r.x, r.y, r.speed, r.nearest_d);
  }
  return out;
}

nlohmann::json summary_to_json(const SimSummary & s)
{
  nlohmann::json j;
  j["steps"] = s.steps;
  j["v_force_mps"] = s.v_force;
  j["zone_radius_m"] = s.zone_radius_m;
  j["settle_bound_s"] = s.settle_bound_s;
  j["zone_entries"] = s.zone_entries;
  j["max_settle_time_s"] = s.max_settle_time_s;
  j["settle_violations"] = s.settle_violations;
  j["transient_violations"] = s.transient_violations;
  j["max_speed_in_zone_after_transient_mps"] = s.max_speed_in_zone_after_transient;
  j["near_contact_violations"] = s.near_contact_violations;
  j["compliance_violations"] = s.compliance_violations;
  j["force_violations"] = s.force_violations;
  j["capped_steps"] = s.capped_steps;
  j["min_distance_m"] = std::isfinite(s.min_distance_m) ? nlohmann::json(s.min_distance_m) : nlohmann::json(nullptr);
  j["max_speed_mps"] = s.max_speed;
  j["goals_reached"] = s.goals_reached;
  return j;
}

SimScenario scenario_from_json(const nlohmann::json & doc, const std::filesystem::path & base_dir)
{
  SimScenario sc;
  try {
    sc.name = doc.value("name", sc.name);
    for (const auto & g : doc.at("goals")) {
      sc.goals.push_back(point_from_json(g));
    }
    for (const auto & h : doc.value("humans", nlohmann::json::array())) {
      sc.humans.push_back(point_from_json(h));
    }
    if (doc.contains("start")) {
      sc.start = point_from_json(doc.at("start"));
    } else {
      sc.start = sc.goals.front();
    }
    sc.physics_dt_s = doc.value("physics_dt_s", sc.physics_dt_s);
    sc.detection_rate_hz = doc.value("detection_rate_hz", sc.detection_rate_hz);
    sc.duration_s = doc.value("duration_s", sc.duration_s);
    sc.range_noise_m = doc.value("range_noise_m", sc.range_noise_m);
    sc.seed = doc.value("seed", sc.seed);
    if (doc.contains("gains")) {
      const auto & g = doc.at("gains");
      sc.k_attract = g.value("k_attract", sc.k_attract);
      sc.k_repulse = g.value("k_repulse", sc.k_repulse);
      sc.repulse_radius_m = g.value("repulse_radius_m", sc.repulse_radius_m);
    }
    sc.goal_tolerance_m = doc.value("goal_tolerance_m", sc.goal_tolerance_m);
    sc.governor = governor::governor_config_from_json(doc.value("governor", nlohmann::json::object()));
    const auto & prof = doc.at("profile");
    if (prof.is_string()) {
      sc.profile = fit::load_profile(base_dir / prof.get<std::string>());
    } else {
      sc.profile = fit::parse_profile(prof);
    }
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::ScenarioInvariantViolation, std::string("scenario: ") + e.what());
  }
  sc.governor.detection_rate_hz = sc.detection_rate_hz;
  sc.validate();
  return sc;
}

SimScenario load_scenario(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
  return scenario_from_json(doc, path.parent_path());
}

std::uint64_t fnv1a64(std::string_view bytes)
{
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace impact_governor::sim
