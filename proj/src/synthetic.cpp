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

#include "impact_governor/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "impact_governor/error.hpp"

namespace impact_governor::synthetic
{

namespace
{

constexpr double kPi = std::numbers::pi;

struct ScaledLobe
{
  double start, tau, amp;
};

std::vector<ScaledLobe> scale_lobes(const TrialSpec & spec)
{
  if (spec.lobes.empty() || spec.mass_kg <= 0.0 || spec.v_in_mps <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "synthetic trial needs lobes, mass and speed");
  }
  double unit_impulse = 0.0;
  for (const auto & l : spec.lobes) {
    unit_impulse += 2.0 * l.relative_peak * l.duration_s / kPi;
  }
  const double scale = spec.mass_kg * spec.v_in_mps * (1.0 + spec.restitution) / unit_impulse;
  std::vector<ScaledLobe> out;
  for (const auto & l : spec.lobes) {
    out.push_back({l.start_s, l.duration_s, scale * l.relative_peak});
  }
  return out;
}

double force_at(const std::vector<ScaledLobe> & lobes, double s)
{
  double f = 0.0;
  for (const auto & l : lobes) {
    const double u = s - l.start;
    if (u > 0.0 && u < l.tau) {
      f += l.amp * std::sin(kPi * u / l.tau);
    }
  }
  return f;
}

// Second integral of a lobe, i.e. its contribution to displacement times m.
double displacement_at(const std::vector<ScaledLobe> & lobes, double s)
{
  double q = 0.0;
  for (const auto & l : lobes) {
    const double u = s - l.start;
    const double k = l.amp * l.tau / kPi;
    if (u <= 0.0) {
      continue;
    }
    if (u < l.tau) {
      q += k * (u - l.tau / kPi * std::sin(kPi * u / l.tau));
    } else {
      q += 2.0 * k * (u - 0.5 * l.tau);
    }
  }
  return q;
}

}  // namespace

GroundTruth ground_truth(const TrialSpec & spec)
{
  const auto lobes = scale_lobes(spec);
  GroundTruth g;
  double first = lobes.front().start;
  double last = first;
  for (const auto & l : lobes) {
    first = std::min(first, l.start);
    last = std::max(last, l.start + l.tau);
  }
  // Peak of the summed force on a fine grid; exact for separated lobes.
  const std::size_t n = 20000;
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = first + (last - first) * static_cast<double>(i) / static_cast<double>(n);
    g.f_max = std::max(g.f_max, force_at(lobes, s));
  }
  g.dt_j = last - first;
  g.v_in = spec.v_in_mps;
  g.v_f = spec.restitution * spec.v_in_mps;
  g.j = spec.mass_kg * (g.v_in + g.v_f);
  g.ec_i = 0.5 * spec.mass_kg * g.v_in * g.v_in;
  g.ec_r = spec.restitution * spec.restitution;
  return g;
}

SyntheticTrial make_trial(const TrialSpec & spec)
{
  const auto lobes = scale_lobes(spec);
  SyntheticTrial out;
  out.truth = ground_truth(spec);
  out.meta.trial_id = spec.trial_id;
  out.meta.configuration = spec.configuration;
  out.meta.material = spec.material;
  out.meta.mass_kg = spec.mass_kg;
  out.meta.angle_deg = spec.angle_deg;
  out.meta.nominal_speed_mps = spec.v_in_mps;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  const double t_contact = spec.contact_after_trigger_s;
  const double t_stop = t_contact + spec.post_contact_s;
  auto range_at = [&](double t) {
    const double s = t - t_contact;
    return spec.range_at_contact_m - spec.v_in_mps * s + displacement_at(lobes, s) / spec.mass_kg;
  };

  auto & raw = out.raw;
  raw.sample_rate_force = spec.force_rate_hz;
  raw.sample_rate_range = spec.range_rate_hz;

  // Force clock starts at 0 with the trigger pre_trigger_s later.
  const auto f_pre = static_cast<long>(std::llround(spec.pre_trigger_s * spec.force_rate_hz));
  const auto f_post = static_cast<long>(std::llround(t_stop * spec.force_rate_hz));
  const double channel_sigma = spec.force_noise_n / std::sqrt(3.0);
  const double split[3] = {0.45, 0.35, 0.20};
  for (long i = -f_pre; i <= f_post; ++i) {
    const double t = static_cast<double>(i) / spec.force_rate_hz;
    const double f = force_at(lobes, t - t_contact);
    raw.force_time.push_back(static_cast<double>(i + f_pre) / spec.force_rate_hz);
    raw.force_ch1.push_back(split[0] * f + channel_sigma * unit(rng));
    raw.force_ch2.push_back(split[1] * f + channel_sigma * unit(rng));
    raw.force_ch3.push_back(split[2] * f + channel_sigma * unit(rng));
    raw.accel.push_back(f / spec.mass_kg);
  }
  raw.trigger_time_force = static_cast<double>(f_pre) / spec.force_rate_hz;

  const auto r_pre = static_cast<long>(std::llround(spec.pre_trigger_s * spec.range_rate_hz));
  const auto r_post = static_cast<long>(std::llround(t_stop * spec.range_rate_hz));
  const double r_trigger = spec.range_clock_origin_s + static_cast<double>(r_pre) / spec.range_rate_hz;
  for (long j = -r_pre; j <= r_post; ++j) {
    const double t = static_cast<double>(j) / spec.range_rate_hz;
    raw.range_time.push_back(spec.range_clock_origin_s + static_cast<double>(j + r_pre) / spec.range_rate_hz);
    raw.range.push_back(range_at(t) + spec.range_noise_m * unit(rng));
  }
  raw.trigger_time_range = r_trigger;
  return out;
}

std::filesystem::path write_trial(const TrialSpec & spec, const std::filesystem::path & dir)
{
  const auto trial = make_trial(spec);
  std::filesystem::create_directories(dir);
  const std::string force_name = spec.trial_id + "_force.csv";
  const std::string range_name = spec.trial_id + "_range.csv";

  auto open = [](const std::filesystem::path & p) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw Error(ErrorCode::Io, "cannot write " + p.string());
    }
    return f;
  };

  {
    auto f = open(dir / force_name);
    f << "t_s,f1_N,f2_N,f3_N,accel_mps2,trigger\n";
    const auto & r = trial.raw;
    for (std::size_t i = 0; i < r.force_time.size(); ++i) {
      const int trig = r.force_time[i] >= *r.trigger_time_force - 1e-12 ? 1 : 0;
      f << fmt::format(
        "{:.7f},{:.5f},{:.5f},{:.5f},{:.4f},{}\n", r.force_time[i], r.force_ch1[i], r.force_ch2[i],
        r.force_ch3[i], r.accel[i], trig);
    }
  }
  {
    auto f = open(dir / range_name);
    f << "t_s,range_m,trigger\n";
    const auto & r = trial.raw;
    for (std::size_t i = 0; i < r.range_time.size(); ++i) {
      const int trig = r.range_time[i] >= *r.trigger_time_range - 1e-12 ? 1 : 0;
      f << fmt::format("{:.7f},{:.7f},{}\n", r.range_time[i], r.range[i], trig);
    }
  }

  nlohmann::ordered_json m;
  m["trial_id"] = spec.trial_id;
  m["configuration"] = spec.configuration;
  m["material"] = spec.material;
  m["mass_kg"] = spec.mass_kg;
  m["angle_deg"] = spec.angle_deg;
  m["nominal_speed_mps"] = spec.v_in_mps;
  m["sample_rate_force_hz"] = spec.force_rate_hz;
  m["sample_rate_range_hz"] = spec.range_rate_hz;
  m["force_csv"] = force_name;
  m["range_csv"] = range_name;
  const auto manifest = dir / (spec.trial_id + ".json");
  auto f = open(manifest);
  f << m.dump(2) << '\n';
  return manifest;
}

TrialSpec plastic_fixture(std::uint64_t seed)
{
  TrialSpec s;
  s.trial_id = "plastic";
  s.configuration = "Fixture-plastic";
  s.material = "clay";
  s.restitution = 0.0;
  s.v_in_mps = 5.0;
  s.lobes = {Lobe{0.0, 0.020, 1.0}};
  s.force_noise_n = 0.5;
  s.range_noise_m = 0.002;
  s.seed = seed;
  return s;
}

TrialSpec elastic_fixture(std::uint64_t seed)
{
  TrialSpec s = plastic_fixture(seed);
  s.trial_id = "elastic";
  s.configuration = "Fixture-elastic";
  s.material = "rubber";
  s.restitution = 0.4;
  return s;
}

TrialSpec two_stage_fixture(std::uint64_t seed)
{
  TrialSpec s = plastic_fixture(seed);
  s.trial_id = "two_stage";
  s.configuration = "Fixture-two-stage";
  s.material = "carbon";
  s.restitution = 0.38;
  s.lobes = {Lobe{0.0, 0.020, 1.0}, Lobe{0.025, 0.010, 0.4}};
  return s;
}

}  // namespace impact_governor::synthetic
