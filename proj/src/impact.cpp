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

#include "impact_governor/impact.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "csv_table.hpp"
#include "impact_governor/error.hpp"

namespace impact_governor::impact
{

namespace
{

// Time at which the straight line through (t0, f0), (t1, f1) reaches `level`.
double crossing_time(double t0, double f0, double t1, double f1, double level)
{
  if (f1 == f0) {
    return t0;
  }
  return t0 + (level - f0) * (t1 - t0) / (f1 - f0);
}

struct ContactExtent
{
  double onset = 0.0;
  double release = 0.0;
  std::size_t first = 0;
  std::size_t last = 0;
};

ContactExtent find_contact_extent(
  std::span<const double> time, std::span<const double> force, std::size_t detect,
  const DetectOptions & opts)
{
  const double thr = opts.force_threshold_n;
  const std::size_t n = force.size();
  ContactExtent ext;

  // Onset: extend the upward crossing down to zero force, but never before
  // the last non-positive sample preceding the contact.
  if (detect == 0) {
    ext.onset = time[0];
  } else {
    const double t0 = time[detect - 1];
    const double t1 = time[detect];
    const double f0 = force[detect - 1];
    const double f1 = force[detect];
    const double zero = crossing_time(t0, f0, t1, f1, 0.0);
    double floor_t = time[0];
    for (std::size_t i = detect; i-- > 0; ) {
      if (force[i] <= 0.0) {
        floor_t = time[i];
        break;
      }
    }
    ext.onset = std::clamp(zero, floor_t, t1);
  }

  // Stage holding the cumulative-impulse fraction point.
  const std::size_t from = detect > 0 ? detect - 1 : 0;
  std::vector<double> cumulative(n, 0.0);
  for (std::size_t i = from + 1; i < n; ++i) {
    const double a = std::max(force[i - 1], 0.0);
    const double b = std::max(force[i], 0.0);
    cumulative[i] = cumulative[i - 1] + 0.5 * (a + b) * (time[i] - time[i - 1]);
  }
  const double total = cumulative.back();
  std::size_t k_frac = n - 1;
  for (std::size_t i = from; i < n; ++i) {
    if (cumulative[i] >= opts.impulse_fraction * total) {
      k_frac = i;
      break;
    }
  }

  // Downward threshold crossings j: force[j] > thr >= force[j + 1].
  std::optional<std::size_t> chosen;
  std::optional<std::size_t> last_crossing;
  for (std::size_t j = detect; j + 1 < n; ++j) {
    if (force[j] > thr && force[j + 1] <= thr) {
      last_crossing = j;
      if (!chosen && j + 1 >= k_frac) {
        chosen = j;
      }
    }
  }
  if (!chosen) {
    chosen = last_crossing;
  }

  if (!chosen) {
    ext.release = time[n - 1];
    ext.last = n - 1;
  } else {
    const std::size_t j = *chosen;
    const double zero = crossing_time(time[j], force[j], time[j + 1], force[j + 1], 0.0);
    double ceil_t = time[n - 1];
    for (std::size_t i = j + 1; i < n; ++i) {
      if (force[i] <= 0.0) {
        ceil_t = time[i];
        break;
      }
    }
    ext.release = std::clamp(zero, time[j], ceil_t);
  }

  // Window samples bracketing [onset, release].
  const auto lo = std::upper_bound(time.begin(), time.end(), ext.onset);
  ext.first = lo == time.begin() ? 0 : static_cast<std::size_t>(lo - time.begin()) - 1;
  const auto hi = std::lower_bound(time.begin(), time.end(), ext.release);
  ext.last = hi == time.end() ? n - 1 : static_cast<std::size_t>(hi - time.begin());
  return ext;
}

}  // namespace

ImpactWindow detect_impact(
  std::span<const double> time, std::span<const double> force, std::span<const double> velocity,
  const DetectOptions & opts)
{
  if (time.size() != force.size() || time.size() != velocity.size()) {
    throw Error(ErrorCode::LengthMismatch, "detect_impact: series must share one grid");
  }
  if (time.empty()) {
    throw Error(ErrorCode::EmptyWindow, "detect_impact: empty record");
  }

  bool force_seen = false;
  std::optional<std::size_t> detect;
  for (std::size_t i = 0; i < force.size(); ++i) {
    if (force[i] > opts.force_threshold_n) {
      force_seen = true;
      if (std::abs(velocity[i]) > opts.velocity_threshold_mps) {
        detect = i;
        break;
      }
    }
  }
  if (!force_seen) {
    throw Error(
      ErrorCode::NoImpactFound,
      fmt::format("no sample exceeds {} N", opts.force_threshold_n));
  }
  if (!detect) {
    throw Error(
      ErrorCode::VelocityTooLow,
      fmt::format(
        "force exceeds {} N but |v| never exceeds {} m/s at those samples",
        opts.force_threshold_n, opts.velocity_threshold_mps));
  }

  const auto ext = find_contact_extent(time, force, *detect, opts);
  ImpactWindow w;
  w.detect_index = *detect;
  w.t_start = time[*detect];
  w.t_onset = ext.onset;
  w.t_end = ext.release;
  w.first_index = ext.first;
  w.last_index = ext.last;
  w.time.assign(time.begin() + static_cast<std::ptrdiff_t>(ext.first),
    time.begin() + static_cast<std::ptrdiff_t>(ext.last + 1));
  w.force.assign(force.begin() + static_cast<std::ptrdiff_t>(ext.first),
    force.begin() + static_cast<std::ptrdiff_t>(ext.last + 1));

  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = *detect; i-- > 0; ) {
    if (time[i] < w.t_start - opts.approach_window_s) {
      break;
    }
    sum += std::abs(velocity[i]);
    ++count;
  }
  w.v_in = count > 0 ? sum / static_cast<double>(count) : std::abs(velocity[*detect]);
  return w;
}

double rectified_impulse(std::span<const double> time, std::span<const double> force)
{
  if (time.size() != force.size()) {
    throw Error(ErrorCode::LengthMismatch, "rectified_impulse: time/force lengths differ");
  }
  if (time.empty()) {
    throw Error(ErrorCode::EmptyWindow, "rectified_impulse: empty window");
  }
  double j = 0.0;
  for (std::size_t i = 1; i < time.size(); ++i) {
    j += 0.5 * (std::max(force[i - 1], 0.0) + std::max(force[i], 0.0)) * (time[i] - time[i - 1]);
  }
  return j;
}

double rectified_impulse(const ImpactWindow & window)
{
  return rectified_impulse(window.time, window.force);
}

double contact_duration(const ImpactWindow & window)
{
  return window.t_end - window.t_onset;
}

double peak_force(const ImpactWindow & window)
{
  double peak = 0.0;
  for (double f : window.force) {
    peak = std::max(peak, f);
  }
  return peak;
}

ReboundEstimate rebound_velocity(
  const ImpactWindow & window, double mass_kg, std::span<const double> post_time,
  std::span<const double> post_velocity, double window_s)
{
  if (!(mass_kg > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "mass must be > 0");
  }
  if (!(window.v_in > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "approach speed must be > 0");
  }
  if (post_time.size() != post_velocity.size()) {
    throw Error(ErrorCode::LengthMismatch, "rebound: time/velocity lengths differ");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < post_time.size(); ++i) {
    if (post_time[i] > window.t_end && post_time[i] <= window.t_end + window_s) {
      sum += std::abs(post_velocity[i]);
      ++count;
    }
  }
  if (count == 0) {
    throw Error(ErrorCode::EmptyWindow, "no velocity samples after contact end");
  }
  ReboundEstimate r;
  r.v_f_kinematic = sum / static_cast<double>(count);
  const double residual = rectified_impulse(window) / mass_kg - window.v_in;
  r.negative_impulse_residual = residual < 0.0;
  r.v_f_impulse = std::max(residual, 0.0);
  return r;
}

KineticEnergies kinetic_energies(double mass_kg, double v_in, double v_f)
{
  if (!(mass_kg > 0.0) || !(v_in > 0.0) || !(v_f >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "kinetic energies need m > 0, v_in > 0, v_f >= 0");
  }
  if (v_f > v_in) {
    throw Error(
      ErrorCode::RestitutionAboveUnity,
      fmt::format("rebound speed {} m/s exceeds approach speed {} m/s", v_f, v_in));
  }
  const double ratio = v_f / v_in;
  return {0.5 * mass_kg * v_in * v_in, ratio * ratio};
}

std::string ImpactMetrics::flags() const
{
  std::string out;
  if (negative_impulse_residual) {
    out += "negative_impulse_residual";
  }
  if (despiked_samples > 0) {
    if (!out.empty()) {
      out += ';';
    }
    out += fmt::format("despiked={}", despiked_samples);
  }
  return out;
}

TrialAnalysis analyze_trial(const ingest::TrialRecord & record, const PipelineOptions & opts)
{
  if (record.range.size() < opts.despike_window || record.time.empty()) {
    throw Error(ErrorCode::EmptyStream, "trial record too short to analyse");
  }
  TrialAnalysis out;

  dsp::FilterSpec filter = opts.filter;
  filter.sample_rate_hz = record.sample_rate;
  out.force_filtered = dsp::butterworth_lowpass(record.force_total, filter);

  const auto despiked = dsp::median_despike(record.range, opts.despike_window, opts.despike_k);
  const auto & range = despiked.values;

  // Initial velocity: nominal speed, signed by the early range trend.
  const std::size_t probe = std::min<std::size_t>(10, range.size() - 1);
  const double trend = range[probe] - range[0];
  const double v0 = (trend < 0.0 ? -1.0 : 1.0) * record.meta.nominal_speed_mps;

  dsp::KalmanConfig kcfg;
  kcfg.dt = 1.0 / record.range_sample_rate;
  kcfg.sigma_s = opts.kalman_sigma_s;
  kcfg.measurement_noise_r = opts.kalman_measurement_noise;
  kcfg.initial_state = Eigen::Vector2d(range.front(), v0);
  kcfg.initial_covariance = Eigen::Matrix2d::Identity() * opts.kalman_initial_variance;
  const auto forward = dsp::kalman_smooth(range, kcfg);
  out.velocity_on_force_grid =
    ingest::zero_order_hold(record.range_time, forward.velocity, record.time);

  out.window = detect_impact(record.time, out.force_filtered, out.velocity_on_force_grid, opts.detect);

  // The post-contact speed is estimated by running the same filter over the
  // rebound segment in reverse time, so the estimate at contact end is
  // conditioned on the whole free-flight segment that follows it.
  std::vector<double> post_range;
  for (std::size_t i = 0; i < record.range_time.size(); ++i) {
    if (record.range_time[i] >= out.window.t_end) {
      out.post_time.push_back(record.range_time[i]);
      post_range.push_back(range[i]);
    }
  }
  if (post_range.size() < 2) {
    throw Error(ErrorCode::EmptyWindow, "record ends before the rebound can be observed");
  }
  std::reverse(post_range.begin(), post_range.end());
  dsp::KalmanConfig bcfg = kcfg;
  bcfg.initial_state = Eigen::Vector2d(post_range.front(), 0.0);
  const auto backward = dsp::kalman_smooth(post_range, bcfg);
  out.post_velocity.assign(backward.velocity.rbegin(), backward.velocity.rend());
  for (auto & v : out.post_velocity) {
    v = -v;
  }

  auto & m = out.metrics;
  m.trial_id = record.meta.trial_id;
  m.configuration = record.meta.configuration;
  m.mass_kg = record.meta.mass_kg;
  m.angle_deg = record.meta.angle_deg;
  m.despiked_samples = despiked.replaced;
  m.f_max = peak_force(out.window);
  m.dt_j = contact_duration(out.window);
  m.j = rectified_impulse(out.window);
  m.v_in = out.window.v_in;

  out.rebound = rebound_velocity(
    out.window, record.meta.mass_kg, out.post_time, out.post_velocity, opts.rebound_window_s);
  m.v_f = out.rebound.v_f_kinematic;
  m.v_f_impulse = out.rebound.v_f_impulse;
  m.negative_impulse_residual = out.rebound.negative_impulse_residual;

  const auto energies = kinetic_energies(m.mass_kg, m.v_in, m.v_f);
  m.ec_i = energies.ec_i;
  m.ec_r = energies.ec_r;
  m.e_hat = std::sqrt(m.ec_r);
  return out;
}

ImpactMetrics summarize_trial(const ingest::TrialRecord & record, const PipelineOptions & opts)
{
  return analyze_trial(record, opts).metrics;
}

MetricStats describe(std::span<const double> values)
{
  if (values.empty()) {
    throw Error(ErrorCode::EmptyInput, "cannot describe an empty sample");
  }
  MetricStats s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) {
      ss += (v - s.mean) * (v - s.mean);
    }
    s.std = std::sqrt(ss / (n - 1.0));
    if (s.mean != 0.0) {
      s.cv = *s.std / std::abs(s.mean);
    }
  }
  return s;
}

ConfigurationSummary aggregate_configuration(std::span<const ImpactMetrics> metrics)
{
  if (metrics.empty()) {
    throw Error(ErrorCode::EmptyInput, "no trials to aggregate");
  }
  ConfigurationSummary s;
  s.configuration = metrics.front().configuration;
  s.n = metrics.size();

  auto column = [&](auto member) {
    std::vector<double> v;
    v.reserve(metrics.size());
    for (const auto & m : metrics) {
      v.push_back(m.*member);
    }
    return v;
  };
  s.mass_kg = describe(column(&ImpactMetrics::mass_kg)).mean;
  s.angle_deg = describe(column(&ImpactMetrics::angle_deg)).mean;
  s.f_max = describe(column(&ImpactMetrics::f_max));
  s.dt_j = describe(column(&ImpactMetrics::dt_j));
  s.j = describe(column(&ImpactMetrics::j));
  s.ec_i = describe(column(&ImpactMetrics::ec_i));
  s.ec_r = describe(column(&ImpactMetrics::ec_r));
  s.v_in = describe(column(&ImpactMetrics::v_in));
  s.v_f = describe(column(&ImpactMetrics::v_f));
  s.e_hat = describe(column(&ImpactMetrics::e_hat));
  for (const auto & m : metrics) {
    if (m.configuration != s.configuration) {
      throw Error(
        ErrorCode::InvalidArgument,
        "aggregate mixes configurations '" + s.configuration + "' and '" + m.configuration + "'");
    }
    s.trials.push_back({m.trial_id, m.v_in, m.ec_r, m.dt_j, m.f_max, m.j});
  }
  return s;
}

namespace
{

nlohmann::json stats_to_json(const MetricStats & s)
{
  nlohmann::json j;
  j["mean"] = s.mean;
  j["std"] = s.std ? nlohmann::json(*s.std) : nlohmann::json(nullptr);
  j["cv"] = s.cv ? nlohmann::json(*s.cv) : nlohmann::json(nullptr);
  return j;
}

MetricStats stats_from_json(const nlohmann::json & j)
{
  MetricStats s;
  s.mean = j.at("mean").get<double>();
  if (j.contains("std") && !j.at("std").is_null()) {
    s.std = j.at("std").get<double>();
  }
  if (j.contains("cv") && !j.at("cv").is_null()) {
    s.cv = j.at("cv").get<double>();
  }
  return s;
}

}  // namespace

nlohmann::json summary_to_json(const ConfigurationSummary & s)
{
  nlohmann::json doc;
  doc["schema"] = kSummarySchemaVersion;
  doc["configuration"] = s.configuration;
  doc["n"] = s.n;
  doc["mass_kg"] = s.mass_kg;
  doc["angle_deg"] = s.angle_deg;
  auto & m = doc["metrics"];
  m["F_max_N"] = stats_to_json(s.f_max);
  m["dt_J_s"] = stats_to_json(s.dt_j);
  m["J_Ns"] = stats_to_json(s.j);
  m["EC_i_J"] = stats_to_json(s.ec_i);
  m["EC_r"] = stats_to_json(s.ec_r);
  m["v_in_mps"] = stats_to_json(s.v_in);
  m["v_f_mps"] = stats_to_json(s.v_f);
  m["e_hat"] = stats_to_json(s.e_hat);
  auto & trials = doc["trials"];
  trials = nlohmann::json::array();
  for (const auto & t : s.trials) {
    trials.push_back(
      {{"trial_id", t.trial_id}, {"v_in_mps", t.v_in}, {"EC_r", t.ec_r}, {"dt_J_s", t.dt_j},
        {"F_max_N", t.f_max}, {"J_Ns", t.j}});
  }
  return doc;
}

ConfigurationSummary summary_from_json(const nlohmann::json & doc)
{
  try {
    const int schema = doc.at("schema").get<int>();
    if (schema != kSummarySchemaVersion) {
      throw Error(
        ErrorCode::SchemaVersionMismatch,
        fmt::format("summary schema {} (supported: {})", schema, kSummarySchemaVersion));
    }
    ConfigurationSummary s;
    s.configuration = doc.at("configuration").get<std::string>();
    s.n = doc.at("n").get<std::size_t>();
    s.mass_kg = doc.at("mass_kg").get<double>();
    s.angle_deg = doc.value("angle_deg", 0.0);
    const auto & m = doc.at("metrics");
    s.f_max = stats_from_json(m.at("F_max_N"));
    s.dt_j = stats_from_json(m.at("dt_J_s"));
    s.j = stats_from_json(m.at("J_Ns"));
    s.ec_i = stats_from_json(m.at("EC_i_J"));
    s.ec_r = stats_from_json(m.at("EC_r"));
    s.v_in = stats_from_json(m.at("v_in_mps"));
    s.v_f = stats_from_json(m.at("v_f_mps"));
    s.e_hat = stats_from_json(m.at("e_hat"));
    for (const auto & t : doc.value("trials", nlohmann::json::array())) {
      s.trials.push_back(
        {t.value("trial_id", std::string{}), t.at("v_in_mps").get<double>(),
          t.at("EC_r").get<double>(), t.at("dt_J_s").get<double>(),
          t.value("F_max_N", 0.0), t.value("J_Ns", 0.0)});
    }
    return s;
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed summary: ") + e.what());
  }
}

void write_metrics_csv(std::ostream & out, std::span<const ImpactMetrics> rows)
{
  out << kMetricsCsvHeader << '\n';
  for (const auto & m : rows) {
    out << fmt::format(
      "{},{},{:.4f},{:.4f},{:.6f},{:.6f},{:.4f},{:.6f},{:.6f},{:.6f},{}\n",
      m.trial_id, m.configuration, m.f_max, m.dt_j * 1e3, m.j, m.ec_i, m.ec_r * 100.0, m.v_in,
      m.v_f, m.e_hat, m.flags());
  }
}

std::vector<ImpactMetrics> read_metrics_csv(std::istream & in)
{
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kMetricsCsvHeader) {
    throw Error(ErrorCode::InvalidArgument, "metrics CSV header mismatch");
  }
  std::vector<ImpactMetrics> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) {
      continue;
    }
    const auto f = detail::split_fields(line);
    if (f.size() != 11) {
      throw Error(ErrorCode::InvalidArgument, "metrics CSV row has wrong field count: " + line);
    }
    auto num = [&](std::size_t i) {
      return std::stod(std::string(f[i]));
    };
    ImpactMetrics m;
    m.trial_id = std::string(f[0]);
    m.configuration = std::string(f[1]);
    m.f_max = num(2);
    m.dt_j = num(3) / 1e3;
    m.j = num(4);
    m.ec_i = num(5);
    m.ec_r = num(6) / 100.0;
    m.v_in = num(7);
    m.v_f = num(8);
    m.e_hat = num(9);
    // Mass is not a CSV column; EC_i = m v_in^2 / 2 recovers it.
    if (m.v_in > 0.0) {
      m.mass_kg = 2.0 * m.ec_i / (m.v_in * m.v_in);
    }
    m.negative_impulse_residual = f[10].find("negative_impulse_residual") != std::string_view::npos;
    rows.push_back(std::move(m));
  }
  return rows;
}

}  // namespace impact_governor::impact
