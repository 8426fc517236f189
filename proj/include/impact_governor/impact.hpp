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

#ifndef IMPACT_GOVERNOR__IMPACT_HPP_
#define IMPACT_GOVERNOR__IMPACT_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "impact_governor/dsp.hpp"
#include "impact_governor/ingest.hpp"

namespace impact_governor::impact
{

struct DetectOptions
{
  double force_threshold_n = 6.0;
  double velocity_threshold_mps = 2.5;
  /// v_in is the mean |v| over this span before detection.
  double approach_window_s = 0.010;
  /// Cumulative-impulse fraction that marks the stage holding the contact end.
  double impulse_fraction = 0.99;
};

/// Contact located on a uniformly sampled force record.
///
/// t_start is the detection sample (first sample above the force threshold
/// with a valid approach speed). t_onset and t_end are the zero-force
/// instants obtained by extrapolating the bounding threshold crossings along
/// the local force slope; the contact duration is t_end - t_onset. The
/// window samples cover [t_onset, t_end] including the bracketing samples.
struct ImpactWindow
{
  double t_start = 0.0;
  double t_onset = 0.0;
  double t_end = 0.0;
  std::size_t detect_index = 0;
  std::size_t first_index = 0;
  std::size_t last_index = 0;
  std::vector<double> time;
  std::vector<double> force;
  double v_in = 0.0;
};

ImpactWindow detect_impact(
  std::span<const double> time, std::span<const double> force, std::span<const double> velocity,
  const DetectOptions & opts = {});

/// Trapezoidal integral of max(F, 0) over the window samples.
double rectified_impulse(const ImpactWindow & window);
double rectified_impulse(std::span<const double> time, std::span<const double> force);

double contact_duration(const ImpactWindow & window);
double peak_force(const ImpactWindow & window);

struct ReboundEstimate
{
  double v_f_kinematic = 0.0;
  double v_f_impulse = 0.0;
  /// J / m < v_in: rectification undercounted the exchange.
  bool negative_impulse_residual = false;
};

/// post_time / post_velocity: velocity estimate after the contact.
ReboundEstimate rebound_velocity(
  const ImpactWindow & window, double mass_kg, std::span<const double> post_time,
  std::span<const double> post_velocity, double window_s = 0.010);

struct KineticEnergies
{
  double ec_i = 0.0;  // J
  double ec_r = 0.0;  // fraction of ec_i returned
};

KineticEnergies kinetic_energies(double mass_kg, double v_in, double v_f);

struct ImpactMetrics
{
  std::string trial_id;
  std::string configuration;
  double mass_kg = 0.0;
  double angle_deg = 0.0;
  double f_max = 0.0;  // N
  double dt_j = 0.0;  // s
  double j = 0.0;  // N s
  double ec_i = 0.0;  // J
  double ec_r = 0.0;  // fraction
  double v_in = 0.0;  // m/s
  double v_f = 0.0;  // m/s (kinematic)
  double v_f_impulse = 0.0;  // m/s
  double e_hat = 0.0;
  bool negative_impulse_residual = false;
  std::size_t despiked_samples = 0;

  std::string flags() const;
};

struct PipelineOptions
{
  dsp::FilterSpec filter{};
  std::size_t despike_window = 5;
  double despike_k = 3.0;
  double kalman_sigma_s = 0.01;
  double kalman_measurement_noise = 9.0e-6;
  double kalman_initial_variance = 100.0;
  DetectOptions detect{};
  double rebound_window_s = 0.010;
};

/// Intermediate signals kept for diagnostics and tests.
struct TrialAnalysis
{
  std::vector<double> force_filtered;
  std::vector<double> velocity_on_force_grid;
  std::vector<double> post_time;
  std::vector<double> post_velocity;
  ImpactWindow window;
  ReboundEstimate rebound;
  ImpactMetrics metrics;
};

TrialAnalysis analyze_trial(const ingest::TrialRecord & record, const PipelineOptions & opts = {});
ImpactMetrics summarize_trial(const ingest::TrialRecord & record, const PipelineOptions & opts = {});

struct MetricStats
{
  double mean = 0.0;
  std::optional<double> std;  // sample (n - 1) standard deviation, n >= 2
  std::optional<double> cv;  // std / mean, mean != 0
};

MetricStats describe(std::span<const double> values);

/// Per-trial values the fit stage regresses on.
struct TrialPoint
{
  std::string trial_id;
  double v_in = 0.0;
  double ec_r = 0.0;
  double dt_j = 0.0;
  double f_max = 0.0;
  double j = 0.0;
};

struct ConfigurationSummary
{
  std::string configuration;
  std::size_t n = 0;
  double mass_kg = 0.0;
  double angle_deg = 0.0;
  MetricStats f_max;
  MetricStats dt_j;
  MetricStats j;
  MetricStats ec_i;
  MetricStats ec_r;
  MetricStats v_in;
  MetricStats v_f;
  MetricStats e_hat;
  std::vector<TrialPoint> trials;
};

ConfigurationSummary aggregate_configuration(std::span<const ImpactMetrics> metrics);

inline constexpr int kSummarySchemaVersion = 1;

nlohmann::json summary_to_json(const ConfigurationSummary & summary);
ConfigurationSummary summary_from_json(const nlohmann::json & doc);

inline constexpr const char * kMetricsCsvHeader =
  "trial_id,configuration,F_max_N,dt_J_ms,J_Ns,EC_i_J,EC_r_pct,v_in_mps,v_f_mps,e_hat,flags";

void write_metrics_csv(std::ostream & out, std::span<const ImpactMetrics> rows);
std::vector<ImpactMetrics> read_metrics_csv(std::istream & in);

}  // namespace impact_governor::impact

#endif  // IMPACT_GOVERNOR__IMPACT_HPP_
