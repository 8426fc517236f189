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

#ifndef IMPACT_GOVERNOR__DSP_HPP_
#define IMPACT_GOVERNOR__DSP_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace impact_governor::dsp
{

// ---------------------------------------------------------------------------
// Median despiking

struct DespikeResult
{
  std::vector<double> values;
  std::size_t replaced = 0;
  /// Samples replaced although their window had zero spread (MAD = 0).
  std::vector<std::size_t> degenerate_windows;
};

inline constexpr double kMadToSigma = 1.4826;

/// Replaces samples deviating from their local window median by more than
/// k * 1.4826 * MAD with that median. Windows are centred where possible and
/// slid inward at the edges so every window holds `window` samples. Outlier
/// tests always use the original (unmodified) neighbourhood.
DespikeResult median_despike(std::span<const double> series, std::size_t window = 5, double k = 3.0);

// ---------------------------------------------------------------------------
// Kalman smoothing of range into position / velocity

struct KalmanConfig
{
  double dt = 1.0e-3;
  double sigma_s = 0.01;
  double measurement_noise_r = 9.0e-6;  // (3 mm)^2
  Eigen::Vector2d initial_state = Eigen::Vector2d::Zero();
  Eigen::Matrix2d initial_covariance = Eigen::Matrix2d::Identity() * 100.0;

  void validate() const;
};

struct KalmanTrack
{
  std::vector<double> position;
  std::vector<double> velocity;
  /// Trace of the posterior covariance after each update.
  std::vector<double> covariance_trace;
};

/// Forward constant-velocity Kalman filter with discrete white-noise
/// acceleration, observing position only. The first sample is an update on
/// the prior; every later sample is predict + update.
KalmanTrack kalman_smooth(std::span<const double> range, const KalmanConfig & cfg);

/// Process-noise matrix used by kalman_smooth.
Eigen::Matrix2d white_noise_acceleration_q(double dt, double sigma_s);

// ---------------------------------------------------------------------------
// Butterworth low-pass

struct FilterSpec
{
  int order = 4;
  double cutoff_hz = 1000.0;
  double sample_rate_hz = 6250.0;

  void validate() const;
};

/// Direct-form-II-transposed second-order section, a0 normalised to 1.
struct Biquad
{
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

/// Bilinear-transform design with cutoff prewarping; each section has unity
/// DC gain.
std::vector<Biquad> design_butterworth_lowpass(const FilterSpec & spec);

/// Single causal pass, state initialised to the steady state of x[0].
std::vector<double> sos_filter(std::span<const Biquad> sections, std::span<const double> x);

/// Zero-phase forward-backward filtering with odd-reflection padding.
std::vector<double> sos_filtfilt(std::span<const Biquad> sections, std::span<const double> x);

/// Zero-phase Butterworth low-pass; effective magnitude is |H|^2.
std::vector<double> butterworth_lowpass(std::span<const double> series, const FilterSpec & spec = {});

}  // namespace impact_governor::dsp

#endif  // IMPACT_GOVERNOR__DSP_HPP_
