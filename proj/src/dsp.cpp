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

#include "impact_governor/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/LU>

#include "impact_governor/error.hpp"

namespace impact_governor::dsp
{

namespace
{

double median_of(std::vector<double> & v)
{
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

DespikeResult median_despike(std::span<const double> series, std::size_t window, double k)
{
  if (window < 3 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "despike window must be odd and >= 3");
  }
  if (!(k > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "despike sigma multiple must be > 0");
  }
  if (series.size() < window) {
    throw Error(
      ErrorCode::WindowTooLarge, "series of length " + std::to_string(series.size()) +
      " shorter than window " + std::to_string(window));
  }

  DespikeResult out;
  out.values.assign(series.begin(), series.end());
  const std::size_t n = series.size();
  const std::size_t half = window / 2;
  std::vector<double> buf(window);
  std::vector<double> dev(window);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = std::min(i >= half ? i - half : 0, n - window);
    std::copy_n(series.begin() + static_cast<std::ptrdiff_t>(start), window, buf.begin());
    const double med = median_of(buf);
    for (std::size_t j = 0; j < window; ++j) {
      dev[j] = std::abs(series[start + j] - med);
    }
    const double mad = median_of(dev);
    const double deviation = std::abs(series[i] - med);
    if (mad == 0.0) {
      if (deviation > 0.0) {
        out.values[i] = med;
        ++out.replaced;
        out.degenerate_windows.push_back(i);
      }
      continue;
    }
    if (deviation > k * kMadToSigma * mad) {
      out.values[i] = med;
      ++out.replaced;
    }
  }
  return out;
}

void KalmanConfig::validate() const
{
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::InvalidArgument, "Kalman dt must be > 0");
  }
  if (!(sigma_s > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "Kalman sigma_s must be > 0");
  }
  if (!(measurement_noise_r > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "Kalman measurement noise must be > 0");
  }
  const auto & p = initial_covariance;
  if (std::abs(p(0, 1) - p(1, 0)) > 1e-12 * std::max(1.0, std::abs(p(0, 1))) ||
    !(p(0, 0) > 0.0) || !(p.determinant() > 0.0))
  {
    throw Error(ErrorCode::InvalidArgument, "initial covariance must be symmetric positive-definite");
  }
}

Eigen::Matrix2d white_noise_acceleration_q(double dt, double sigma_s)
{
  const double dt2 = dt * dt;
  Eigen::Matrix2d q;
  q << dt2 * dt2 / 4.0, dt2 * dt / 2.0,
    dt2 * dt / 2.0, dt2;
  return q * (sigma_s * sigma_s);
}

KalmanTrack kalman_smooth(std::span<const double> range, const KalmanConfig & cfg)
{
  cfg.validate();
  if (range.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "Kalman input needs at least two samples");
  }

  Eigen::Matrix2d f;
  f << 1.0, cfg.dt,
    0.0, 1.0;
  const Eigen::Matrix2d q = white_noise_acceleration_q(cfg.dt, cfg.sigma_s);
  const Eigen::RowVector2d h(1.0, 0.0);
  const Eigen::Matrix2d identity = Eigen::Matrix2d::Identity();

  Eigen::Vector2d x = cfg.initial_state;
  Eigen::Matrix2d p = cfg.initial_covariance;

  KalmanTrack track;
  track.position.reserve(range.size());
  track.velocity.reserve(range.size());
  track.covariance_trace.reserve(range.size());

  for (std::size_t k = 0; k < range.size(); ++k) {
    if (k > 0) {
      x = f * x;
      p = f * p * f.transpose() + q;
    }
    const double innovation = range[k] - h * x;
    const double s = (h * p * h.transpose())(0, 0) + cfg.measurement_noise_r;
    const Eigen::Vector2d gain = p * h.transpose() / s;
    x += gain * innovation;
    // Joseph form.
    const Eigen::Matrix2d ikh = identity - gain * h;
    p = ikh * p * ikh.transpose() + gain * cfg.measurement_noise_r * gain.transpose();
    p = 0.5 * (p + p.transpose());

    if (!p.allFinite() || !(p(0, 0) > 0.0) || !(p(1, 1) > 0.0) || !(p.determinant() > 0.0)) {
      throw Error(
        ErrorCode::NonPositiveDefiniteCovariance,
        "covariance lost positive-definiteness at step " + std::to_string(k));
    }
    track.position.push_back(x(0));
    track.velocity.push_back(x(1));
    track.covariance_trace.push_back(p.trace());
  }
  return track;
}

void FilterSpec::validate() const
{
  if (order < 2 || order % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument, "Butterworth order must be even and >= 2");
  }
  if (!(sample_rate_hz > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sample rate must be > 0");
  }
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate_hz / 2.0)) {
    throw Error(
      ErrorCode::CutoffAboveNyquist, "cutoff " + std::to_string(cutoff_hz) +
      " Hz must lie strictly inside (0, fs/2)");
  }
}

std::vector<Biquad> design_butterworth_lowpass(const FilterSpec & spec)
{
  spec.validate();
  const double warped = std::tan(std::numbers::pi * spec.cutoff_hz / spec.sample_rate_hz);
  const double k2 = warped * warped;
  std::vector<Biquad> sections;
  const int pairs = spec.order / 2;
  for (int i = 1; i <= pairs; ++i) {
    const double q = 1.0 / (2.0 * std::sin((2.0 * i - 1.0) * std::numbers::pi / (2.0 * spec.order)));
    const double norm = 1.0 / (1.0 + warped / q + k2);
    Biquad s;
    s.b0 = k2 * norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = 2.0 * (k2 - 1.0) * norm;
    s.a2 = (1.0 - warped / q + k2) * norm;
    sections.push_back(s);
  }
  return sections;
}

std::vector<double> sos_filter(std::span<const Biquad> sections, std::span<const double> x)
{
  std::vector<double> y(x.begin(), x.end());
  if (y.empty()) {
    return y;
  }
  for (const auto & s : sections) {
    // Steady state for a constant input equal to the first sample.
    const double u = y.front();
    const double y_ss = s.dc_gain() * u;
    double z2 = s.b2 * u - s.a2 * y_ss;
    double z1 = s.b1 * u - s.a1 * y_ss + z2;
    for (auto & v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> sos_filtfilt(std::span<const Biquad> sections, std::span<const double> x)
{
  const std::size_t n = x.size();
  if (n < 2) {
    return {x.begin(), x.end()};
  }
  const std::size_t pad = std::min<std::size_t>(3 * (2 * sections.size() + 1), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) {
    ext.push_back(2.0 * x.front() - x[i]);
  }
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) {
    ext.push_back(2.0 * x.back() - x[n - 1 - i]);
  }

  auto fwd = sos_filter(sections, ext);
  std::reverse(fwd.begin(), fwd.end());
  auto bwd = sos_filter(sections, fwd);
  std::reverse(bwd.begin(), bwd.end());
  return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
    bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> butterworth_lowpass(std::span<const double> series, const FilterSpec & spec)
{
  const auto sections = design_butterworth_lowpass(spec);
  return sos_filtfilt(sections, series);
}

}  // namespace impact_governor::dsp
