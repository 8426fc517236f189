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

#ifndef IMPACT_GOVERNOR__FIT_HPP_
#define IMPACT_GOVERNOR__FIT_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "impact_governor/impact.hpp"

namespace impact_governor::fit
{

/// Least-squares polynomial with its training diagnostics.
struct PolyModel
{
  std::vector<double> coefficients;  // ascending degree
  int degree = 0;
  double r_squared = 1.0;
  double mae = 0.0;
  double domain_min = 0.0;
  double domain_max = 0.0;

  double evaluate(double x) const;

  struct Clamped
  {
    double value;
    bool extrapolated;
  };
  /// Evaluates at x clamped to the fitted domain.
  Clamped evaluate_clamped(double x) const;

  bool operator==(const PolyModel &) const = default;
};

PolyModel fit_polynomial(std::span<const double> x, std::span<const double> y, int degree);

enum class BodyRegion { Face, Neck, Chest, Back };

/// Maximum contact force per body region in newtons.
double body_region_limit(BodyRegion region);
double max_body_region_limit();
BodyRegion parse_body_region(std::string_view name);
std::string_view to_string(BodyRegion region);

/// Everything the runtime governor needs to know about one airframe.
struct AirframeProfile
{
  std::string name;
  double mass_kg = 0.0;
  double dt_s = 0.0;  // material contact-duration constant
  double dt_std_s = 0.0;
  PolyModel restitution;  // E_r(v); e_hat(v) = sqrt(E_r(v))
  bool restitution_downgraded = false;
  double angle_deg = 0.0;
  double f_max_ref_n = 0.0;
  std::optional<double> peak_to_average;  // F_max * dt / J
  std::string source;

  /// E_r at v, domain-clamped and limited to [0, 1].
  double restitution_ratio(double v) const;
  double e_hat(double v) const;

  /// Throws InvariantViolation or RestitutionOutOfRange.
  void validate() const;

  bool operator==(const AirframeProfile &) const = default;
};

inline constexpr int kProfileSchemaVersion = 1;
inline constexpr std::size_t kRestitutionGridPoints = 1000;

/// True when E_r(v) lies in [0, 1] at every point of a dense domain grid.
bool restitution_in_unit_range(const PolyModel & model, std::size_t points = kRestitutionGridPoints);

AirframeProfile build_airframe_profile(
  std::span<const impact::ConfigurationSummary> summaries, const std::string & configuration,
  int restitution_degree = 2);

/// Momentum over contact duration: m * v / dt.
double estimate_force_simple(double mass_kg, double v, double dt_s);

/// Keys are emitted in schema order.
nlohmann::ordered_json serialize_profile(const AirframeProfile & profile);
AirframeProfile parse_profile(const nlohmann::json & doc);
AirframeProfile parse_profile(const nlohmann::ordered_json & doc);

void save_profile(const AirframeProfile & profile, const std::filesystem::path & path);
AirframeProfile load_profile(const std::filesystem::path & path);

}  // namespace impact_governor::fit

#endif  // IMPACT_GOVERNOR__FIT_HPP_
