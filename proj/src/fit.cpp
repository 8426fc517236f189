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

#include "impact_governor/fit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "impact_governor/error.hpp"

namespace impact_governor::fit
{

double PolyModel::evaluate(double x) const
{
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
    acc = acc * x + *it;
  }
  return acc;
}

PolyModel::Clamped PolyModel::evaluate_clamped(double x) const
{
  const double clamped = std::clamp(x, domain_min, domain_max);
  return {evaluate(clamped), clamped != x};
}

PolyModel fit_polynomial(std::span<const double> x, std::span<const double> y, int degree)
{
  if (degree < 0) {
    throw Error(ErrorCode::InvalidArgument, "polynomial degree must be >= 0");
  }
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "fit_polynomial: x and y differ in length");
  }
  const auto terms = static_cast<std::size_t>(degree) + 1;
  if (x.size() < terms) {
    throw Error(
      ErrorCode::Underdetermined,
      fmt::format("{} points cannot determine a degree-{} polynomial", x.size(), degree));
  }
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = static_cast<std::size_t>(
    std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  if (distinct < terms) {
    throw Error(
      ErrorCode::DegenerateX,
      fmt::format("{} distinct abscissae cannot determine a degree-{} polynomial", distinct, degree));
  }

  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(n, static_cast<Eigen::Index>(terms));
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(terms); ++c) {
      design(i, c) = p;
      p *= x[static_cast<std::size_t>(i)];
    }
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd coeffs = design.colPivHouseholderQr().solve(rhs);

  PolyModel model;
  model.degree = degree;
  model.coefficients.assign(coeffs.data(), coeffs.data() + coeffs.size());
  model.domain_min = sorted.front();
  model.domain_max = sorted[distinct - 1];

  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - model.evaluate(x[i]);
    ss_res += r * r;
    abs_sum += std::abs(r);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  model.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  model.mae = abs_sum / static_cast<double>(x.size());
  return model;
}

double body_region_limit(BodyRegion region)
{
  switch (region) {
    case BodyRegion::Face: return 65.0;
    case BodyRegion::Neck: return 150.0;
    case BodyRegion::Chest: return 140.0;
    case BodyRegion::Back: return 210.0;
  }
  return 0.0;
}

double max_body_region_limit()
{
  return body_region_limit(BodyRegion::Back);
}

BodyRegion parse_body_region(std::string_view name)
{
  if (name == "face") {
    return BodyRegion::Face;
  }
  if (name == "neck") {
    return BodyRegion::Neck;
  }
  if (name == "chest") {
    return BodyRegion::Chest;
  }
  if (name == "back" || name == "shoulders") {
    return BodyRegion::Back;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown body region '" + std::string(name) + "'");
}

std::string_view to_string(BodyRegion region)
{
  switch (region) {
    case BodyRegion::Face: return "face";
    case BodyRegion::Neck: return "neck";
    case BodyRegion::Chest: return "chest";
    case BodyRegion::Back: return "back";
  }
  return "unknown";
}

double AirframeProfile::restitution_ratio(double v) const
{
  return std::clamp(restitution.evaluate_clamped(v).value, 0.0, 1.0);
}

double AirframeProfile::e_hat(double v) const
{
  return std::sqrt(restitution_ratio(v));
}

bool restitution_in_unit_range(const PolyModel & model, std::size_t points)
{
  const double lo = model.domain_min;
  const double hi = model.domain_max;
  for (std::size_t i = 0; i < points; ++i) {
    const double v = points == 1 ? lo :
      lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double er = model.evaluate(v);
    if (!(er >= 0.0 && er <= 1.0)) {
      return false;
    }
  }
  return true;
}

void AirframeProfile::validate() const
{
  if (!(mass_kg > 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "profile mass must be > 0");
  }
  if (!(dt_s > 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "profile contact duration must be > 0");
  }
  if (!(dt_std_s >= 0.0)) {
    throw Error(ErrorCode::InvariantViolation, "contact-duration std must be >= 0");
  }
  if (restitution.coefficients.size() != static_cast<std::size_t>(restitution.degree) + 1) {
    throw Error(ErrorCode::InvariantViolation, "restitution coefficient count != degree + 1");
  }
  if (!(restitution.domain_max >= restitution.domain_min)) {
    throw Error(ErrorCode::InvariantViolation, "restitution domain is inverted");
  }
  if (!(restitution.mae >= 0.0) || !(restitution.r_squared <= 1.0)) {
    throw Error(ErrorCode::InvariantViolation, "restitution fit diagnostics out of range");
  }
  if (!restitution_in_unit_range(restitution)) {
    throw Error(ErrorCode::RestitutionOutOfRange, "E_r(v) leaves [0, 1] on the fitted domain");
  }
}

AirframeProfile build_airframe_profile(
  std::span<const impact::ConfigurationSummary> summaries, const std::string & configuration,
  int restitution_degree)
{
  std::vector<const impact::ConfigurationSummary *> chosen;
  for (const auto & s : summaries) {
    if (s.configuration == configuration) {
      chosen.push_back(&s);
    }
  }
  if (chosen.empty()) {
    throw Error(ErrorCode::EmptyInput, "no summary for configuration '" + configuration + "'");
  }

  std::vector<double> speeds;
  std::vector<double> ratios;
  std::vector<double> durations;
  double mass_sum = 0.0;
  double angle_sum = 0.0;
  double f_max_sum = 0.0;
  double j_sum = 0.0;
  double dt_std_fallback = 0.0;
  for (const auto * s : chosen) {
    mass_sum += s->mass_kg;
    angle_sum += s->angle_deg;
    f_max_sum += s->f_max.mean;
    j_sum += s->j.mean;
    dt_std_fallback = std::max(dt_std_fallback, s->dt_j.std.value_or(0.0));
    if (s->trials.empty()) {
      speeds.push_back(s->v_in.mean);
      ratios.push_back(s->ec_r.mean);
      durations.push_back(s->dt_j.mean);
    } else {
      for (const auto & t : s->trials) {
        speeds.push_back(t.v_in);
        ratios.push_back(t.ec_r);
        durations.push_back(t.dt_j);
      }
    }
  }
  const double count = static_cast<double>(chosen.size());

  AirframeProfile p;
  p.name = configuration;
  p.mass_kg = mass_sum / count;
  p.angle_deg = angle_sum / count;
  p.f_max_ref_n = f_max_sum / count;
  const auto dt_stats = impact::describe(durations);
  p.dt_s = dt_stats.mean;
  p.dt_std_s = dt_stats.std.value_or(dt_std_fallback);
  const double j_mean = j_sum / count;
  if (j_mean > 0.0) {
    p.peak_to_average = p.f_max_ref_n * p.dt_s / j_mean;
  }
  p.source = fmt::format("{} summaries, {} trial points", chosen.size(), speeds.size());

  std::vector<double> sorted = speeds;
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  if (restitution_degree > 0 && distinct >= restitution_degree + 1) {
    p.restitution = fit_polynomial(speeds, ratios, restitution_degree);
  } else {
    p.restitution_downgraded = restitution_degree > 0;
    p.restitution = fit_polynomial(speeds, ratios, 0);
  }
  p.validate();
  return p;
}

double estimate_force_simple(double mass_kg, double v, double dt_s)
{
  if (!(mass_kg > 0.0) || !(dt_s > 0.0) || !(v >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "force estimate needs m > 0, dt > 0, v >= 0");
  }
  return mass_kg * v / dt_s;
}

nlohmann::ordered_json serialize_profile(const AirframeProfile & p)
{
  nlohmann::ordered_json doc;
  doc["schema"] = kProfileSchemaVersion;
  doc["name"] = p.name;
  doc["mass_kg"] = p.mass_kg;
  doc["dt_s"] = p.dt_s;
  doc["dt_std_s"] = p.dt_std_s;
  doc["restitution"] = {
    {"degree", p.restitution.degree},
    {"coeffs", p.restitution.coefficients},
    {"domain", {p.restitution.domain_min, p.restitution.domain_max}},
    {"r_squared", p.restitution.r_squared},
    {"mae", p.restitution.mae},
    {"downgraded", p.restitution_downgraded},
  };
  doc["angle_deg"] = p.angle_deg;
  doc["f_max_ref_N"] = p.f_max_ref_n;
  if (p.peak_to_average) {
    doc["peak_to_average"] = *p.peak_to_average;
  }
  doc["source"] = p.source;
  return doc;
}

AirframeProfile parse_profile(const nlohmann::ordered_json & doc)
{
  return parse_profile(nlohmann::json::parse(doc.dump()));
}

AirframeProfile parse_profile(const nlohmann::json & doc)
{
  AirframeProfile p;
  try {
    const int schema = doc.at("schema").get<int>();
    if (schema != kProfileSchemaVersion) {
      throw Error(
        ErrorCode::SchemaVersionMismatch,
        fmt::format("profile schema {} (supported: {})", schema, kProfileSchemaVersion));
    }
    p.name = doc.at("name").get<std::string>();
    p.mass_kg = doc.at("mass_kg").get<double>();
    p.dt_s = doc.at("dt_s").get<double>();
    p.dt_std_s = doc.value("dt_std_s", 0.0);
    const auto & r = doc.at("restitution");
    p.restitution.degree = r.at("degree").get<int>();
    p.restitution.coefficients = r.at("coeffs").get<std::vector<double>>();
    const auto domain = r.at("domain").get<std::vector<double>>();
    if (domain.size() != 2) {
      throw Error(ErrorCode::InvariantViolation, "restitution domain must have two bounds");
    }
    p.restitution.domain_min = domain[0];
    p.restitution.domain_max = domain[1];
    p.restitution.r_squared = r.value("r_squared", 1.0);
    p.restitution.mae = r.value("mae", 0.0);
    p.restitution_downgraded = r.value("downgraded", false);
    p.angle_deg = doc.value("angle_deg", 0.0);
    p.f_max_ref_n = doc.value("f_max_ref_N", 0.0);
    if (doc.contains("peak_to_average") && !doc.at("peak_to_average").is_null()) {
      p.peak_to_average = doc.at("peak_to_average").get<double>();
    }
    p.source = doc.value("source", std::string{});
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::InvariantViolation, std::string("malformed profile: ") + e.what());
  }
  p.validate();
  return p;
}

void save_profile(const AirframeProfile & profile, const std::filesystem::path & path)
{
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  }
  out << serialize_profile(profile).dump(2) << '\n';
}

AirframeProfile load_profile(const std::filesystem::path & path)
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
  return parse_profile(doc);
}

}  // namespace impact_governor::fit
