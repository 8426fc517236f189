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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "impact_governor/error.hpp"
#include "impact_governor/impact.hpp"
#include "impact_governor/synthetic.hpp"
#include "oracles.hpp"

using namespace impact_governor;

namespace
{

template<class F>
ErrorCode code_of(F && f)
{
  try {
    f();
  } catch (const Error & e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

impact::ImpactWindow clean_window(double amp, double tau)
{
  const auto p = oracle::half_sine(amp, tau, 6250.0, 0.03);
  const std::vector<double> v(p.t.size(), -5.0);
  return impact::detect_impact(p.t, p.f, v);
}

}  // namespace

TEST_CASE("rectified impulse of a clean half-sine")
{
  const double amp = 100.0, tau = 0.020;
  const auto p = oracle::half_sine(amp, tau, 6250.0, 0.01);
  const double j = impact::rectified_impulse(p.t, p.f);
  CHECK(j == doctest::Approx(oracle::rectified_impulse(p.t, p.f)).epsilon(1e-12));
  CHECK(std::abs(j / (2.0 * amp * tau / std::numbers::pi) - 1.0) < 0.005);
}

TEST_CASE("negative force never adds to the rectified impulse")
{
  std::vector<double> t, f;
  for (int i = 0; i <= 500; ++i) {
    t.push_back(i / 6250.0);
    f.push_back(80.0 * std::sin(2.0 * std::numbers::pi * i / 250.0));
  }
  std::vector<double> positive(f);
  for (auto & x : positive) {
    x = std::max(x, 0.0);
  }
  CHECK(impact::rectified_impulse(t, f) == doctest::Approx(impact::rectified_impulse(t, positive)).epsilon(1e-15));
  CHECK(impact::rectified_impulse(t, f) == doctest::Approx(oracle::rectified_impulse(t, f)).epsilon(1e-12));
  std::vector<double> negative(f.size(), -3.0);
  CHECK(impact::rectified_impulse(t, negative) == 0.0);
}

TEST_CASE("contact window of a clean pulse")
{
  const auto w = clean_window(100.0, 0.020);
  CHECK(impact::contact_duration(w) == doctest::Approx(0.020).epsilon(0.01));
  CHECK(w.t_onset == doctest::Approx(0.0).epsilon(1e-3).scale(1.0));
  CHECK(impact::peak_force(w) == doctest::Approx(100.0).epsilon(1e-3));
  CHECK(w.v_in == doctest::Approx(5.0));
  CHECK(w.t_start > w.t_onset);
  CHECK(w.time.front() <= w.t_onset);
  CHECK(w.time.back() >= w.t_end);
}

TEST_CASE("detection failures")
{
  const auto p = oracle::half_sine(100.0, 0.020, 6250.0, 0.03);
  const std::vector<double> slow(p.t.size(), 1.0);
  CHECK(code_of([&] { impact::detect_impact(p.t, p.f, slow); }) == ErrorCode::VelocityTooLow);
  const std::vector<double> quiet(p.t.size(), 2.0);
  const std::vector<double> fast(p.t.size(), 5.0);
  CHECK(code_of([&] { impact::detect_impact(p.t, quiet, fast); }) == ErrorCode::NoImpactFound);
  const std::vector<double> shorter(3, 5.0);
  CHECK(code_of([&] { impact::detect_impact(p.t, p.f, shorter); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("kinetic energies")
{
  const auto e = impact::kinetic_energies(0.27, 3.0, 1.2);
  CHECK(e.ec_i == doctest::Approx(0.5 * 0.27 * 9.0));
  CHECK(e.ec_r == doctest::Approx(0.16));
  CHECK(impact::kinetic_energies(0.27, 3.0, 0.0).ec_r == 0.0);
  CHECK(code_of([] { impact::kinetic_energies(0.27, 3.0, 3.1); }) == ErrorCode::RestitutionAboveUnity);
  CHECK(code_of([] { impact::kinetic_energies(0.0, 3.0, 1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("rebound averages |v| just after contact end")
{
  auto w = clean_window(100.0, 0.020);
  std::vector<double> t, v;
  for (int i = 0; i < 40; ++i) {
    t.push_back(w.t_end + i * 1e-3);
    v.push_back(i <= 10 ? 2.0 : 50.0);
  }
  const double mass = 2.0 * 100.0 * 0.020 / std::numbers::pi / 7.0;  // J / m = 7 m/s
  const auto r = impact::rebound_velocity(w, mass, t, v, 0.010);
  CHECK(r.v_f_kinematic == doctest::Approx(2.0));
  CHECK(r.v_f_impulse == doctest::Approx(2.0).epsilon(0.01));
  CHECK_FALSE(r.negative_impulse_residual);
  const auto heavy = impact::rebound_velocity(w, 10.0 * mass, t, v, 0.010);
  CHECK(heavy.negative_impulse_residual);
  CHECK(heavy.v_f_impulse == 0.0);
}

TEST_CASE("full pipeline recovers constructed fixtures")
{
  const synthetic::TrialSpec specs[] = {
    synthetic::plastic_fixture(), synthetic::elastic_fixture(), synthetic::two_stage_fixture()};
  for (const auto & spec : specs) {
    CAPTURE(spec.trial_id);
    const auto trial = synthetic::make_trial(spec);
    const auto rec = ingest::align_streams(trial.raw, trial.meta);
    const auto m = impact::summarize_trial(rec);
    const auto & g = trial.truth;
    CHECK(m.f_max == doctest::Approx(g.f_max).epsilon(0.02));
    CHECK(m.dt_j == doctest::Approx(g.dt_j).epsilon(0.02));
    CHECK(m.j == doctest::Approx(g.j).epsilon(0.02));
    CHECK(std::abs(m.ec_r - g.ec_r) <= std::max(0.02 * g.ec_r, 1e-3));
    CHECK(m.v_in == doctest::Approx(g.v_in).epsilon(0.01));
    CHECK(m.e_hat == doctest::Approx(std::sqrt(m.ec_r)));
  }
}

TEST_CASE("describe uses the sample standard deviation")
{
  const std::vector<double> x{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  const auto s = impact::describe(x);
  CHECK(s.mean == doctest::Approx(5.0));
  REQUIRE(s.std);
  CHECK(*s.std == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(*s.cv == doctest::Approx(*s.std / 5.0));
  const std::vector<double> one{3.0};
  CHECK_FALSE(impact::describe(one).std);
  CHECK(code_of([] { impact::describe(std::vector<double>{}); }) == ErrorCode::EmptyInput);
}

namespace
{

impact::ImpactMetrics metric(const std::string & id, const std::string & config, double v)
{
  impact::ImpactMetrics m;
  m.trial_id = id;
  m.configuration = config;
  m.mass_kg = 0.27;
  m.f_max = 30.0 * v;
  m.dt_j = 0.036;
  m.j = 0.4 * v;
  m.v_in = v;
  m.v_f = 0.38 * v;
  const auto e = impact::kinetic_energies(m.mass_kg, m.v_in, m.v_f);
  m.ec_i = e.ec_i;
  m.ec_r = e.ec_r;
  m.e_hat = std::sqrt(e.ec_r);
  return m;
}

}  // namespace

TEST_CASE("configuration summary and its JSON form")
{
  const std::vector<impact::ImpactMetrics> rows{
    metric("a", "Carbon-0°", 3.0), metric("b", "Carbon-0°", 3.2), metric("c", "Carbon-0°", 3.5)};
  const auto s = impact::aggregate_configuration(rows);
  CHECK(s.n == 3);
  CHECK(s.trials.size() == 3);
  CHECK(s.f_max.mean == doctest::Approx(30.0 * (3.0 + 3.2 + 3.5) / 3.0));
  CHECK(s.ec_r.mean == doctest::Approx(0.38 * 0.38));

  const auto doc = impact::summary_to_json(s);
  const auto back = impact::summary_from_json(nlohmann::json::parse(doc.dump()));
  CHECK(back.configuration == s.configuration);
  CHECK(back.n == s.n);
  CHECK(back.f_max.mean == s.f_max.mean);
  CHECK(*back.dt_j.std == *s.dt_j.std);
  CHECK(back.trials.size() == 3);
  CHECK(back.trials[1].v_in == s.trials[1].v_in);

  auto bumped = doc;
  bumped["schema"] = 99;
  CHECK(code_of([&] { impact::summary_from_json(bumped); }) == ErrorCode::SchemaVersionMismatch);

  const std::vector<impact::ImpactMetrics> mixed{metric("a", "A", 3.0), metric("b", "B", 3.0)};
  CHECK(code_of([&] { impact::aggregate_configuration(mixed); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("metrics CSV round trip")
{
  std::vector<impact::ImpactMetrics> rows{metric("a", "Carbon-0°", 3.0), metric("b", "Carbon-0°", 3.3)};
  rows[1].negative_impulse_residual = true;
  std::stringstream io;
  impact::write_metrics_csv(io, rows);
  CHECK(io.str().rfind(impact::kMetricsCsvHeader, 0) == 0);
  const auto back = impact::read_metrics_csv(io);
  REQUIRE(back.size() == 2);
  CHECK(back[0].trial_id == "a");
  CHECK(back[1].configuration == "Carbon-0°");
  CHECK(back[1].f_max == doctest::Approx(rows[1].f_max).epsilon(1e-6));
  CHECK(back[1].dt_j == doctest::Approx(rows[1].dt_j).epsilon(1e-6));
  CHECK(back[1].ec_r == doctest::Approx(rows[1].ec_r).epsilon(1e-4));
  CHECK(back[1].negative_impulse_residual);
}
