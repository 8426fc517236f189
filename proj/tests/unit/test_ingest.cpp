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
#include <filesystem>
#include <fstream>

#include "impact_governor/error.hpp"
#include "impact_governor/ingest.hpp"
#include "impact_governor/synthetic.hpp"
#include "oracles.hpp"

using namespace impact_governor;
namespace fs = std::filesystem;

namespace
{

fs::path scratch(const std::string & name)
{
  auto p = fs::path(IMPACT_GOVERNOR_BINARY_DIR) / "scratch" / "ingest" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path & p, const std::string & text)
{
  std::ofstream(p, std::ios::binary) << text;
}

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

}  // namespace

TEST_CASE("zero-order hold keeps the latest sample at or before each instant")
{
  const std::vector<double> st{0.0, 1.0, 2.0};
  const std::vector<double> sv{10.0, 20.0, 30.0};
  const std::vector<double> dt{-0.5, 0.0, 0.5, 1.0, 1.99, 2.0, 5.0};
  const auto out = ingest::zero_order_hold(st, sv, dt);
  const std::vector<double> expect{10.0, 10.0, 10.0, 20.0, 20.0, 30.0, 30.0};
  CHECK(out == expect);
  CHECK(code_of([&] { ingest::zero_order_hold(st, std::vector<double>{1.0}, dt); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("load cells sum elementwise and must share a length")
{
  const std::vector<double> a{1, 2}, b{3, 4}, c{5, 6};
  CHECK(ingest::sum_load_cells(a, b, c) == std::vector<double>{9, 12});
  const std::vector<double> shorter{1};
  CHECK(code_of([&] { ingest::sum_load_cells(a, b, shorter); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("trial metadata bounds")
{
  ingest::TrialMeta m;
  m.mass_kg = 0.25;
  m.angle_deg = 45.0;
  CHECK_NOTHROW(m.validate());
  m.angle_deg = 91.0;
  CHECK(code_of([&] { m.validate(); }) == ErrorCode::InvariantViolation);
  m.angle_deg = 0.0;
  m.mass_kg = 0.0;
  CHECK(code_of([&] { m.validate(); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("stream loader rejects malformed files")
{
  const auto dir = scratch("loader");
  SUBCASE("missing column")
  {
    write(dir / "f.csv", "t_s,f1_N,f2_N,accel_mps2,trigger\n0,1,1,0,0\n0.00016,1,1,0,1\n");
    CHECK(code_of([&] { ingest::load_force_stream(dir / "f.csv", 6250.0); }) == ErrorCode::MissingColumn);
  }
  SUBCASE("declared rate disagrees with the timestamps")
  {
    write(dir / "r.csv", "t_s,range_m,trigger\n0,1,0\n0.002,1,1\n0.004,1,1\n");
    CHECK(code_of([&] { ingest::load_range_stream(dir / "r.csv", 1000.0); }) == ErrorCode::RateMismatch);
    CHECK_NOTHROW(ingest::load_range_stream(dir / "r.csv", 500.0));
  }
  SUBCASE("timestamps must increase")
  {
    write(dir / "r.csv", "t_s,range_m,trigger\n0,1,0\n0.001,1,1\n0.001,1,1\n0.003,1,1\n");
    CHECK(code_of([&] { ingest::load_range_stream(dir / "r.csv", 1000.0); }) == ErrorCode::RateMismatch);
  }
  SUBCASE("header only")
  {
    write(dir / "r.csv", "t_s,range_m,trigger\n");
    CHECK(code_of([&] { ingest::load_range_stream(dir / "r.csv", 1000.0); }) == ErrorCode::EmptyStream);
  }
  SUBCASE("comments and blank lines are skipped, trigger is the first high sample")
  {
    write(dir / "r.csv", "# bench 3\nt_s,range_m,trigger\n\n0,2.0,0\n0.001,1.9,0.2\n0.002,1.8,1\n0.003,1.7,1\n");
    const auto s = ingest::load_range_stream(dir / "r.csv", 1000.0);
    REQUIRE(s.trigger_time);
    CHECK(*s.trigger_time == doctest::Approx(0.002));
    CHECK(s.range.size() == 4);
  }
}

TEST_CASE("alignment puts both triggers at t = 0")
{
  auto spec = synthetic::elastic_fixture();
  spec.force_noise_n = 0.0;
  spec.range_noise_m = 0.0;
  const auto trial = synthetic::make_trial(spec);
  const auto rec = ingest::align_streams(trial.raw, trial.meta);

  CHECK(rec.meta.range_offset_s == doctest::Approx(spec.range_clock_origin_s).epsilon(1e-12));
  CHECK(rec.meta.alignment_residual_s < 1e-9);
  const auto zero = std::find_if(rec.time.begin(), rec.time.end(), [](double t) { return std::abs(t) < 1e-12; });
  REQUIRE(zero != rec.time.end());
  CHECK(rec.time.front() == doctest::Approx(-spec.pre_trigger_s));
  CHECK(rec.range_time.front() == doctest::Approx(-spec.pre_trigger_s));
  CHECK(rec.range_resampled.size() == rec.time.size());
  for (std::size_t i = 0; i < rec.time.size(); i += 97) {
    CHECK(rec.force_total[i] == doctest::Approx(trial.raw.force_ch1[i] + trial.raw.force_ch2[i] + trial.raw.force_ch3[i]));
  }

  SUBCASE("missing trigger")
  {
    auto raw = trial.raw;
    raw.trigger_time_range.reset();
    CHECK(code_of([&] { ingest::align_streams(raw, trial.meta); }) == ErrorCode::TriggerMissing);
  }
  SUBCASE("timing jitter beyond 0.1 ms")
  {
    auto raw = trial.raw;
    raw.force_time[raw.force_time.size() / 2] += 1.5e-4;
    CHECK(code_of([&] { ingest::align_streams(raw, trial.meta); }) == ErrorCode::AlignmentOutOfTolerance);
    raw.force_time[raw.force_time.size() / 2] -= 1.0e-4;
    CHECK_NOTHROW(ingest::align_streams(raw, trial.meta));
  }
}

TEST_CASE("written trials load back to the generated acquisition")
{
  const auto dir = scratch("roundtrip");
  const auto spec = synthetic::two_stage_fixture();
  const auto generated = synthetic::make_trial(spec);
  const auto manifest = synthetic::write_trial(spec, dir);
  const auto loaded = ingest::load_trial(manifest);

  CHECK(loaded.meta.trial_id == spec.trial_id);
  CHECK(loaded.meta.configuration == spec.configuration);
  CHECK(loaded.meta.mass_kg == spec.mass_kg);
  CHECK(loaded.meta.nominal_speed_mps == spec.v_in_mps);
  REQUIRE(loaded.raw.force_time.size() == generated.raw.force_time.size());
  REQUIRE(loaded.raw.range.size() == generated.raw.range.size());
  double worst_f = 0.0, worst_r = 0.0;
  for (std::size_t i = 0; i < generated.raw.force_time.size(); ++i) {
    worst_f = std::max(worst_f, std::abs(loaded.raw.force_ch1[i] - generated.raw.force_ch1[i]));
  }
  for (std::size_t i = 0; i < generated.raw.range.size(); ++i) {
    worst_r = std::max(worst_r, std::abs(loaded.raw.range[i] - generated.raw.range[i]));
  }
  CHECK(worst_f <= 5e-6);
  CHECK(worst_r <= 5e-8);
  REQUIRE(loaded.raw.trigger_time_force);
  CHECK(*loaded.raw.trigger_time_force == doctest::Approx(*generated.raw.trigger_time_force));
  CHECK(*loaded.raw.trigger_time_range == doctest::Approx(*generated.raw.trigger_time_range));

  const auto rec = ingest::align_streams(loaded.raw, loaded.meta);
  CHECK(rec.meta.alignment_residual_s < 1e-6);
}
