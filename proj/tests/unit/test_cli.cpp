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
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "impact_governor/cli.hpp"
#include "impact_governor/impact.hpp"
#include "impact_governor/governor.hpp"
#include "impact_governor/synthetic.hpp"
#include "oracles.hpp"

using namespace impact_governor;
namespace fs = std::filesystem;

namespace
{

struct Run
{
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args, const std::string & input = {})
{
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string & name)
{
  auto p = fs::path(IMPACT_GOVERNOR_BINARY_DIR) / "scratch" / "cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const fs::path kGolden = oracle::source_dir() / "tests" / "golden";
const std::string kSimProfile = (oracle::source_dir() / "data" / "profiles" / "carbon_sim.json").string();

}  // namespace

TEST_CASE("usage errors exit 2")
{
  CHECK(run({}).code == cli::kExitInputError);
  CHECK(run({"bogus"}).code == cli::kExitInputError);
  CHECK(run({"govern", "--profile", kSimProfile}).code == cli::kExitInputError);
  CHECK(run({"govern", "--profile", kSimProfile, "--stdin", "--mode", "smooth"}).code == cli::kExitInputError);
  CHECK(run({"--help"}).code == cli::kExitOk);
  CHECK(run({"--version"}).out == std::string(cli::tool_version()) + "\n");
}

TEST_CASE("govern reproduces the golden streams")
{
  const auto config = (kGolden / "govern_config.json").string();
  for (const char * name : {"govern", "stale"}) {
    CAPTURE(name);
    const auto input = oracle::read_file(kGolden / (std::string(name) + "_input.ndjson"));
    const auto r = run({"govern", "--stdin", "--profile", kSimProfile, "--config", config}, input);
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out == oracle::read_file(kGolden / (std::string(name) + "_expected.ndjson")));
  }
}

TEST_CASE("stale range falls back to the force cap")
{
  const auto r = run(
    {"govern", "--stdin", "--profile", kSimProfile, "--config", (kGolden / "govern_config.json").string()},
    oracle::read_file(kGolden / "stale_input.ndjson"));
  std::istringstream lines(r.out);
  std::string line;
  std::vector<nlohmann::json> msgs;
  while (std::getline(lines, line)) {
    msgs.push_back(nlohmann::json::parse(line));
  }
  REQUIRE(msgs.size() == 5);
  // Independent check: v_force = F* dt / (m (1 + e)).
  const double vf = oracle::force_cap(0.25, 0.036, std::sqrt(0.145924), 65.0);
  for (std::size_t i : {2u, 3u}) {
    CHECK(msgs[i]["source"] == "stale-failsafe");
    CHECK(msgs[i]["cap_mps"].get<double>() == doctest::Approx(vf).epsilon(1e-9));
    const double s = std::hypot(msgs[i]["vx"].get<double>(), msgs[i]["vy"].get<double>());
    CHECK(s == doctest::Approx(vf).epsilon(1e-9));
  }
  CHECK(msgs[4]["source"] == "none");
}

TEST_CASE("govern: malformed input, empty input, compliance log")
{
  const auto dir = scratch("govern");
  const auto bad = run(
    {"govern", "--stdin", "--profile", kSimProfile, "--out", dir.string()},
    oracle::read_file(kGolden / "malformed_input.ndjson"));
  CHECK(bad.code == cli::kExitRuntimeError);
  std::istringstream lines(bad.out);
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK(nlohmann::json::parse(first)["type"] == "cmd_limited");
  const auto err = nlohmann::json::parse(second);
  CHECK(err["type"] == "error");
  CHECK(err["line"] == 3);

  const auto log = oracle::read_file(dir / "compliance.csv");
  CHECK(log.rfind(governor::kComplianceCsvHeader, 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);
  const auto manifest = nlohmann::json::parse(oracle::read_file(dir / "run_manifest.json"));
  CHECK(manifest["subcommand"] == "govern");
  CHECK(manifest["exit_code"] == 3);

  const auto empty = run({"govern", "--stdin", "--profile", kSimProfile}, "");
  CHECK(empty.code == cli::kExitOk);
  CHECK(empty.out.empty());
}

TEST_CASE("analyze, fit and report on generated trials")
{
  const auto root = scratch("pipeline");
  const auto data = root / "data";
  const synthetic::TrialSpec specs[] = {
    synthetic::plastic_fixture(), synthetic::elastic_fixture(), synthetic::two_stage_fixture()};
  std::map<std::string, synthetic::GroundTruth> truth;
  for (const auto & s : specs) {
    synthetic::write_trial(s, data / "fixtures");
    truth[s.trial_id] = synthetic::ground_truth(s);
  }
  for (int k = 0; k < 4; ++k) {
    synthetic::TrialSpec s;
    s.trial_id = "sweep" + std::to_string(k);
    s.configuration = "Sweep";
    s.v_in_mps = 3.0 + k;
    s.restitution = 0.45 - 0.03 * k;
    s.force_noise_n = 0.5;
    s.range_noise_m = 0.002;
    s.seed = 40 + static_cast<std::uint64_t>(k);
    synthetic::write_trial(s, data / "sweep");
  }

  const auto out = root / "out";
  const auto a = run({"analyze", data.string(), "--out", out.string()});
  REQUIRE(a.code == cli::kExitOk);
  std::ifstream csv(out / "metrics.csv");
  const auto rows = impact::read_metrics_csv(csv);
  CHECK(rows.size() == 7);
  for (const auto & m : rows) {
    if (!truth.count(m.trial_id)) {
      continue;
    }
    CAPTURE(m.trial_id);
    const auto & g = truth[m.trial_id];
    CHECK(m.f_max == doctest::Approx(g.f_max).epsilon(0.02));
    CHECK(m.dt_j == doctest::Approx(g.dt_j).epsilon(0.02));
    CHECK(m.j == doctest::Approx(g.j).epsilon(0.02));
    CHECK(std::abs(m.ec_r - g.ec_r) <= std::max(0.02 * g.ec_r, 1e-3));
  }
  CHECK(fs::exists(out / "summary_sweep.json"));
  CHECK(fs::exists(out / "summary_fixture_two_stage.json"));

  const auto first_manifest = nlohmann::json::parse(oracle::read_file(out / "run_manifest.json"));
  CHECK(run({"analyze", data.string(), "--out", out.string()}).code == cli::kExitOk);
  const auto second_manifest = nlohmann::json::parse(oracle::read_file(out / "run_manifest.json"));
  CHECK(first_manifest["config_hash"] == second_manifest["config_hash"]);
  CHECK(first_manifest["inputs"].size() == 7);

  const auto profile = out / "profile.json";
  const auto f = run({"fit", (out / "summary_sweep.json").string(), "--out", profile.string(), "--degree", "1"});
  REQUIRE(f.code == cli::kExitOk);
  const auto p = fit::load_profile(profile);
  CHECK(p.restitution.degree == 1);
  CHECK(p.restitution.r_squared > 0.97);
  CHECK(p.restitution.coefficients[1] < 0.0);

  const auto rep = run({"report", (out / "metrics.csv").string(), profile.string()});
  CHECK(rep.code == cli::kExitOk);
  CHECK(rep.out.find("| Sweep | 4 |") != std::string::npos);
  CHECK(rep.out.find("R²") != std::string::npos);
  CHECK(rep.out.find("MAE") != std::string::npos);
}

TEST_CASE("analyze failures")
{
  const auto empty = scratch("empty");
  CHECK(run({"analyze", empty.string(), "--out", (empty / "out").string()}).code == cli::kExitInputError);

  // One good trial, one whose range stream lacks a trigger: the run continues.
  const auto dir = scratch("partial");
  synthetic::write_trial(synthetic::elastic_fixture(), dir / "in");
  synthetic::write_trial(synthetic::plastic_fixture(), dir / "in");
  std::ofstream(dir / "in" / "plastic_range.csv", std::ios::binary) << "t_s,range_m,trigger\n0,1,0\n0.001,1,0\n";
  const auto r = run({"analyze", (dir / "in").string(), "--out", (dir / "out").string()});
  CHECK(r.code == cli::kExitInputError);
  CHECK(r.err.find("plastic.json") != std::string::npos);
  std::ifstream csv(dir / "out" / "metrics.csv");
  CHECK(impact::read_metrics_csv(csv).size() == 1);
}

TEST_CASE("report golden and empty input")
{
  const auto r = run(
    {"report", (kGolden / "report_summary.json").string(),
      (oracle::source_dir() / "data" / "profiles" / "carbon_0deg.json").string()});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out == oracle::read_file(kGolden / "report_expected.md"));
  CHECK(run({"report"}).code == cli::kExitInputError);
}

TEST_CASE("simulate writes deterministic outputs")
{
  const auto scenario = (oracle::source_dir() / "data" / "scenarios" / "three_humans_face.json").string();
  const auto a = scratch("sim_a");
  const auto b = scratch("sim_b");
  REQUIRE(run({"simulate", scenario, "--out", a.string(), "--emit-gnuplot"}).code == cli::kExitOk);
  REQUIRE(run({"simulate", scenario, "--out", b.string()}).code == cli::kExitOk);
  CHECK(oracle::read_file(a / "trajectory.csv") == oracle::read_file(b / "trajectory.csv"));
  CHECK(oracle::read_file(a / "summary.json") == oracle::read_file(b / "summary.json"));
  CHECK(fs::exists(a / "trajectory.dat"));
  CHECK(fs::exists(a / "trajectory.gp"));
  const auto ma = nlohmann::json::parse(oracle::read_file(a / "run_manifest.json"));
  const auto mb = nlohmann::json::parse(oracle::read_file(b / "run_manifest.json"));
  CHECK(ma["config_hash"] == mb["config_hash"]);

  // With the chest target the force cap sits at the platform limit.
  const auto c = scratch("sim_c");
  const auto tight = run({"simulate", scenario, "--out", c.string(), "--f-star", "140", "--body-region", "chest"});
  CHECK(tight.code == cli::kExitOk);
  const auto s = nlohmann::json::parse(oracle::read_file(c / "summary.json"));
  CHECK(s["v_force_mps"].get<double>() == 10.0);
}
