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

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "impact_governor/cli.hpp"
#include "impact_governor/fit.hpp"
#include "impact_governor/governor.hpp"
#include "impact_governor/impact.hpp"
#include "impact_governor/ingest.hpp"
#include "impact_governor/sim.hpp"
#include "impact_governor/stream.hpp"

namespace impact_governor::cli
{

namespace fs = std::filesystem;

namespace
{

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

// No SA_RESTART: a blocked read on stdin returns so the log can be flushed.
struct SignalGuard
{
  struct sigaction old_int{}, old_term{};
  SignalGuard()
  {
    g_stop.store(false);
    struct sigaction sa{};
    sa.sa_handler = on_signal;
    sigemptyset(&sa.sa_mask);
    sa.sa_flags = 0;
    sigaction(SIGINT, &sa, &old_int);
    sigaction(SIGTERM, &sa, &old_term);
  }
  ~SignalGuard()
  {
    sigaction(SIGINT, &old_int, nullptr);
    sigaction(SIGTERM, &old_term, nullptr);
  }
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream & err)
{
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("impact_governor", sink);
  log->set_pattern("[%l] %v");
  auto level = spdlog::level::warn;
  if (const char * env = std::getenv("IMPACT_GOVERNOR_LOG")) {
    level = spdlog::level::from_str(env);
  }
  log->set_level(level);
  return log;
}

nlohmann::json read_json_file(const fs::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  }
  out << text;
}

struct Context
{
  std::istream & in;
  std::ostream & out;
  std::ostream & err;
  std::shared_ptr<spdlog::logger> log;
  RunManifest manifest;
  std::optional<fs::path> manifest_path;
};

// Options shared by govern and simulate.
struct GovernorOverrides
{
  std::string config_path;
  std::string mode;
  std::optional<double> f_star;
  std::string body_region;

  void add_to(CLI::App & app)
  {
    app.add_option("--config", config_path, "Governor config JSON");
    app.add_option("--mode", mode, "Cap fusion mode")->check(CLI::IsMember({"binary", "ramp"}));
    app.add_option("--f-star", f_star, "Force target in newtons");
    app.add_option("--body-region", body_region, "Body region force limit")
      ->check(CLI::IsMember({"face", "neck", "chest", "back"}));
  }

  governor::GovernorConfig apply(governor::GovernorConfig cfg) const
  {
    if (!config_path.empty()) {
      cfg = governor::governor_config_from_json(read_json_file(config_path), cfg);
    }
    if (!mode.empty()) {
      cfg.mode = governor::parse_mode(mode);
    }
    if (!body_region.empty()) {
      cfg.body_region = fit::parse_body_region(body_region);
      cfg.f_star_n = fit::body_region_limit(*cfg.body_region);
    }
    if (f_star) {
      cfg.f_star_n = *f_star;
    }
    cfg.validate();
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs
{
  std::string dir;
  std::string out_dir;
  std::string config_path;
};

impact::PipelineOptions pipeline_options_from_json(const nlohmann::json & doc)
{
  impact::PipelineOptions o;
  try {
    o.filter.order = doc.value("filter_order", o.filter.order);
    o.filter.cutoff_hz = doc.value("filter_cutoff_hz", o.filter.cutoff_hz);
    o.despike_window = doc.value("despike_window", o.despike_window);
    o.despike_k = doc.value("despike_k", o.despike_k);
    o.kalman_sigma_s = doc.value("kalman_sigma_s", o.kalman_sigma_s);
    o.kalman_measurement_noise = doc.value("kalman_measurement_noise", o.kalman_measurement_noise);
    o.detect.force_threshold_n = doc.value("force_threshold_N", o.detect.force_threshold_n);
    o.detect.velocity_threshold_mps = doc.value("velocity_threshold_mps", o.detect.velocity_threshold_mps);
    o.detect.approach_window_s = doc.value("approach_window_s", o.detect.approach_window_s);
    o.detect.impulse_fraction = doc.value("impulse_fraction", o.detect.impulse_fraction);
    o.rebound_window_s = doc.value("rebound_window_s", o.rebound_window_s);
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::InvalidConfig, std::string("pipeline config: ") + e.what());
  }
  return o;
}

nlohmann::json pipeline_options_to_json(const impact::PipelineOptions & o)
{
  return {
    {"filter_order", o.filter.order},
    {"filter_cutoff_hz", o.filter.cutoff_hz},
    {"despike_window", o.despike_window},
    {"despike_k", o.despike_k},
    {"kalman_sigma_s", o.kalman_sigma_s},
    {"kalman_measurement_noise", o.kalman_measurement_noise},
    {"force_threshold_N", o.detect.force_threshold_n},
    {"velocity_threshold_mps", o.detect.velocity_threshold_mps},
    {"approach_window_s", o.detect.approach_window_s},
    {"impulse_fraction", o.detect.impulse_fraction},
    {"rebound_window_s", o.rebound_window_s},
  };
}

// A trial manifest is any JSON object naming both stream files.
std::vector<fs::path> find_trial_manifests(const fs::path & dir)
{
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  }
  std::vector<fs::path> found;
  for (const auto & entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") {
      continue;
    }
    std::ifstream in(entry.path());
    const auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_object() && doc.contains("force_csv") && doc.contains("range_csv")) {
      found.push_back(entry.path());
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

bool metrics_finite(const impact::ImpactMetrics & m)
{
  for (double v : {m.f_max, m.dt_j, m.j, m.ec_i, m.ec_r, m.v_in, m.v_f, m.e_hat}) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return m.ec_r >= 0.0 && m.ec_r <= 1.0;
}

int cmd_analyze(Context & ctx, const AnalyzeArgs & a)
{
  impact::PipelineOptions opts;
  if (!a.config_path.empty()) {
    opts = pipeline_options_from_json(read_json_file(a.config_path));
    ctx.manifest.inputs.push_back(a.config_path);
  }
  ctx.manifest.config = pipeline_options_to_json(opts);

  const auto manifests = find_trial_manifests(a.dir);
  if (manifests.empty()) {
    ctx.err << fmt::format("error: no trial manifests under {}\n", a.dir);
    return kExitInputError;
  }

  int status = kExitOk;
  std::vector<impact::ImpactMetrics> rows;
  for (const auto & path : manifests) {
    ctx.manifest.inputs.push_back(path.string());
    try {
      const auto loaded = ingest::load_trial(path);
      const auto record = ingest::align_streams(loaded.raw, loaded.meta);
      auto m = impact::summarize_trial(record, opts);
      ctx.log->info("{}: F_max {:.2f} N, dt_J {:.2f} ms", m.trial_id, m.f_max, m.dt_j * 1e3);
      if (!metrics_finite(m)) {
        ctx.err << fmt::format("error: {}: metrics out of range\n", path.string());
        status = std::max(status, kExitInvariantViolation);
      }
      rows.push_back(std::move(m));
    } catch (const Error & e) {
      ctx.err << fmt::format("error: {}: {}\n", path.string(), e.what());
      status = std::max(status, exit_code_for(e.code()));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const auto & l, const auto & r) {
    return std::tie(l.configuration, l.trial_id) < std::tie(r.configuration, r.trial_id);
  });

  const fs::path out_dir = a.out_dir;
  fs::create_directories(out_dir);
  {
    std::ostringstream csv;
    impact::write_metrics_csv(csv, rows);
    write_text(out_dir / "metrics.csv", csv.str());
    ctx.manifest.outputs.push_back((out_dir / "metrics.csv").string());
  }
  std::map<std::string, std::vector<impact::ImpactMetrics>> groups;
  for (const auto & m : rows) {
    groups[m.configuration].push_back(m);
  }
  for (const auto & [config, members] : groups) {
    const auto summary = impact::aggregate_configuration(members);
    const auto path = out_dir / ("summary_" + slugify(config) + ".json");
    write_text(path, impact::summary_to_json(summary).dump(2) + "\n");
    ctx.manifest.outputs.push_back(path.string());
  }
  ctx.out << fmt::format("analyzed {} of {} trials in {} configuration(s)\n", rows.size(), manifests.size(), groups.size());
  return status;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs
{
  std::vector<std::string> summaries;
  std::string out;
  std::string configuration;
  std::string name;
  int degree = 2;
};

int cmd_fit(Context & ctx, const FitArgs & a)
{
  std::vector<impact::ConfigurationSummary> summaries;
  for (const auto & p : a.summaries) {
    ctx.manifest.inputs.push_back(p);
    summaries.push_back(impact::summary_from_json(read_json_file(p)));
  }
  const std::string config = a.configuration.empty() ? summaries.front().configuration : a.configuration;
  ctx.manifest.config = {{"configuration", config}, {"degree", a.degree}, {"name", a.name}};

  auto profile = fit::build_airframe_profile(summaries, config, a.degree);
  if (!a.name.empty()) {
    profile.name = a.name;
  }
  profile.validate();
  const auto text = fit::serialize_profile(profile).dump(2) + "\n";
  if (a.out.empty() || a.out == "-") {
    ctx.out << text;
  } else {
    const fs::path out = a.out;
    if (out.has_parent_path()) {
      fs::create_directories(out.parent_path());
    }
    write_text(out, text);
    ctx.manifest.outputs.push_back(out.string());
    ctx.manifest_path = out.parent_path() / "run_manifest.json";
  }
  if (profile.restitution_downgraded) {
    ctx.err << "warning: too few distinct speeds, restitution fit downgraded to a constant\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// govern

struct GovernArgs
{
  std::string profile;
  GovernorOverrides overrides;
  bool use_stdin = false;
  std::optional<int> udp_port;
  bool udp_any = false;
  std::string compliance;
  std::string out_dir;
};

int cmd_govern(Context & ctx, const GovernArgs & a)
{
  ctx.manifest.inputs.push_back(a.profile);
  if (!a.overrides.config_path.empty()) {
    ctx.manifest.inputs.push_back(a.overrides.config_path);
  }
  const auto profile = fit::load_profile(a.profile);
  const auto cfg = a.overrides.apply({});
  ctx.manifest.config = governor::governor_config_to_json(cfg);

  governor::Governor gov(cfg, profile);
  if (gov.force_map_non_monotone()) {
    ctx.err << "warning: impact-force map is not monotone in speed\n";
  }
  ctx.log->info(
    "v_force {:.4f} m/s, S(v_cruise) {:.4f} m", gov.v_force(), gov.iso_zone_radius());

  std::unique_ptr<governor::ComplianceLog> log;
  fs::path compliance = a.compliance;
  if (compliance.empty() && !a.out_dir.empty()) {
    compliance = fs::path(a.out_dir) / "compliance.csv";
  }
  if (!compliance.empty()) {
    if (compliance.has_parent_path()) {
      fs::create_directories(compliance.parent_path());
    }
    log = std::make_unique<governor::ComplianceLog>(compliance);
    gov.set_record_sink([&log](const governor::ComplianceRecord & r) { log->append(r); });
    ctx.manifest.outputs.push_back(compliance.string());
  }

  SignalGuard guard;
  stream::StreamSummary summary;
  if (a.udp_port) {
    stream::UdpEndpoint endpoint(static_cast<std::uint16_t>(*a.udp_port), a.udp_any);
    ctx.err << fmt::format("listening on udp port {}\n", endpoint.port());
    summary = endpoint.serve(gov, g_stop);
  } else {
    summary = stream::run_ndjson(gov, ctx.in, ctx.out);
  }
  ctx.out.flush();
  if (log) {
    log->flush();
  }
  ctx.log->info("{} lines, {} commands", summary.lines, summary.commands);
  if (summary.malformed) {
    return kExitRuntimeError;
  }
  if (gov.violations() > 0) {
    ctx.err << fmt::format("error: {} compliance violation(s)\n", gov.violations());
    return kExitInvariantViolation;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs
{
  std::string scenario;
  std::string out_dir;
  GovernorOverrides overrides;
  std::optional<std::uint64_t> seed;
  bool gnuplot = false;
};

constexpr const char * kGnuplotScript =
  "set datafile commentschars '#'\n"
  "set xlabel 'x [m]'\n"
  "set ylabel 'y [m]'\n"
  "set size ratio -1\n"
  "set cblabel 'speed [m/s]'\n"
  "plot 'trajectory.dat' using 1:2:3 with lines palette title 'path', \\\n"
  "     'humans.dat' using 1:2 with points pt 7 ps 2 title 'humans'\n";

int cmd_simulate(Context & ctx, const SimulateArgs & a)
{
  ctx.manifest.inputs.push_back(a.scenario);
  auto scenario = sim::load_scenario(a.scenario);
  if (!a.overrides.config_path.empty() || !a.overrides.mode.empty() || a.overrides.f_star ||
    !a.overrides.body_region.empty())
  {
    scenario.governor = a.overrides.apply(scenario.governor);
  }
  if (a.seed) {
    scenario.seed = *a.seed;
  }
  ctx.manifest.config = {
    {"governor", governor::governor_config_to_json(scenario.governor)},
    {"seed", scenario.seed},
    {"profile", nlohmann::json::parse(fit::serialize_profile(scenario.profile).dump())},
  };

  const auto result = sim::run_scenario(scenario);
  const fs::path out_dir = a.out_dir;
  fs::create_directories(out_dir);
  const auto csv = sim::trajectory_csv(result);
  write_text(out_dir / "trajectory.csv", csv);
  auto summary = sim::summary_to_json(result.summary);
  summary["scenario"] = scenario.name;
  summary["trajectory_hash"] = fmt::format("{:016x}", sim::fnv1a64(csv));
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  ctx.manifest.outputs.push_back((out_dir / "trajectory.csv").string());
  ctx.manifest.outputs.push_back((out_dir / "summary.json").string());

  if (a.gnuplot) {
    write_text(out_dir / "trajectory.dat", sim::trajectory_plot_data(result));
    std::string humans = "# x_m y_m\n";
    for (const auto & h : scenario.humans) {
      humans += fmt::format("{:.6f} {:.6f}\n", h.x(), h.y());
    }
    write_text(out_dir / "humans.dat", humans);
    write_text(out_dir / "trajectory.gp", kGnuplotScript);
    for (const char * f : {"trajectory.dat", "humans.dat", "trajectory.gp"}) {
      ctx.manifest.outputs.push_back((out_dir / f).string());
    }
  }

  const auto & s = result.summary;
  ctx.out << fmt::format(
    "{}: {} steps, v_force {:.3f} m/s, {} zone entries, max settle {:.3f} s (bound {:.3f} s), "
    "violations: compliance {} settle {} force {}\n",
    scenario.name, s.steps, s.v_force, s.zone_entries, s.max_settle_time_s, s.settle_bound_s,
    s.compliance_violations, s.settle_violations + s.transient_violations, s.force_violations);
  if (s.compliance_violations > 0 || s.settle_violations > 0 || s.transient_violations > 0 ||
    s.force_violations > 0)
  {
    return kExitInvariantViolation;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs
{
  std::vector<std::string> inputs;
  std::string out;
};

std::string mean_std(const impact::MetricStats & s, double scale, int digits)
{
  if (s.std) {
    return fmt::format("{:.{}f} ± {:.{}f}", s.mean * scale, digits, *s.std * scale, digits);
  }
  return fmt::format("{:.{}f}", s.mean * scale, digits);
}

std::string render_report(
  const std::vector<impact::ConfigurationSummary> & summaries,
  const std::vector<fit::AirframeProfile> & profiles)
{
  std::string md = "# Impact test report\n\n";
  if (!summaries.empty()) {
    md += "## Experimental results\n\n";
    md += "| Configuration | n | F_max (N) | Δt_J (ms) | J (N·s) | EC_i (J) | EC_r (%) |\n";
    md += "|---|---:|---:|---:|---:|---:|---:|\n";
    for (const auto & s : summaries) {
      md += fmt::format(
        "| {} | {} | {} | {} | {} | {} | {} |\n", s.configuration, s.n, mean_std(s.f_max, 1.0, 1),
        mean_std(s.dt_j, 1e3, 1), mean_std(s.j, 1.0, 3), mean_std(s.ec_i, 1.0, 2),
        mean_std(s.ec_r, 100.0, 1));
    }
    md += "\nValues are mean ± sample standard deviation over trials.\n\n";
  }
  if (!profiles.empty()) {
    md += "## Fit diagnostics\n\n";
    md += "| Profile | Degree | R² | MAE | Speed domain (m/s) | Δt (ms) | Downgraded |\n";
    md += "|---|---:|---:|---:|---|---:|---|\n";
    for (const auto & p : profiles) {
      const auto & r = p.restitution;
      md += fmt::format(
        "| {} | {} | {:.4f} | {:.4g} | {:.2f} to {:.2f} | {:.1f} | {} |\n", p.name, r.degree,
        r.r_squared, r.mae, r.domain_min, r.domain_max, p.dt_s * 1e3,
        p.restitution_downgraded ? "yes" : "no");
    }
    md += "\nR² and MAE refer to the restitution ratio fit against approach speed.\n";
  }
  return md;
}

int cmd_report(Context & ctx, const ReportArgs & a)
{
  std::vector<impact::ConfigurationSummary> summaries;
  std::vector<fit::AirframeProfile> profiles;
  std::map<std::string, std::vector<impact::ImpactMetrics>> from_csv;

  for (const auto & p : a.inputs) {
    ctx.manifest.inputs.push_back(p);
    const fs::path path = p;
    if (path.extension() == ".csv") {
      std::ifstream in(path);
      if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + p);
      }
      for (auto & m : impact::read_metrics_csv(in)) {
        from_csv[m.configuration].push_back(std::move(m));
      }
      continue;
    }
    const auto doc = read_json_file(path);
    if (doc.contains("restitution")) {
      auto profile = fit::parse_profile(doc);
      profile.validate();
      profiles.push_back(std::move(profile));
    } else if (doc.contains("metrics")) {
      summaries.push_back(impact::summary_from_json(doc));
    } else {
      throw Error(ErrorCode::InvalidArgument, p + ": neither a summary nor a profile");
    }
  }
  for (const auto & [config, rows] : from_csv) {
    summaries.push_back(impact::aggregate_configuration(rows));
  }
  if (summaries.empty() && profiles.empty()) {
    ctx.err << "error: nothing to report\n";
    return kExitInputError;
  }
  std::stable_sort(summaries.begin(), summaries.end(), [](const auto & l, const auto & r) {
    return l.configuration < r.configuration;
  });

  const auto md = render_report(summaries, profiles);
  if (a.out.empty() || a.out == "-") {
    ctx.out << md;
  } else {
    const fs::path out = a.out;
    if (out.has_parent_path()) {
      fs::create_directories(out.parent_path());
    }
    write_text(out, md);
    ctx.manifest.outputs.push_back(out.string());
    ctx.manifest_path = out.parent_path() / "run_manifest.json";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string> & args, std::istream & in, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Impact-force aware speed governor toolchain", "impact_governor"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto * a_cmd = app.add_subcommand("analyze", "Process trial manifests into metrics and summaries");
  a_cmd->add_option("dir", analyze.dir, "Directory holding trial manifests")->required();
  a_cmd->add_option("--out", analyze.out_dir, "Output directory")->default_val("out");
  a_cmd->add_option("--config", analyze.config_path, "Pipeline options JSON");

  FitArgs fit_args;
  auto * f_cmd = app.add_subcommand("fit", "Build an airframe profile from summaries");
  f_cmd->add_option("summaries", fit_args.summaries, "Summary JSON files")->required();
  f_cmd->add_option("--out", fit_args.out, "Profile path (default stdout)");
  f_cmd->add_option("--configuration", fit_args.configuration, "Configuration to fit");
  f_cmd->add_option("--name", fit_args.name, "Profile name");
  f_cmd->add_option("--degree", fit_args.degree, "Restitution polynomial degree")
    ->check(CLI::Range(0, 6));

  GovernArgs govern;
  auto * g_cmd = app.add_subcommand("govern", "Run the speed governor on a message stream");
  g_cmd->add_option("--profile", govern.profile, "Airframe profile JSON")->required();
  govern.overrides.add_to(*g_cmd);
  auto * g_stdin = g_cmd->add_flag("--stdin", govern.use_stdin, "Read NDJSON from stdin");
  auto * g_udp = g_cmd->add_option("--udp", govern.udp_port, "Serve on this UDP port")
    ->check(CLI::Range(0, 65535));
  g_stdin->excludes(g_udp);
  g_cmd->add_flag("--udp-any", govern.udp_any, "Bind UDP on all interfaces");
  g_cmd->add_option("--compliance", govern.compliance, "Compliance CSV (appended)");
  g_cmd->add_option("--out", govern.out_dir, "Directory for compliance log and run manifest");

  SimulateArgs simulate;
  auto * s_cmd = app.add_subcommand("simulate", "Run a planar scenario through the governor");
  s_cmd->add_option("scenario", simulate.scenario, "Scenario JSON")->required();
  s_cmd->add_option("--out", simulate.out_dir, "Output directory")->default_val("out");
  simulate.overrides.add_to(*s_cmd);
  s_cmd->add_option("--seed", simulate.seed, "Override the scenario seed");
  s_cmd->add_flag("--emit-gnuplot", simulate.gnuplot, "Also write gnuplot data and script");

  ReportArgs report;
  auto * r_cmd = app.add_subcommand("report", "Render summaries and profiles as markdown");
  r_cmd->add_option("inputs", report.inputs, "Metrics CSV, summary or profile JSON");
  r_cmd->add_option("--out", report.out, "Markdown path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion &) {
    out << tool_version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError & e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  Context ctx{in, out, err, make_logger(err), {}, std::nullopt};
  ctx.manifest.started_utc = utc_now();
  int code = kExitOk;
  try {
    if (a_cmd->parsed()) {
      ctx.manifest.subcommand = "analyze";
      ctx.manifest_path = fs::path(analyze.out_dir) / "run_manifest.json";
      code = cmd_analyze(ctx, analyze);
    } else if (f_cmd->parsed()) {
      ctx.manifest.subcommand = "fit";
      code = cmd_fit(ctx, fit_args);
    } else if (g_cmd->parsed()) {
      ctx.manifest.subcommand = "govern";
      if (!govern.use_stdin && !govern.udp_port) {
        err << "error: govern needs --stdin or --udp PORT\n";
        return kExitInputError;
      }
      if (!govern.out_dir.empty()) {
        ctx.manifest_path = fs::path(govern.out_dir) / "run_manifest.json";
      }
      code = cmd_govern(ctx, govern);
    } else if (s_cmd->parsed()) {
      ctx.manifest.subcommand = "simulate";
      ctx.manifest_path = fs::path(simulate.out_dir) / "run_manifest.json";
      code = cmd_simulate(ctx, simulate);
    } else if (r_cmd->parsed()) {
      ctx.manifest.subcommand = "report";
      code = cmd_report(ctx, report);
    }
  } catch (const Error & e) {
    err << "error: " << e.what() << '\n';
    code = exit_code_for(e.code());
  } catch (const std::exception & e) {
    err << "error: " << e.what() << '\n';
    code = kExitRuntimeError;
  }

  if (ctx.manifest_path && fs::is_directory(ctx.manifest_path->parent_path().empty() ? "." : ctx.manifest_path->parent_path())) {
    ctx.manifest.finished_utc = utc_now();
    ctx.manifest.exit_code = code;
    try {
      ctx.manifest.write(*ctx.manifest_path);
    } catch (const Error & e) {
      err << "warning: " << e.what() << '\n';
    }
  }
  return code;
}

}  // namespace impact_governor::cli
