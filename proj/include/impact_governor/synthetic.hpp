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

#ifndef IMPACT_GOVERNOR__SYNTHETIC_HPP_
#define IMPACT_GOVERNOR__SYNTHETIC_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "impact_governor/ingest.hpp"

namespace impact_governor::synthetic
{

/// Half-sine force lobe. start_s is measured from contact onset; the peak is
/// relative, the generator scales all lobes so the impulse matches the
/// requested restitution.
struct Lobe
{
  double start_s = 0.0;
  double duration_s = 0.020;
  double relative_peak = 1.0;
};

struct TrialSpec
{
  std::string trial_id = "synthetic";
  std::string configuration = "Synthetic";
  std::string material = "synthetic";
  double mass_kg = 0.25;
  double angle_deg = 0.0;
  double v_in_mps = 5.0;
  double restitution = 0.4;
  std::vector<Lobe> lobes{Lobe{}};
  double force_noise_n = 0.0;  // on the summed force
  double range_noise_m = 0.0;
  double force_rate_hz = ingest::kDefaultForceRateHz;
  double range_rate_hz = ingest::kDefaultRangeRateHz;
  double pre_trigger_s = 0.048;  // whole samples on both default clocks
  double contact_after_trigger_s = 0.25;
  double post_contact_s = 0.25;
  double range_at_contact_m = 0.05;
  double range_clock_origin_s = 12.5;
  std::uint64_t seed = 1;
};

/// Constructed values the pipeline should recover.
struct GroundTruth
{
  double f_max = 0.0;
  double dt_j = 0.0;
  double j = 0.0;
  double ec_i = 0.0;
  double ec_r = 0.0;
  double v_in = 0.0;
  double v_f = 0.0;
};

struct SyntheticTrial
{
  ingest::RawAcquisition raw;
  ingest::TrialMeta meta;
  GroundTruth truth;
};

GroundTruth ground_truth(const TrialSpec & spec);
SyntheticTrial make_trial(const TrialSpec & spec);

/// Writes <id>_force.csv, <id>_range.csv and <id>.json into dir and returns
/// the manifest path.
std::filesystem::path write_trial(const TrialSpec & spec, const std::filesystem::path & dir);

/// The three reference fixtures: plastic (e = 0), elastic (e = 0.4) and a
/// two-lobe contact.
TrialSpec plastic_fixture(std::uint64_t seed = 11);
TrialSpec elastic_fixture(std::uint64_t seed = 12);
TrialSpec two_stage_fixture(std::uint64_t seed = 13);

}  // namespace impact_governor::synthetic

#endif  // IMPACT_GOVERNOR__SYNTHETIC_HPP_
