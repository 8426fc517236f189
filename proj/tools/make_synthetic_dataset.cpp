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

// Writes the synthetic bench dataset: the three reference fixtures plus a
// speed sweep for one airframe configuration.

#include <cmath>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "impact_governor/synthetic.hpp"

namespace syn = impact_governor::synthetic;

int main(int argc, char ** argv)
{
  CLI::App app{"Generate the synthetic trial dataset"};
  std::string out = "data/synthetic";
  std::uint64_t seed = 2026;
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Base seed");
  CLI11_PARSE(app, argc, argv);

  const std::filesystem::path root = out;
  try {
    syn::write_trial(syn::plastic_fixture(seed + 1), root / "fixtures");
    syn::write_trial(syn::elastic_fixture(seed + 2), root / "fixtures");
    syn::write_trial(syn::two_stage_fixture(seed + 3), root / "fixtures");

    // Restitution falls off with speed; the second lobe mimics arm flex.
    const double speeds[] = {3.0, 4.0, 5.0, 6.0, 7.0};
    int k = 0;
    for (double v : speeds) {
      syn::TrialSpec s;
      s.trial_id = fmt::format("carbon_v{:.0f}", v);
      s.configuration = "Synthetic-carbon";
      s.material = "carbon";
      s.mass_kg = 0.27;
      s.v_in_mps = v;
      s.restitution = 0.46 - 0.02 * v;
      s.lobes = {syn::Lobe{0.0, 0.022, 1.0}, syn::Lobe{0.026, 0.010, 0.35}};
      s.force_noise_n = 0.5;
      s.range_noise_m = 0.002;
      s.seed = seed + 100 + static_cast<std::uint64_t>(k++);
      syn::write_trial(s, root / "carbon");
    }
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cout << "wrote " << root.string() << '\n';
  return 0;
}
