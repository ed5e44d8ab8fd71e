// Copyright 2026 The nvtrap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NVTRAP_TOOLS_CONFIG_HPP
#define NVTRAP_TOOLS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nvtrap/brownian_sim.hpp"
#include "nvtrap/collective_spin.hpp"
#include "nvtrap/ensemble_mc.hpp"
#include "nvtrap/quantum_core.hpp"
#include "nvtrap/trace_analysis.hpp"
#include "nvtrap/trap_model.hpp"

namespace nvtrap::cli {

/// Schema violation; the message starts with the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kPipelines[] = {
    "forces", "sweep", "virtual-experiment", "analyze", "mc", "fit-grain"};

enum class Dimension { length, power, frequency, time, temperature, viscosity };

/// Parses "470 nm", "4mW", "100 GHz" into SI. Frequencies come back as
/// angular rates (rad/s). Bare numbers are rejected.
double parse_quantity(std::string_view text, Dimension dim, const std::string& path);

enum class Solver { table, exact };
enum class TraceDump { none, first, all };
enum class TraceFormat { csv, binary };

struct ForcesBlock {
  double wavelength = 638.0 * units::nm;
  double x_min = -1000.0 * units::nm;
  double x_max = 1000.0 * units::nm;
  int points = 201;
};

struct ExperimentBlock {
  std::vector<double> offsets{1.0 * units::nm, 2.0 * units::nm, 4.0 * units::nm};
  int traces_per_offset = 10;
  bool sample_population = false;
  double lambda_660 = 660.0 * units::nm;
  brownian::SimulationConfig sim;
  brownian::FluidEnvironment env;
  TraceDump write_traces = TraceDump::none;
  TraceFormat trace_format = TraceFormat::binary;

  ExperimentBlock() { sim.convention = brownian::StiffnessConvention::quadratic; }
};

struct AnalyzeInput {
  std::filesystem::path path;
  double lambda_blue = 0.0;
  double lambda_red = 0.0;
};

struct RunConfig {
  std::string pipeline;
  std::uint64_t seed = 1;
  int workers = 1;
  bool deterministic = false;
  std::filesystem::path out_dir = "nvtrap_out";

  quantum::NVPhotophysics phys = quantum::NVPhotophysics::defaults();
  trap::BeamConfig beam;
  double chromatic_slope = 0.0;  ///< 1/m

  collective::Nanodiamond crystal{75.0 * units::nm, 9500,
                                  units::angular_from_wavelength(639.08 * units::nm),
                                  0.0};

  trap::QuantumMode mode = trap::QuantumMode::collective;
  double grain_width = units::angular_rate(100.0 * units::GHz);
  Solver solver = Solver::table;
  collective::CollectiveOptions collective;

  std::vector<double> wavelengths = trap::default_wavelength_grid();
  double lambda_ref = 639.13 * units::nm;

  mc::PopulationModel population = mc::PopulationModel::high_nv();
  int n_trials = 1000;
  double sample_noise_sd = 0.0;

  ForcesBlock forces;
  ExperimentBlock experiment;

  analysis::AnalysisOptions analysis;
  analysis::LofOptions lof;
  std::vector<AnalyzeInput> analyze_inputs;

  std::filesystem::path fit_target;
  std::vector<double> fit_candidates;

  RunConfig();
};

/// Parses YAML (JSON is accepted as a YAML subset). Relative input paths
/// resolve against `base_dir`; output.dir stays relative to the working
/// directory. Unknown keys, missing required
/// keys and malformed values raise ConfigError.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Reads and parses a file; unreadable files raise IoError.
RunConfig load_config(const std::filesystem::path& path);

/// Cross-field checks that need the whole document (pipeline name, inputs
/// required by the selected pipeline). Raises ConfigError.
void check_pipeline_requirements(const RunConfig& cfg);

}  // namespace nvtrap::cli

#endif  // NVTRAP_TOOLS_CONFIG_HPP
