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

#ifndef NVTRAP_TOOLS_PIPELINES_HPP
#define NVTRAP_TOOLS_PIPELINES_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace nvtrap::cli {

/// Files written so far and a small machine-readable summary; filled in
/// as the pipeline runs so a failure still reports partial output.
struct RunRecord {
  std::vector<std::string> outputs;  ///< names relative to the output dir
  nlohmann::json summary = nlohmann::json::object();
};

/// Executes cfg.pipeline, writing into cfg.out_dir.
void run_pipeline(const RunConfig& cfg, RunRecord& record);

struct Diagnostic {
  enum class Level { warning, error };
  Level level = Level::warning;
  std::string message;
};

/// Physical-plausibility checks that need no solves beyond closed forms.
std::vector<Diagnostic> check_plausibility(const RunConfig& cfg);

/// Target Xi curve from a CSV with columns lambda_nm and xi (or xi_mean).
std::vector<std::pair<double, double>> read_xi_target(const std::filesystem::path& path);

}  // namespace nvtrap::cli

#endif  // NVTRAP_TOOLS_PIPELINES_HPP
