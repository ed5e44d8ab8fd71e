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

#include "app.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <fmt/format.h>
#include <openssl/crypto.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <spdlog/version.h>

#include "config.hpp"
#include "output.hpp"
#include "pipelines.hpp"

#ifndef NVTRAP_VERSION
#define NVTRAP_VERSION "unknown"
#endif
#ifndef NVTRAP_YAML_CPP_VERSION
#define NVTRAP_YAML_CPP_VERSION "unknown"
#endif

namespace nvtrap::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string pipeline;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool deterministic = false;
};

void configure_logging() {
  auto logger = spdlog::get("nvtrap");
  if (!logger) {
    logger = spdlog::stderr_color_mt("nvtrap");
    spdlog::set_default_logger(logger);
  }
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("NVTRAP_LOG"); env && *env) {
    level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string_view(env) != "off") {
      level = spdlog::level::info;
      logger->set_level(level);
      spdlog::warn("NVTRAP_LOG='{}' is not a log level; using info", env);
    }
  }
  logger->set_level(level);
}

json versions() {
  return {{"nvtrap", NVTRAP_VERSION},
          {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                                EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"yaml_cpp", NVTRAP_YAML_CPP_VERSION},
          {"spdlog", fmt::format("{}.{}.{}", SPDLOG_VER_MAJOR, SPDLOG_VER_MINOR,
                                 SPDLOG_VER_PATCH)},
          {"fmt", FMT_VERSION},
          {"openssl", OpenSSL_version(OPENSSL_VERSION)},
          {"compiler", __VERSION__}};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Parses the config (or defaults) and applies command-line overrides.
RunConfig resolve(const Options& o, std::string& text) {
  RunConfig cfg;
  if (!o.config.empty()) {
    text = read_text(o.config);
    cfg = parse_config(text, fs::path(o.config).parent_path());
  }
  if (!o.pipeline.empty()) {
    if (!cfg.pipeline.empty() && cfg.pipeline != o.pipeline) {
      throw ConfigError("pipeline: config selects '" + cfg.pipeline +
                        "' but the command line asks for '" + o.pipeline + "'");
    }
    cfg.pipeline = o.pipeline;
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.deterministic) cfg.deterministic = true;
  if (!o.out.empty()) cfg.out_dir = o.out;
  return cfg;
}

int run_command(const Options& o, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::time_t started = std::time(nullptr);
  RunConfig cfg;
  if (!o.out.empty()) cfg.out_dir = o.out;
  std::string text;
  RunRecord record;
  int code = kExitOk;
  std::string message;
  try {
    cfg = resolve(o, text);
    check_pipeline_requirements(cfg);
    run_pipeline(cfg, record);
  } catch (const ConfigError& e) {
    code = kExitConfig;
    message = e.what();
  } catch (const InvalidArgument& e) {
    code = kExitConfig;
    message = e.what();
  } catch (const NumericalError& e) {
    code = kExitNumerical;
    message = e.what();
  } catch (const IoError& e) {
    code = kExitIo;
    message = e.what();
  } catch (const fs::filesystem_error& e) {
    code = kExitIo;
    message = e.what();
  } catch (const std::exception& e) {
    code = kExitNumerical;
    message = e.what();
  }
  if (code != kExitOk) {
    spdlog::error("{}", message);
    out << "error: " << message << "\n";
  }

  static constexpr const char* kStatus[] = {"ok", "", "config_error", "numerical_error",
                                            "io_error"};
  json manifest = {{"tool", "nvtrap"},
                   {"pipeline", cfg.pipeline},
                   {"status", kStatus[code]},
                   {"exit_code", code},
                   {"message", message},
                   {"config_path", o.config},
                   {"config_sha256", sha256_hex(text)},
                   {"seed", cfg.seed},
                   {"workers", cfg.workers},
                   {"deterministic", cfg.deterministic},
                   {"outputs", record.outputs},
                   {"summary", record.summary},
                   {"versions", versions()}};
  if (!cfg.deterministic) {
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started));
    manifest["started_utc"] = stamp;
    manifest["elapsed_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  try {
    write_atomic(cfg.out_dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    spdlog::error("manifest: {}", e.what());
    out << "error: manifest: " << e.what() << "\n";
    if (code == kExitOk) code = kExitIo;
  }
  return code;
}

int validate_command(const Options& o, std::ostream& out) {
  std::string text;
  RunConfig cfg;
  try {
    cfg = resolve(o, text);
  } catch (const IoError& e) {
    out << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  bool failed = false;
  try {
    for (const auto& d : check_plausibility(cfg)) {
      const bool err = d.level == Diagnostic::Level::error;
      failed |= err;
      out << (err ? "error: " : "warning: ") << d.message << "\n";
    }
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    failed = true;
  }
  return failed ? kExitConfig : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out) {
  configure_logging();
  CLI::App app{"Optical trapping of NV-rich nanodiamonds: forces, sweeps, virtual "
               "experiments and Monte Carlo."};
  app.name("nvtrap");
  app.require_subcommand(1);
  std::vector<std::string> names(std::begin(kPipelines), std::end(kPipelines));

  Options o;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("pipeline", o.pipeline, "Pipeline to run; must agree with the config")
        ->check(CLI::IsMember(names));
    sub->add_option("--config", o.config, "Run configuration (YAML or JSON)");
  };
  CLI::App* run = app.add_subcommand("run", "Execute a pipeline");
  add_common(run);
  run->add_option("--out", o.out, "Output directory");
  run->add_option("--seed", o.seed, "Master seed");
  run->add_option("--workers", o.workers, "Worker threads (0: all cores)")
      ->check(CLI::NonNegativeNumber);
  run->add_flag("--deterministic", o.deterministic,
                "Omit wall-clock fields from the manifest");
  CLI::App* validate = app.add_subcommand("validate", "Check a configuration without running it");
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream err;
    const int rc = app.exit(e, out, err);
    out << err.str();
    return rc == 0 ? kExitOk : kExitConfig;
  }
  if (run->parsed()) return run_command(o, out);
  return validate_command(o, out);
}

}  // namespace nvtrap::cli
