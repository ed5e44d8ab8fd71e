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

#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <yaml-cpp/yaml.h>

namespace nvtrap::cli {
namespace {

struct UnitEntry {
  std::string_view symbol;
  double factor;
};

constexpr UnitEntry kLength[] = {{"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
constexpr UnitEntry kPower[] = {{"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}};
constexpr UnitEntry kFrequency[] = {
    {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}, {"THz", 1e12}};
constexpr UnitEntry kTime[] = {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}};
constexpr UnitEntry kTemperature[] = {{"K", 1.0}};
constexpr UnitEntry kViscosity[] = {
    {"Pa s", 1.0}, {"Pa*s", 1.0}, {"mPa s", 1e-3}, {"mPa*s", 1e-3}, {"cP", 1e-3}};

std::span<const UnitEntry> units_for(Dimension dim) {
  switch (dim) {
    case Dimension::length: return kLength;
    case Dimension::power: return kPower;
    case Dimension::frequency: return kFrequency;
    case Dimension::time: return kTime;
    case Dimension::temperature: return kTemperature;
    case Dimension::viscosity: return kViscosity;
  }
  return {};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

/// A YAML mapping whose keys must all be consumed before finish().
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_.IsDefined() && !node_.IsNull() && !node_.IsMap()) {
      fail(path_.empty() ? "<root>" : path_, "expected a mapping");
    }
  }

  bool has(const std::string& key) const {
    return node_.IsMap() && node_[key].IsDefined() && !node_[key].IsNull();
  }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    return node_.IsMap() ? node_[key] : YAML::Node();
  }

  Section child(const std::string& key) { return Section(raw(key), join(path_, key)); }

  std::string path(const std::string& key) const { return join(path_, key); }

  template <class T>
  T scalar(const std::string& key, T fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    return convert<T>(raw(key), path(key));
  }

  template <class T>
  T required(const std::string& key) {
    if (!has(key)) fail(path(key), "missing required key");
    return convert<T>(raw(key), path(key));
  }

  double quantity(const std::string& key, Dimension dim, double fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    return parse_quantity(convert<std::string>(raw(key), path(key)), dim, path(key));
  }

  double positive(const std::string& key, Dimension dim, double fallback) {
    const double v = quantity(key, dim, fallback);
    if (!(v > 0.0)) fail(path(key), "must be > 0");
    return v;
  }

  std::vector<double> quantity_list(const std::string& key, Dimension dim,
                                    std::vector<double> fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    const YAML::Node n = raw(key);
    if (!n.IsSequence()) fail(path(key), "expected a list");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string p = path(key) + "[" + std::to_string(i) + "]";
      out.push_back(parse_quantity(convert<std::string>(n[i], p), dim, p));
    }
    return out;
  }

  template <class E>
  E choice(const std::string& key, std::initializer_list<std::pair<std::string_view, E>> options,
           E fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    const std::string v = convert<std::string>(raw(key), path(key));
    std::string allowed;
    for (const auto& [name, value] : options) {
      if (v == name) return value;
      allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    }
    fail(path(key), "'" + v + "' is not one of: " + allowed);
  }

  void finish() const {
    if (!node_.IsMap()) return;
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      if (!used_.count(key)) fail(path(key), "unknown key");
    }
  }

  template <class T>
  static T convert(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) fail(path, "expected a scalar value");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(path, "cannot read '" + n.Scalar() + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

template <class T>
T bounded(Section& s, const std::string& key, T fallback, T lo, T hi) {
  const T v = s.scalar<T>(key, fallback);
  if (v < lo || v > hi) {
    std::ostringstream os;
    os << "must lie in [" << lo << ", " << hi << "]";
    fail(s.path(key), os.str());
  }
  return v;
}

void parse_physics(Section s, RunConfig& cfg) {
  using namespace units;
  const double gamma_total = s.positive("gamma_total", Dimension::frequency,
                                        angular_rate(13.0 * MHz));
  const double dw = bounded(s, "debye_waller", 0.04, 1e-9, 1.0);
  const double gamma_ph = s.positive("gamma_phonon", Dimension::frequency,
                                     angular_rate(38.0 * GHz));
  const double gamma_t = s.positive("gamma_transverse", Dimension::frequency,
                                    angular_rate(1.0 * THz));
  const double zpl = s.positive("zpl", Dimension::length, 639.08 * nm);
  const double n_host = bounded(s, "n_host", 2.4, 1e-9, 1e9);
  s.finish();
  if (gamma_t < 0.5 * gamma_total) {
    fail(s.path("gamma_transverse"), "must be >= gamma_total / 2");
  }
  cfg.phys = quantum::NVPhotophysics::from_total_rate(gamma_total, dw, gamma_ph, gamma_t,
                                                      angular_from_wavelength(zpl), n_host);
}

void parse_beam(Section s, RunConfig& cfg) {
  cfg.beam.power = s.positive("power", Dimension::power, cfg.beam.power);
  cfg.beam.w0_ref = s.positive("waist", Dimension::length, cfg.beam.w0_ref);
  cfg.beam.lambda_w0_ref =
      s.positive("waist_reference", Dimension::length, cfg.beam.lambda_w0_ref);
  cfg.beam.waist_law = s.choice<trap::WaistLaw>(
      "waist_law", {{"linear", trap::WaistLaw::linear}, {"constant", trap::WaistLaw::constant}},
      cfg.beam.waist_law);
  cfg.beam.n_medium = bounded(s, "n_medium", cfg.beam.n_medium, 1e-9, 1e9);
  // Relative stiffness change per nm of wavelength.
  cfg.chromatic_slope = s.scalar<double>("chromatic_slope_per_nm", 0.0) / units::nm;
  s.finish();
}

void parse_crystal(Section s, RunConfig& cfg) {
  const double d = s.positive("diameter", Dimension::length, 2.0 * cfg.crystal.radius);
  const long n = s.scalar<long>("n_nv", cfg.crystal.n_nv);
  if (n < 1) fail(s.path("n_nv"), "must be >= 1");
  const double centre = s.positive("zpl_center", Dimension::length,
                                   units::wavelength_from_angular(cfg.crystal.zpl_center));
  const double width = s.quantity("zpl_sigma", Dimension::length, 1.82 * units::nm);
  if (width < 0.0) fail(s.path("zpl_sigma"), "must be >= 0");
  s.finish();
  cfg.crystal.radius = 0.5 * d;
  cfg.crystal.n_nv = n;
  cfg.crystal.zpl_center = units::angular_from_wavelength(centre);
  cfg.crystal.zpl_sigma = units::angular_width_from_wavelength(width, centre);
}

void parse_quantum(Section s, RunConfig& cfg) {
  cfg.mode = s.choice<trap::QuantumMode>("mode",
                                         {{"none", trap::QuantumMode::none},
                                          {"independent", trap::QuantumMode::independent},
                                          {"collective", trap::QuantumMode::collective}},
                                         cfg.mode);
  cfg.grain_width = s.positive("grain_width", Dimension::frequency, cfg.grain_width);
  cfg.solver = s.choice<Solver>("solver", {{"table", Solver::table}, {"exact", Solver::exact}},
                                cfg.solver);
  auto& co = cfg.collective;
  co.n_exact = bounded(s, "n_exact", co.n_exact, 1, co.max_n);
  co.fit_degree = bounded(s, "fit_degree", co.fit_degree, 0, 5);
  co.fit_min_n = bounded(s, "fit_min_n", co.fit_min_n, 1, co.max_n);
  co.dephasing_factor = bounded(s, "dephasing_factor", co.dephasing_factor, 0.0, 1e6);
  if (s.has("sample_grid")) {
    const YAML::Node g = s.raw("sample_grid");
    if (!g.IsSequence() || g.size() == 0) fail(s.path("sample_grid"), "expected a list");
    co.sample_grid.clear();
    for (std::size_t i = 0; i < g.size(); ++i) {
      co.sample_grid.push_back(
          Section::convert<int>(g[i], s.path("sample_grid") + "[" + std::to_string(i) + "]"));
    }
  } else {
    s.raw("sample_grid");
  }
  s.finish();
  try {
    co.validate();
  } catch (const InvalidArgument& e) {
    fail(s.path("sample_grid"), e.what());
  }
  const auto tail = co.tail_grid();
  if (static_cast<int>(tail.size()) <= co.fit_degree) {
    fail(s.path("fit_min_n"), "leaves too few grid points for the tail fit");
  }
}

void parse_wavelengths(Section s, RunConfig& cfg) {
  cfg.lambda_ref = s.positive("reference", Dimension::length, cfg.lambda_ref);
  const bool range = s.has("start") || s.has("stop") || s.has("step");
  if (range && s.has("values")) fail(s.path("values"), "conflicts with start/stop/step");
  if (s.has("values")) {
    cfg.wavelengths = s.quantity_list("values", Dimension::length, {});
    if (cfg.wavelengths.empty()) fail(s.path("values"), "must not be empty");
    for (double l : cfg.wavelengths) {
      if (!(l > 0.0)) fail(s.path("values"), "wavelengths must be > 0");
    }
    std::sort(cfg.wavelengths.begin(), cfg.wavelengths.end());
    if (std::find(cfg.wavelengths.begin(), cfg.wavelengths.end(), cfg.lambda_ref) ==
        cfg.wavelengths.end()) {
      cfg.wavelengths.push_back(cfg.lambda_ref);
      std::sort(cfg.wavelengths.begin(), cfg.wavelengths.end());
    }
  } else if (range) {
    const double start = s.positive("start", Dimension::length, 629.0 * units::nm);
    const double stop = s.positive("stop", Dimension::length, 648.0 * units::nm);
    const double step = s.positive("step", Dimension::length, 0.5 * units::nm);
    if (stop < start) fail(s.path("stop"), "must be >= start");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 100000) fail(s.path("step"), "grid too large");
    cfg.wavelengths.clear();
    for (long k = 0; k < count; ++k) {
      // Rounded to 1e-6 nm so decimal grids stay exact in the output.
      const double nm = (start + step * k) / units::nm;
      cfg.wavelengths.push_back(std::round(nm * 1e6) / 1e6 * units::nm);
    }
    if (std::find(cfg.wavelengths.begin(), cfg.wavelengths.end(), cfg.lambda_ref) ==
        cfg.wavelengths.end()) {
      cfg.wavelengths.push_back(cfg.lambda_ref);
      std::sort(cfg.wavelengths.begin(), cfg.wavelengths.end());
    }
  } else {
    s.raw("values");
    s.raw("start");
    s.raw("stop");
    s.raw("step");
    cfg.wavelengths = trap::default_wavelength_grid(cfg.lambda_ref);
  }
  s.finish();
}

void parse_population(Section s, RunConfig& cfg) {
  auto& p = cfg.population;
  const std::string preset = s.scalar<std::string>("preset", "high_nv");
  if (preset == "high_nv") {
    p = mc::PopulationModel::high_nv();
  } else if (preset == "low_nv") {
    p = mc::PopulationModel::low_nv();
  } else {
    fail(s.path("preset"), "'" + preset + "' is not one of: high_nv, low_nv");
  }
  p.size_mean = s.positive("size_mean", Dimension::length, p.size_mean);
  p.size_sd = s.quantity("size_sd", Dimension::length, p.size_sd);
  p.size_min = s.positive("size_min", Dimension::length, p.size_min);
  p.nv_law = s.choice<mc::NvLaw>("nv_law",
                                 {{"mean_normalised", mc::NvLaw::mean_normalised},
                                  {"anchored", mc::NvLaw::anchored},
                                  {"per_volume", mc::NvLaw::per_volume}},
                                 p.nv_law);
  p.nv_anchor = s.scalar<double>("nv_anchor", p.nv_anchor);
  p.nv_anchor_diameter = s.positive("nv_anchor_diameter", Dimension::length, p.nv_anchor_diameter);
  if (s.has("zpl_weights")) {
    const YAML::Node w = s.raw("zpl_weights");
    if (!w.IsSequence() || w.size() != 2) fail(s.path("zpl_weights"), "expected two numbers");
    for (int c = 0; c < 2; ++c) {
      p.zpl_weights[c] = Section::convert<double>(w[c], s.path("zpl_weights"));
    }
  } else {
    s.raw("zpl_weights");
  }
  for (const char* key : {"zpl_means", "zpl_sds"}) {
    auto& target = std::string_view(key) == "zpl_means" ? p.zpl_means : p.zpl_sds;
    const auto v = s.quantity_list(key, Dimension::length, {target[0], target[1]});
    if (v.size() != 2) fail(s.path(key), "expected two lengths");
    target = {v[0], v[1]};
  }
  p.sigma_mean = s.positive("sigma_mean", Dimension::length, p.sigma_mean);
  p.sigma_sd = s.quantity("sigma_sd", Dimension::length, p.sigma_sd);
  p.sigma_min = s.positive("sigma_min", Dimension::length, p.sigma_min);
  s.finish();
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    fail("population", e.what());
  }
}

void parse_mc(Section s, RunConfig& cfg) {
  cfg.n_trials = bounded(s, "n_trials", cfg.n_trials, 100, 100000000);
  cfg.sample_noise_sd = bounded(s, "sample_noise_sd", cfg.sample_noise_sd, 0.0, 1e9);
  s.finish();
}

void parse_forces(Section s, RunConfig& cfg) {
  auto& f = cfg.forces;
  f.wavelength = s.positive("wavelength", Dimension::length, f.wavelength);
  f.x_min = s.quantity("x_min", Dimension::length, f.x_min);
  f.x_max = s.quantity("x_max", Dimension::length, f.x_max);
  f.points = bounded(s, "points", f.points, 2, 10000000);
  s.finish();
  if (!(f.x_max > f.x_min)) fail(s.path("x_max"), "must exceed x_min");
}

void parse_experiment(Section s, RunConfig& cfg) {
  auto& e = cfg.experiment;
  e.offsets = s.quantity_list("offsets", Dimension::length, e.offsets);
  if (e.offsets.empty()) fail(s.path("offsets"), "must not be empty");
  for (double o : e.offsets) {
    if (!(o > 0.0)) fail(s.path("offsets"), "offsets must be > 0");
  }
  e.traces_per_offset = bounded(s, "traces_per_offset", e.traces_per_offset, 1, 10000000);
  e.sample_population = s.scalar<bool>("sample_population", e.sample_population);
  e.lambda_660 = s.positive("lambda_660", Dimension::length, e.lambda_660);
  e.sim.dt = s.positive("dt", Dimension::time, e.sim.dt);
  e.sim.segment_duration = s.positive("segment_duration", Dimension::time, e.sim.segment_duration);
  e.sim.integrator = s.choice<brownian::Integrator>(
      "integrator",
      {{"euler_maruyama", brownian::Integrator::euler_maruyama},
       {"exact_ou", brownian::Integrator::exact_ou}},
      e.sim.integrator);
  e.sim.convention = s.choice<brownian::StiffnessConvention>(
      "convention",
      {{"hooke", brownian::StiffnessConvention::hooke},
       {"quadratic", brownian::StiffnessConvention::quadratic}},
      e.sim.convention);
  e.sim.measurement_noise = s.quantity("measurement_noise", Dimension::length, 0.0);
  if (e.sim.measurement_noise < 0.0) fail(s.path("measurement_noise"), "must be >= 0");
  if (s.has("step_time")) {
    e.sim.step_time = s.quantity("step_time", Dimension::time, -1.0);
    if (e.sim.step_time < 0.0) fail(s.path("step_time"), "must be >= 0");
  } else {
    s.raw("step_time");
  }
  e.sim.step_factor = bounded(s, "step_factor", e.sim.step_factor, 1e-12, 1e12);
  e.sim.stability_fraction = bounded(s, "stability_fraction", e.sim.stability_fraction, 1e-9, 1.0);
  e.env.temperature = s.positive("temperature", Dimension::temperature, e.env.temperature);
  e.env.viscosity = s.positive("viscosity", Dimension::viscosity, e.env.viscosity);
  e.write_traces = s.choice<TraceDump>(
      "write_traces",
      {{"none", TraceDump::none}, {"first", TraceDump::first}, {"all", TraceDump::all}},
      e.write_traces);
  e.trace_format = s.choice<TraceFormat>(
      "trace_format", {{"csv", TraceFormat::csv}, {"binary", TraceFormat::binary}},
      e.trace_format);
  s.finish();
}

void parse_analysis(Section s, RunConfig& cfg) {
  auto& a = cfg.analysis;
  a.welch.segment_length = bounded<std::size_t>(s, "welch_segment", a.welch.segment_length,
                                                std::size_t{64}, std::size_t{1} << 26);
  if ((a.welch.segment_length & (a.welch.segment_length - 1)) != 0) {
    fail(s.path("welch_segment"), "must be a power of two");
  }
  a.welch.overlap = bounded(s, "welch_overlap", a.welch.overlap, 0.0, 0.95);
  a.window.skip_low_bins = bounded<std::size_t>(s, "skip_low_bins", a.window.skip_low_bins, 0, 1 << 20);
  a.window.max_fraction_of_nyquist =
      bounded(s, "max_fraction_of_nyquist", a.window.max_fraction_of_nyquist, 1e-6, 1.0);
  a.window.max_iterations = bounded(s, "max_iterations", a.window.max_iterations, 1, 1000000);
  a.ten_percent_threshold =
      bounded(s, "ten_percent_threshold", a.ten_percent_threshold, 1e-9, 1e9);
  Section lof = s.child("lof");
  cfg.lof.enabled = lof.scalar<bool>("enabled", cfg.lof.enabled);
  cfg.lof.k = bounded(lof, "k", cfg.lof.k, 1, 100000);
  cfg.lof.threshold = bounded(lof, "threshold", cfg.lof.threshold, 0.0, 1e12);
  lof.finish();
  s.finish();
}

void parse_analyze(Section s, RunConfig& cfg, const std::filesystem::path& base) {
  if (!s.has("inputs")) {
    s.raw("inputs");
    s.finish();
    return;
  }
  const YAML::Node list = s.raw("inputs");
  if (!list.IsSequence()) fail(s.path("inputs"), "expected a list");
  cfg.analyze_inputs.clear();
  for (std::size_t i = 0; i < list.size(); ++i) {
    Section item(list[i], s.path("inputs") + "[" + std::to_string(i) + "]");
    AnalyzeInput in;
    in.path = item.required<std::string>("path");
    if (in.path.is_relative()) in.path = base / in.path;
    for (const char* key : {"lambda_blue", "lambda_red"}) {
      if (!item.has(key)) fail(item.path(key), "missing required key");
    }
    in.lambda_blue = item.positive("lambda_blue", Dimension::length, 0.0);
    in.lambda_red = item.positive("lambda_red", Dimension::length, 0.0);
    item.finish();
    cfg.analyze_inputs.push_back(in);
  }
  s.finish();
}

void parse_fit_grain(Section s, RunConfig& cfg, const std::filesystem::path& base) {
  if (s.has("target")) {
    cfg.fit_target = s.required<std::string>("target");
    if (cfg.fit_target.is_relative()) cfg.fit_target = base / cfg.fit_target;
  } else {
    s.raw("target");
  }
  cfg.fit_candidates = s.quantity_list("candidates", Dimension::frequency, cfg.fit_candidates);
  for (double w : cfg.fit_candidates) {
    if (!(w > 0.0)) fail(s.path("candidates"), "widths must be > 0");
  }
  s.finish();
}

}  // namespace

double parse_quantity(std::string_view text, Dimension dim, const std::string& path) {
  const std::string_view t = trim(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || !std::isfinite(value)) {
    fail(path, "cannot read a number from '" + std::string(text) + "'");
  }
  const std::string_view unit = trim(std::string_view(end, t.data() + t.size() - end));
  std::string allowed;
  for (const auto& u : units_for(dim)) {
    if (unit == u.symbol) {
      const double si = value * u.factor;
      return dim == Dimension::frequency ? units::angular_rate(si) : si;
    }
    allowed += (allowed.empty() ? "" : ", ") + std::string(u.symbol);
  }
  if (unit.empty()) fail(path, "missing unit (one of: " + allowed + ")");
  fail(path, "unknown unit '" + std::string(unit) + "' (one of: " + allowed + ")");
}

RunConfig::RunConfig() {
  crystal.zpl_sigma = units::angular_width_from_wavelength(1.82 * units::nm, 639.08 * units::nm);
  fit_candidates = {units::angular_rate(30.0 * units::GHz), units::angular_rate(50.0 * units::GHz),
                    units::angular_rate(100.0 * units::GHz),
                    units::angular_rate(200.0 * units::GHz),
                    units::angular_rate(300.0 * units::GHz)};
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("<document>: ") + e.what());
  }
  RunConfig cfg;
  Section s(root, "");
  cfg.pipeline = s.scalar<std::string>("pipeline", "");
  cfg.seed = s.scalar<std::uint64_t>("seed", cfg.seed);
  cfg.workers = bounded(s, "workers", cfg.workers, 0, 4096);
  cfg.deterministic = s.scalar<bool>("deterministic", cfg.deterministic);
  {
    Section out = s.child("output");
    if (out.has("dir")) {
      cfg.out_dir = out.required<std::string>("dir");
    } else {
      out.raw("dir");
    }
    out.finish();
  }
  parse_physics(s.child("physics"), cfg);
  parse_beam(s.child("beam"), cfg);
  parse_crystal(s.child("crystal"), cfg);
  parse_quantum(s.child("quantum"), cfg);
  parse_wavelengths(s.child("wavelengths"), cfg);
  parse_population(s.child("population"), cfg);
  parse_mc(s.child("mc"), cfg);
  parse_forces(s.child("forces"), cfg);
  parse_experiment(s.child("experiment"), cfg);
  parse_analysis(s.child("analysis"), cfg);
  parse_analyze(s.child("analyze"), cfg, base_dir);
  parse_fit_grain(s.child("fit_grain"), cfg, base_dir);
  s.finish();
  if (!cfg.pipeline.empty()) check_pipeline_requirements(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

void check_pipeline_requirements(const RunConfig& cfg) {
  if (cfg.pipeline.empty()) fail("pipeline", "missing required key");
  if (std::find(std::begin(kPipelines), std::end(kPipelines), cfg.pipeline) ==
      std::end(kPipelines)) {
    fail("pipeline", "unknown pipeline '" + cfg.pipeline + "'");
  }
  if (cfg.pipeline == "analyze" && cfg.analyze_inputs.empty()) {
    fail("analyze.inputs", "missing required key");
  }
  if (cfg.pipeline == "fit-grain" && cfg.fit_target.empty()) {
    fail("fit_grain.target", "missing required key");
  }
  if ((cfg.pipeline == "mc" || cfg.pipeline == "fit-grain") &&
      cfg.mode == trap::QuantumMode::collective && cfg.solver != Solver::table) {
    fail("quantum.solver", "the " + cfg.pipeline + " pipeline needs solver: table");
  }
}

}  // namespace nvtrap::cli
