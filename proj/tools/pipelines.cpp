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

#include "pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "nvtrap/parallel.hpp"
#include "nvtrap/rng.hpp"
#include "nvtrap/stiffness_table.hpp"
#include "nvtrap/trace_io.hpp"
#include "output.hpp"

namespace nvtrap::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Display values are rounded so decimal inputs print as written.
double to_nm(double m) { return std::round(m / units::nm * 1e9) / 1e9; }
double to_ghz(double angular) { return std::round(angular / units::two_pi / units::GHz * 1e9) / 1e9; }

void emit(const RunConfig& cfg, RunRecord& rec, const std::string& name,
          std::string_view content) {
  write_atomic(cfg.out_dir / name, content);
  rec.outputs.push_back(name);
  spdlog::info("wrote {}", (cfg.out_dir / name).string());
}

trap::SweepOptions sweep_options(const RunConfig& cfg,
                                 const collective::StiffnessTable* table) {
  trap::SweepOptions so;
  so.collective = cfg.collective;
  so.table = table;
  so.workers = resolve_workers(cfg.workers);
  so.chromatic_slope = cfg.chromatic_slope;
  so.chromatic_anchor = cfg.lambda_ref;
  return so;
}

std::unique_ptr<collective::StiffnessTable> maybe_table(const RunConfig& cfg,
                                                        const std::vector<double>& wavelengths) {
  if (cfg.mode != trap::QuantumMode::collective || cfg.solver != Solver::table) return nullptr;
  spdlog::info("building stiffness table over {} wavelengths", wavelengths.size());
  return std::make_unique<collective::StiffnessTable>(
      cfg.phys, mc::table_spec_for(cfg.phys, cfg.beam, wavelengths), cfg.collective,
      resolve_workers(cfg.workers));
}

void run_forces(const RunConfig& cfg, RunRecord& rec) {
  const auto& f = cfg.forces;
  quantum::DriveField field = trap::drive_field(cfg.beam.at(f.wavelength));
  CsvWriter csv({"x_m", "force_analytic_n", "force_coherence_n", "potential_j"});
  for (int i = 0; i < f.points; ++i) {
    field.x = f.x_min + (f.x_max - f.x_min) * i / (f.points - 1);
    csv.cell(field.x)
        .cell(quantum::dipole_force_analytic(cfg.phys, field))
        .cell(quantum::dipole_force_from_coherence(cfg.phys, field))
        .cell(quantum::dipole_potential_analytic(cfg.phys, field));
    csv.end_row();
  }
  emit(cfg, rec, "forces.csv", csv.str());
  rec.summary["wavelength_nm"] = to_nm(f.wavelength);
  rec.summary["points"] = f.points;
}

void run_sweep(const RunConfig& cfg, RunRecord& rec) {
  const auto table = maybe_table(cfg, cfg.wavelengths);
  const auto so = sweep_options(cfg, table.get());
  const auto curve = trap::total_stiffness_curve(cfg.crystal, cfg.phys, cfg.beam, cfg.wavelengths,
                                                 cfg.mode, cfg.grain_width, so);
  const auto base = trap::total_stiffness_curve(cfg.crystal, cfg.phys, cfg.beam,
                                                cfg.wavelengths, trap::QuantumMode::none,
                                                cfg.grain_width, so);
  const auto high = trap::ratio_curve(curve, cfg.lambda_ref);
  const auto xi = trap::xi_curve(high, trap::ratio_curve(base, cfg.lambda_ref));
  CsvWriter csv({"wavelength_nm", "kappa_cl", "kappa_q", "kappa_tot", "ratio", "xi"});
  for (std::size_t i = 0; i < curve.size(); ++i) {
    csv.cell(to_nm(curve[i].wavelength))
        .cell(curve[i].kappa_cl)
        .cell(curve[i].kappa_q)
        .cell(curve[i].kappa_tot)
        .cell(high.ratios[i])
        .cell(xi[i].second);
    csv.end_row();
  }
  emit(cfg, rec, "sweep.csv", csv.str());
  rec.summary["peak_abs_xi"] = trap::peak_abs_xi(xi);
  rec.summary["points"] = curve.size();
}

struct TraceRow {
  double lambda_blue = 0.0;
  double lambda_red = 0.0;
  analysis::RatioSample sample;
};

CsvWriter ratio_csv(const std::vector<TraceRow>& rows) {
  CsvWriter csv({"trace", "lambda_blue_nm", "lambda_red_nm", "f660_start_hz", "f_blue_hz",
                 "f_ref_hz", "f_red_hz", "f660_end_hz", "r_blue", "r_red", "accepted",
                 "reason"});
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const auto& s = rows[t].sample;
    csv.cell(static_cast<long long>(t))
        .cell(to_nm(rows[t].lambda_blue))
        .cell(to_nm(rows[t].lambda_red))
        .cell(s.f.start)
        .cell(s.f.blue)
        .cell(s.f.ref)
        .cell(s.f.red)
        .cell(s.f.end)
        .cell(s.r_blue)
        .cell(s.r_red)
        .cell(static_cast<long long>(s.accepted))
        .cell(std::string_view(analysis::to_string(s.reason)));
    csv.end_row();
  }
  return csv;
}

json ratio_stats(const RunConfig& cfg, const std::vector<TraceRow>& rows, RunRecord& rec) {
  std::vector<analysis::TaggedRatio> tagged;
  std::size_t failures = 0;
  for (const auto& r : rows) {
    const auto reason = r.sample.reason;
    if (reason == analysis::Rejection::fit_failure ||
        reason == analysis::Rejection::degenerate_reference) {
      ++failures;
      spdlog::warn("trace dropped ({}): {}", analysis::to_string(reason), r.sample.message);
      continue;
    }
    const bool rejected = reason == analysis::Rejection::ten_percent;
    tagged.push_back({r.lambda_blue, r.sample.r_blue, rejected});
    tagged.push_back({r.lambda_red, r.sample.r_red, rejected});
  }
  if (tagged.empty()) {
    throw NumericalError("no trace produced usable corner frequencies");
  }
  json out = json::array();
  for (const auto& w : analysis::summarize_by_wavelength(tagged, cfg.lof)) {
    out.push_back({{"lambda_nm", to_nm(w.lambda)},
                   {"mean", w.stats.mean},
                   {"se", w.stats.se},
                   {"skewness", w.stats.skewness},
                   {"n_kept", w.n_kept},
                   {"n_rejected_10pct", w.n_rejected_10pct},
                   {"n_rejected_lof", w.n_rejected_lof}});
  }
  rec.summary["traces"] = rows.size();
  rec.summary["dropped_traces"] = failures;
  return out;
}

void emit_ratio_outputs(const RunConfig& cfg, RunRecord& rec, const std::vector<TraceRow>& rows) {
  emit(cfg, rec, "ratio_samples.csv", ratio_csv(rows).str());
  emit(cfg, rec, "ratio_stats.json", ratio_stats(cfg, rows, rec).dump(2) + "\n");
}

void run_virtual_experiment(const RunConfig& cfg, RunRecord& rec) {
  const auto& e = cfg.experiment;
  std::vector<double> all{e.lambda_660, cfg.lambda_ref};
  for (double o : e.offsets) {
    all.push_back(cfg.lambda_ref - o);
    all.push_back(cfg.lambda_ref + o);
  }
  const auto table = maybe_table(cfg, all);
  trap::SweepOptions so = sweep_options(cfg, table.get());
  so.workers = 1;
  const mc::PopulationModel& pop = cfg.population;
  const double mean_d3 = e.sample_population ? mc::mean_cubed_diameter(pop) : 0.0;

  const std::size_t per = static_cast<std::size_t>(e.traces_per_offset);
  const std::size_t n = e.offsets.size() * per;
  std::vector<TraceRow> rows(n);
  std::vector<std::array<double, 5>> kappas(n);
  std::vector<collective::Nanodiamond> crystals(n);
  const int digits = std::max<int>(4, static_cast<int>(std::to_string(n - 1).size()));
  parallel_for(n, resolve_workers(cfg.workers), [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(cfg.seed, t);
    collective::Nanodiamond nd = cfg.crystal;
    if (e.sample_population) {
      std::mt19937_64 rng = make_rng(seed, 2);
      nd = mc::sample_nanodiamond(pop, rng, mean_d3);
    }
    const double o = e.offsets[t / per];
    const std::array<double, 5> lambdas{e.lambda_660, cfg.lambda_ref - o, cfg.lambda_ref,
                                        cfg.lambda_ref + o, e.lambda_660};
    for (std::size_t s = 0; s < 5; ++s) {
      kappas[t][s] = trap::stiffness_at(nd, cfg.phys, cfg.beam.at(lambdas[s]), cfg.mode,
                                        cfg.grain_width, so)
                         .kappa_tot;
    }
    const auto acq = brownian::simulate_trace(kappas[t], nd.radius, e.env, e.sim, seed);
    if (e.write_traces == TraceDump::all || (e.write_traces == TraceDump::first && t == 0)) {
      const bool bin = e.trace_format == TraceFormat::binary;
      const std::string name =
          fmt::format("traces/trace_{:0{}}.{}", t, digits, bin ? "bin" : "csv");
      write_atomic(cfg.out_dir / name, [&](std::ostream& os) {
        bin ? brownian::write_trace_binary(os, acq) : brownian::write_trace_csv(os, acq);
      });
    }
    rows[t] = {lambdas[1], lambdas[3], analysis::extract_ratios(acq, cfg.analysis)};
    crystals[t] = nd;
  });
  if (e.write_traces != TraceDump::none) {
    const bool bin = e.trace_format == TraceFormat::binary;
    const std::size_t dumped = e.write_traces == TraceDump::all ? n : 1;
    for (std::size_t t = 0; t < dumped; ++t) {
      rec.outputs.push_back(fmt::format("traces/trace_{:0{}}.{}", t, digits, bin ? "bin" : "csv"));
    }
  }

  CsvWriter truth({"trace", "radius_m", "n_nv", "kappa_660_start", "kappa_blue", "kappa_ref",
                   "kappa_red", "kappa_660_end", "f_c_ref_hz"});
  for (std::size_t t = 0; t < n; ++t) {
    truth.cell(static_cast<long long>(t))
        .cell(crystals[t].radius)
        .cell(static_cast<long long>(crystals[t].n_nv));
    for (double k : kappas[t]) truth.cell(k);
    truth.cell(brownian::corner_frequency_truth(
        kappas[t][2], brownian::drag_coefficient(crystals[t].radius, e.env), e.sim.convention));
    truth.end_row();
  }
  emit(cfg, rec, "segment_stiffness.csv", truth.str());
  emit_ratio_outputs(cfg, rec, rows);
}

void run_analyze(const RunConfig& cfg, RunRecord& rec) {
  std::vector<TraceRow> rows(cfg.analyze_inputs.size());
  parallel_for(rows.size(), resolve_workers(cfg.workers), [&](std::size_t i) {
    const auto& in = cfg.analyze_inputs[i];
    const auto acq = brownian::read_trace_file(in.path.string());
    rows[i] = {in.lambda_blue, in.lambda_red, analysis::extract_ratios(acq, cfg.analysis)};
  });
  emit_ratio_outputs(cfg, rec, rows);
}

mc::MCConfig mc_config(const RunConfig& cfg, const collective::StiffnessTable* table) {
  mc::MCConfig m;
  m.wavelengths = cfg.wavelengths;
  m.lambda_ref = cfg.lambda_ref;
  m.grain_width = cfg.grain_width;
  m.mode = cfg.mode;
  m.n_trials = cfg.n_trials;
  m.seed = cfg.seed;
  m.workers = resolve_workers(cfg.workers);
  m.table = table;
  m.sweep = sweep_options(cfg, nullptr);
  m.sample_noise_sd = cfg.sample_noise_sd;
  return m;
}

void run_mc(const RunConfig& cfg, RunRecord& rec) {
  const auto table = maybe_table(cfg, cfg.wavelengths);
  const auto r = mc::run_mc(cfg.population, cfg.phys, cfg.beam, mc_config(cfg, table.get()));
  CsvWriter csv({"lambda_nm", "xi_mean", "xi_lo90", "xi_hi90", "skewness"});
  json rows = json::array();
  for (std::size_t i = 0; i < r.wavelengths.size(); ++i) {
    csv.cell(to_nm(r.wavelengths[i]))
        .cell(r.mean[i])
        .cell(r.lo90[i])
        .cell(r.hi90[i])
        .cell(r.skewness[i]);
    csv.end_row();
    rows.push_back({{"lambda_nm", to_nm(r.wavelengths[i])},
                    {"mean", r.mean[i]},
                    {"lo90", r.lo90[i]},
                    {"hi90", r.hi90[i]},
                    {"skewness", r.skewness[i]},
                    {"n_trials", r.samples.size()}});
  }
  emit(cfg, rec, "mc.csv", csv.str());
  const json doc = {{"seed", r.seed},
                    {"n_trials", r.n_trials},
                    {"n_failed", r.n_failed},
                    {"grain_width_ghz", to_ghz(r.grain_width)},
                    {"lambda_ref_nm", to_nm(cfg.lambda_ref)},
                    {"wavelengths", rows}};
  emit(cfg, rec, "mc.json", doc.dump(2) + "\n");
  rec.summary["n_trials"] = r.n_trials;
  rec.summary["n_failed"] = r.n_failed;
}

void run_fit_grain(const RunConfig& cfg, RunRecord& rec) {
  const auto target = read_xi_target(cfg.fit_target);
  RunConfig local = cfg;
  local.wavelengths.clear();
  std::vector<double> values;
  bool has_ref = false;
  for (const auto& [lambda, xi] : target) {
    const bool is_ref = std::abs(lambda - cfg.lambda_ref) < 1e-6 * units::nm;
    has_ref |= is_ref;
    local.wavelengths.push_back(is_ref ? cfg.lambda_ref : lambda);
    values.push_back(xi);
  }
  if (!has_ref) {
    // Xi vanishes at the reference by construction, so a zero target there
    // adds nothing to the objective.
    const auto pos = std::lower_bound(local.wavelengths.begin(), local.wavelengths.end(),
                                      cfg.lambda_ref) - local.wavelengths.begin();
    local.wavelengths.insert(local.wavelengths.begin() + pos, cfg.lambda_ref);
    values.insert(values.begin() + pos, 0.0);
  }
  const auto table = maybe_table(local, local.wavelengths);
  const auto fit = mc::fit_grain_width(values, cfg.fit_candidates, cfg.population, cfg.phys,
                                       cfg.beam, mc_config(local, table.get()));
  CsvWriter csv({"grain_width_ghz", "sse"});
  json objective = json::array();
  for (const auto& [w, sse] : fit.objective) {
    csv.cell(to_ghz(w)).cell(sse);
    csv.end_row();
    objective.push_back({{"grain_width_ghz", to_ghz(w)}, {"sse", sse}});
  }
  emit(cfg, rec, "fit_grain.csv", csv.str());
  emit(cfg, rec, "fit_grain.json",
       json{{"best_width_ghz", to_ghz(fit.best_width)}, {"objective", objective}}.dump(2) +
           "\n");
  rec.summary["best_width_ghz"] = to_ghz(fit.best_width);
}

}  // namespace

std::vector<std::pair<double, double>> read_xi_target(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open target '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("target '" + path.string() + "' is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string h; std::getline(ss, h, ',');) {
      if (!h.empty() && h.back() == '\r') h.pop_back();
      header.push_back(h);
    }
  }
  const auto col = [&](std::initializer_list<std::string_view> names) -> long {
    for (auto n : names) {
      const auto it = std::find(header.begin(), header.end(), n);
      if (it != header.end()) return it - header.begin();
    }
    return -1;
  };
  const long cl = col({"lambda_nm", "wavelength_nm"});
  const long cx = col({"xi", "xi_mean"});
  if (cl < 0 || cx < 0) {
    throw IoError("target '" + path.string() + "' needs lambda_nm and xi columns");
  }
  std::vector<std::pair<double, double>> out;
  for (std::size_t row = 2; std::getline(in, line); ++row) {
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (static_cast<long>(cells.size()) <= std::max(cl, cx)) {
      throw IoError(fmt::format("{}:{}: too few columns", path.string(), row));
    }
    try {
      out.emplace_back(std::stod(cells[cl]) * units::nm, std::stod(cells[cx]));
    } catch (const std::exception&) {
      throw IoError(fmt::format("{}:{}: not a number", path.string(), row));
    }
  }
  if (out.empty()) throw IoError("target '" + path.string() + "' has no rows");
  std::sort(out.begin(), out.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].first == out[i - 1].first) {
      throw IoError("target '" + path.string() + "' repeats a wavelength");
    }
  }
  return out;
}

void run_pipeline(const RunConfig& cfg, RunRecord& record) {
  check_pipeline_requirements(cfg);
  spdlog::info("pipeline {} -> {}", cfg.pipeline, cfg.out_dir.string());
  if (cfg.pipeline == "forces") {
    run_forces(cfg, record);
  } else if (cfg.pipeline == "sweep") {
    run_sweep(cfg, record);
  } else if (cfg.pipeline == "virtual-experiment") {
    run_virtual_experiment(cfg, record);
  } else if (cfg.pipeline == "analyze") {
    run_analyze(cfg, record);
  } else if (cfg.pipeline == "mc") {
    run_mc(cfg, record);
  } else if (cfg.pipeline == "fit-grain") {
    run_fit_grain(cfg, record);
  }
}

std::vector<Diagnostic> check_plausibility(const RunConfig& cfg) {
  std::vector<Diagnostic> out;
  const auto warn = [&](std::string m) { out.push_back({Diagnostic::Level::warning, std::move(m)}); };
  const auto error = [&](std::string m) { out.push_back({Diagnostic::Level::error, std::move(m)}); };
  try {
    check_pipeline_requirements(cfg);
  } catch (const ConfigError& e) {
    error(e.what());
  }

  std::vector<double> lambdas = cfg.wavelengths;
  if (cfg.pipeline == "forces") lambdas = {cfg.forces.wavelength};
  if (cfg.pipeline == "virtual-experiment") {
    lambdas = {cfg.experiment.lambda_660, cfg.lambda_ref};
    for (double o : cfg.experiment.offsets) {
      lambdas.push_back(cfg.lambda_ref - o);
      lambdas.push_back(cfg.lambda_ref + o);
    }
  }
  const double lambda_min = *std::min_element(lambdas.begin(), lambdas.end());
  const bool uses_population =
      cfg.pipeline == "mc" || cfg.pipeline == "fit-grain" ||
      (cfg.pipeline == "virtual-experiment" && cfg.experiment.sample_population);
  const double radius = uses_population ? 0.5 * cfg.population.size_mean : cfg.crystal.radius;
  if (!trap::rayleigh_regime(radius, cfg.beam.at(lambda_min))) {
    warn(fmt::format("{}: radius {:.4g} nm exceeds the Rayleigh bound lambda/4 = {:.4g} nm",
                     uses_population ? "population.size_mean" : "crystal.diameter",
                     to_nm(radius), to_nm(0.25 * lambda_min)));
  }

  if (cfg.pipeline == "virtual-experiment") {
    const auto& e = cfg.experiment;
    const double steps = e.sim.segment_duration / e.sim.dt;
    if (std::abs(steps - std::round(steps)) > 1e-6 * steps) {
      error(fmt::format("experiment.segment_duration: {:.6g} s is not a multiple of dt = {:.6g} s",
                        e.sim.segment_duration, e.sim.dt));
    } else if (static_cast<double>(cfg.analysis.welch.segment_length) > std::round(steps)) {
      warn(fmt::format("analysis.welch_segment: {} exceeds the {} samples per segment",
                       cfg.analysis.welch.segment_length, std::llround(steps)));
    }
    if (e.sim.integrator == brownian::Integrator::euler_maruyama) {
      // Classical stiffness bounds the trap; the quantum part is a small correction.
      double kmax = 0.0;
      for (double l : lambdas) {
        kmax = std::max(kmax, trap::classical_stiffness(radius, cfg.beam.at(l), cfg.phys.n_host));
      }
      if (e.sim.step_time >= 0.0) kmax *= std::max(1.0, e.sim.step_factor);
      const double beta = brownian::drag_coefficient(radius, e.env);
      const double bound = brownian::max_stable_dt(kmax, beta, e.sim);
      if (e.sim.dt > bound) {
        warn(fmt::format("experiment.dt: {:.4g} s exceeds the stability bound {:.4g} s", e.sim.dt,
                         bound));
      }
    }
  }
  if (cfg.pipeline == "fit-grain" && cfg.fit_candidates.size() < 3) {
    warn("fit_grain.candidates: fewer than 3 widths cannot bracket a minimum");
  }
  if (cfg.pipeline == "analyze") {
    for (std::size_t i = 0; i < cfg.analyze_inputs.size(); ++i) {
      if (!fs::exists(cfg.analyze_inputs[i].path)) {
        error(fmt::format("analyze.inputs[{}].path: '{}' does not exist", i,
                          cfg.analyze_inputs[i].path.string()));
      }
    }
  }
  return out;
}

}  // namespace nvtrap::cli
