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

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nvtrap/ensemble_mc.hpp"
#include "nvtrap/units.hpp"

namespace {

namespace mc = nvtrap::mc;
namespace units = nvtrap::units;
using nvtrap::quantum::NVPhotophysics;
using nvtrap::trap::BeamConfig;

constexpr double kNm = units::nm;

mc::PopulationModel frozen_model() {
  mc::PopulationModel m;
  m.size_sd = 0.0;
  m.zpl_means = {639.08 * kNm, 639.08 * kNm};
  m.zpl_sds = {0.0, 0.0};
  m.sigma_sd = 0.0;
  return m;
}

std::vector<double> short_grid() {
  return {633.0 * kNm, 636.0 * kNm, 638.5 * kNm, 639.13 * kNm,
          640.0 * kNm, 642.0 * kNm, 646.0 * kNm};
}

TEST(SampleNanodiamond, ZeroVarianceModelGivesTheMeanCrystal) {
  const auto m = frozen_model();
  const auto mean = mc::mean_nanodiamond(m);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto nd = mc::sample_nanodiamond(m, rng);
    EXPECT_EQ(nd.radius, mean.radius);
    EXPECT_EQ(nd.n_nv, 9500);
    EXPECT_EQ(nd.n_nv, mean.n_nv);
    EXPECT_EQ(nd.zpl_center, mean.zpl_center);
    EXPECT_EQ(nd.zpl_sigma, mean.zpl_sigma);
  }
}

TEST(SampleNanodiamond, DeterministicPerSeed) {
  const auto m = mc::PopulationModel::high_nv();
  const auto a = mc::sample_nanodiamond(m, 99);
  const auto b = mc::sample_nanodiamond(m, 99);
  EXPECT_EQ(a.radius, b.radius);
  EXPECT_EQ(a.n_nv, b.n_nv);
  EXPECT_EQ(a.zpl_center, b.zpl_center);
  EXPECT_NE(a.radius, mc::sample_nanodiamond(m, 100).radius);
}

class PopulationMoments : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto m = mc::PopulationModel::high_nv();
    const double md3 = mc::mean_cubed_diameter(m);
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 100000; ++i) draws_.push_back(mc::sample_nanodiamond(m, rng, md3));
  }
  static std::vector<nvtrap::collective::Nanodiamond> draws_;
};
std::vector<nvtrap::collective::Nanodiamond> PopulationMoments::draws_;

TEST_F(PopulationMoments, MeanSize) {
  double s = 0.0;
  for (const auto& nd : draws_) s += 2.0 * nd.radius;
  EXPECT_NEAR(s / draws_.size() / (150.0 * kNm), 1.0, 0.005);
}

TEST_F(PopulationMoments, MeanNvCount) {
  double s = 0.0;
  for (const auto& nd : draws_) s += nd.n_nv;
  EXPECT_NEAR(s / draws_.size() / 9500.0, 1.0, 0.02);
}

TEST_F(PopulationMoments, ZplCentreAndWidth) {
  double c = 0.0, w = 0.0, wmin = 1.0;
  for (const auto& nd : draws_) {
    const double l = units::wavelength_from_angular(nd.zpl_center);
    c += l;
    const double width = nd.zpl_sigma * l * l / (units::two_pi * units::c);
    w += width;
    wmin = std::min(wmin, width);
  }
  EXPECT_NEAR(c / draws_.size() / kNm, 639.08, 0.01);
  // Truncated-normal mean: mu + sd phi(a) / (1 - Phi(a)).
  const double a = (0.2 - 1.82) / 0.55;
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(units::two_pi);
  const double tail = 0.5 * std::erfc(a / std::sqrt(2.0));
  EXPECT_NEAR(w / draws_.size() / kNm / (1.82 + 0.55 * phi / tail), 1.0, 0.005);
  EXPECT_GE(wmin, 0.2 * kNm * (1.0 - 1e-12));
}

TEST(NvCount, VolumeLawQuadrature) {
  // Normal third moment mu^3 + 3 mu sd^2; scipy truncnorm gives the 20 nm cut correction.
  auto m = mc::PopulationModel::high_nv();
  const double mu = 150.0 * kNm, sd = 23.0 * kNm;
  const double ed3 = mu * mu * mu + 3.0 * mu * sd * sd;
  EXPECT_NEAR(mc::mean_cubed_diameter(m) / ed3, 1.0 + 7.911038713004359e-09, 1e-12);
  m.nv_law = mc::NvLaw::anchored;
  std::mt19937_64 rng(7);
  double s = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += mc::sample_nanodiamond(m, rng).n_nv;
  const double oracle = 9500.0 * ed3 / (mu * mu * mu);
  EXPECT_NEAR(s / n / oracle, 1.0, 0.02);
  EXPECT_GT(oracle, 9500.0 * 1.06);
  EXPECT_EQ(mc::nv_count(m, 150.0 * kNm), 9500);
  m.nv_law = mc::NvLaw::per_volume;
  m.nv_anchor = 2800.0;
  EXPECT_EQ(mc::nv_count(m, 200.0 * kNm), 22400);
}

TEST(QuantileSorted, TypeSeven) {
  EXPECT_NEAR(mc::quantile_sorted({1.0, 2.0, 3.0, 4.0}, 0.05), 1.15, 1e-14);
  EXPECT_NEAR(mc::quantile_sorted({1.0, 2.0, 3.0, 4.0}, 0.95), 3.85, 1e-14);
  std::vector<double> v{3.0, -1.0, 7.0, 2.0, 2.5};
  std::sort(v.begin(), v.end());
  EXPECT_NEAR(mc::quantile_sorted(v, 0.05), -0.4, 1e-14);
  EXPECT_NEAR(mc::quantile_sorted(v, 0.5), 2.5, 1e-14);
  EXPECT_NEAR(mc::quantile_sorted(v, 0.95), 6.2, 1e-14);
}

TEST(RunMc, PreconditionsAreChecked) {
  const NVPhotophysics phys = NVPhotophysics::defaults();
  mc::MCConfig cfg;
  cfg.wavelengths = short_grid();
  cfg.n_trials = 99;
  cfg.mode = nvtrap::trap::QuantumMode::independent;
  EXPECT_THROW(mc::run_mc(mc::PopulationModel::high_nv(), phys, BeamConfig{}, cfg),
               nvtrap::InvalidArgument);
  cfg.n_trials = 100;
  cfg.mode = nvtrap::trap::QuantumMode::collective;
  EXPECT_THROW(mc::run_mc(mc::PopulationModel::high_nv(), phys, BeamConfig{}, cfg),
               nvtrap::InvalidArgument);
}

TEST(RunMc, IdenticalCrystalsGiveZeroWidthBand) {
  const NVPhotophysics phys = NVPhotophysics::defaults();
  mc::MCConfig cfg;
  cfg.wavelengths = short_grid();
  cfg.n_trials = 100;
  cfg.mode = nvtrap::trap::QuantumMode::independent;
  const auto r = mc::run_mc(frozen_model(), phys, BeamConfig{}, cfg);
  for (std::size_t i = 0; i < r.wavelengths.size(); ++i) {
    EXPECT_EQ(r.lo90[i], r.mean[i]);
    EXPECT_EQ(r.hi90[i], r.mean[i]);
    EXPECT_EQ(r.skewness[i], 0.0);
  }
  EXPECT_EQ(r.n_failed, 0);
}

TEST(RunMc, ReproducibleAndIndependentOfWorkerCount) {
  const NVPhotophysics phys = NVPhotophysics::defaults();
  mc::MCConfig cfg;
  cfg.wavelengths = short_grid();
  cfg.n_trials = 200;
  cfg.seed = 5;
  cfg.mode = nvtrap::trap::QuantumMode::independent;
  const auto a = mc::run_mc(mc::PopulationModel::high_nv(), phys, BeamConfig{}, cfg);
  cfg.workers = 3;
  const auto b = mc::run_mc(mc::PopulationModel::high_nv(), phys, BeamConfig{}, cfg);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.skewness, b.skewness);
  cfg.seed = 6;
  const auto c = mc::run_mc(mc::PopulationModel::high_nv(), phys, BeamConfig{}, cfg);
  EXPECT_NE(a.samples, c.samples);
  for (std::size_t i = 0; i < a.wavelengths.size(); ++i) {
    EXPECT_LE(a.lo90[i], a.mean[i]);
    EXPECT_LE(a.mean[i], a.hi90[i]);
  }
}

TEST(SummarizeTrials, FailurePolicy) {
  mc::MCConfig cfg;
  cfg.wavelengths = {1.0, 2.0};
  std::vector<std::optional<std::vector<double>>> trials;
  for (int t = 0; t < 200; ++t) trials.emplace_back(std::vector<double>{0.1 * t, -0.1 * t});
  trials[17].reset();
  trials[150].reset();
  const auto ok = mc::summarize_trials(trials, cfg);
  EXPECT_EQ(ok.n_trials, 200);
  EXPECT_EQ(ok.n_failed, 2);
  EXPECT_EQ(ok.samples.size(), 198u);
  trials[3].reset();
  EXPECT_THROW(mc::summarize_trials(trials, cfg), nvtrap::NumericalError);
}

class CollectiveMcTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    phys_ = NVPhotophysics::defaults();
    table_ = std::make_unique<nvtrap::collective::StiffnessTable>(
        phys_, mc::table_spec_for(phys_, BeamConfig{}, nvtrap::trap::default_wavelength_grid()));
  }
  static void TearDownTestSuite() { table_.reset(); }

  static mc::MCConfig config() {
    mc::MCConfig cfg;
    cfg.table = table_.get();
    return cfg;
  }

  static NVPhotophysics phys_;
  static std::unique_ptr<nvtrap::collective::StiffnessTable> table_;
};
NVPhotophysics CollectiveMcTest::phys_;
std::unique_ptr<nvtrap::collective::StiffnessTable> CollectiveMcTest::table_;

TEST_F(CollectiveMcTest, BandCoverageSelfTest) {
  auto cfg = config();
  cfg.wavelengths = short_grid();
  cfg.seed = 11;
  const auto band = mc::run_mc(mc::PopulationModel::high_nv(), phys_, BeamConfig{}, cfg);
  cfg.seed = 12;
  const auto fresh = mc::run_mc(mc::PopulationModel::high_nv(), phys_, BeamConfig{}, cfg);
  for (std::size_t i = 0; i < cfg.wavelengths.size(); ++i) {
    if (cfg.wavelengths[i] == cfg.lambda_ref) continue;
    int inside = 0;
    for (const auto& s : fresh.samples) inside += s[i] >= band.lo90[i] && s[i] <= band.hi90[i];
    EXPECT_NEAR(inside / double(fresh.samples.size()), 0.90, 0.04) << cfg.wavelengths[i];
  }
}

TEST_F(CollectiveMcTest, MeanXiCrossesZeroAtReference) {
  auto cfg = config();
  cfg.n_trials = 200;
  const auto r = mc::run_mc(mc::PopulationModel::high_nv(), phys_, BeamConfig{}, cfg);
  const auto ref = std::find(r.wavelengths.begin(), r.wavelengths.end(), cfg.lambda_ref) -
                   r.wavelengths.begin();
  EXPECT_EQ(r.mean[ref], 0.0);
  EXPECT_LT(r.mean[ref - 1], 0.0);
  EXPECT_GT(r.mean[ref + 1], 0.0);
}

TEST_F(CollectiveMcTest, GrainWidthSelfConsistency) {
  auto cfg = config();
  const auto model = mc::PopulationModel::high_nv();
  const std::vector<double> widths{
      units::angular_rate(50.0 * units::GHz), units::angular_rate(75.0 * units::GHz),
      units::angular_rate(100.0 * units::GHz), units::angular_rate(150.0 * units::GHz),
      units::angular_rate(200.0 * units::GHz)};
  cfg.grain_width = widths[2];
  const auto target = mc::mean_xi_curve(model, phys_, BeamConfig{}, cfg);
  const auto fit = mc::fit_grain_width(target, widths, model, phys_, BeamConfig{}, cfg);
  EXPECT_EQ(fit.best_width, widths[2]);
  ASSERT_EQ(fit.objective.size(), widths.size());
  EXPECT_EQ(fit.objective[2].second, 0.0);
  for (std::size_t c = 0; c < widths.size(); ++c) {
    if (c != 2) EXPECT_GT(fit.objective[c].second, 0.0);
  }
  const auto single = mc::fit_grain_width(target, {widths[0]}, model, phys_, BeamConfig{}, cfg);
  EXPECT_EQ(single.best_width, widths[0]);
  EXPECT_GT(single.objective[0].second, 0.0);
  EXPECT_THROW(mc::fit_grain_width(target, {}, model, phys_, BeamConfig{}, cfg),
               nvtrap::InvalidArgument);
}

}  // namespace
