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
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nvtrap/brownian_sim.hpp"
#include "nvtrap/trace_analysis.hpp"
#include "nvtrap/units.hpp"

namespace {

namespace an = nvtrap::analysis;
namespace bs = nvtrap::brownian;
namespace units = nvtrap::units;

constexpr double kR = 75e-9;
constexpr double kDt = 1e-5;

double sample_variance(const std::vector<double>& x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / x.size();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// One 10 s trace at a single stiffness (five 2 s segments).
std::vector<double> ou_trace(double fc, std::uint64_t seed,
                             bs::Integrator integ = bs::Integrator::euler_maruyama) {
  const double beta = bs::drag_coefficient(kR, {});
  const double k = bs::kappa_for_corner_frequency(fc, beta);
  bs::SimulationConfig cfg;
  cfg.segment_duration = 2.0;
  cfg.integrator = integ;
  return bs::simulate_trace({k, k, k, k, k}, kR, {}, cfg, seed).samples;
}

an::PowerSpectrum lorentzian_spectrum(double a, double fc, std::size_t bins, double df) {
  an::PowerSpectrum p;
  p.df = df;
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = k * df;
    p.frequency.push_back(f);
    p.power.push_back(a / (f * f + fc * fc));
  }
  return p;
}

TEST(PowerSpectrum, ParsevalOnRandomTraces) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> len(1 << 16, 1 << 18);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = len(rng);
    const double offset = 10.0 * (u(rng) - 0.5);
    const double scale = std::pow(10.0, 4.0 * (u(rng) - 0.5));
    const double rho = 0.5 * u(rng);  // mild colouring
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(n);
    double prev = 0.0;
    for (auto& v : x) {
      prev = rho * prev + g(rng);
      v = offset + scale * prev;
    }
    const auto psd = an::power_spectrum(x, kDt);
    const double total = std::accumulate(psd.power.begin(), psd.power.end(), 0.0) * psd.df;
    EXPECT_NEAR(total / sample_variance(x), 1.0, 0.01) << "trace " << t;
  }
}

TEST(PowerSpectrum, SinusoidPeaksAtItsFrequency) {
  const std::size_t n = 1 << 16;
  const double df = 1.0 / (kDt * 16384);
  for (int bin : {40, 333, 2048}) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(units::two_pi * bin * df * i * kDt);
    const auto psd = an::power_spectrum(x, kDt);
    const auto peak = std::max_element(psd.power.begin(), psd.power.end()) - psd.power.begin();
    EXPECT_EQ(peak, bin);
    EXPECT_NEAR(psd.frequency[peak], bin * df, 1e-9);
  }
}

TEST(PowerSpectrum, WhiteNoiseIsFlat) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> x(1 << 20);
  for (auto& v : x) v = g(rng);
  const auto psd = an::power_spectrum(x, kDt);
  // One-sided level 2 sigma^2 dt, checked in eight bands.
  const std::size_t band = (psd.power.size() - 2) / 8;
  for (int b = 0; b < 8; ++b) {
    double s = 0.0;
    for (std::size_t k = 1 + b * band; k < 1 + (b + 1) * band; ++k) s += psd.power[k];
    EXPECT_NEAR(s / band / (2.0 * 9.0 * kDt), 1.0, 0.02) << "band " << b;
  }
}

TEST(PowerSpectrum, RejectsShortInput) {
  std::vector<double> x((1 << 14) - 1, 1.0);
  EXPECT_THROW(an::power_spectrum(x, kDt), nvtrap::InvalidArgument);
  x.push_back(0.0);
  EXPECT_NO_THROW(an::power_spectrum(x, kDt));
  EXPECT_THROW(an::power_spectrum(x, 0.0), nvtrap::InvalidArgument);
}

TEST(FitLorentzian, RecoversExactLorentzian) {
  for (double fc : {50.0, 400.0, 2500.0}) {
    const double a = 3.7e-17;
    const auto p = lorentzian_spectrum(a, fc, 8193, 1.0 / (kDt * 16384));
    const auto fit = an::fit_lorentzian(p);
    EXPECT_NEAR(fit.f_c / fc, 1.0, 1e-6);
    EXPECT_NEAR(fit.amplitude / a, 1.0, 1e-6);
    EXPECT_LT(fit.fit_residual, 1e-6);
    EXPECT_LE(fit.iterations, 200);
  }
}

TEST(FitLorentzian, FlatSpectrumDoesNotConverge) {
  an::PowerSpectrum p = lorentzian_spectrum(1.0, 1.0, 8193, 6.1);
  std::fill(p.power.begin(), p.power.end(), 2.0e-20);
  EXPECT_THROW(an::fit_lorentzian(p), nvtrap::NumericalError);
}

TEST(FitLorentzian, OrnsteinUhlenbeckKneeWithinFivePercent) {
  const double beta = bs::drag_coefficient(kR, {});
  const double truth = bs::corner_frequency_truth(bs::kappa_for_corner_frequency(400.0, beta), beta);
  std::vector<double> rel;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto x = ou_trace(400.0, 1000 + s);
    rel.push_back(an::fit_lorentzian(an::power_spectrum(x, kDt)).f_c / truth - 1.0);
  }
  EXPECT_LT(std::abs(median(rel)), 0.05);
  EXPECT_LT(std::abs(std::accumulate(rel.begin(), rel.end(), 0.0) / rel.size()), 0.05);
}

// Uses the exact OU update so only the estimator is under test.
TEST(FitLorentzian, MedianUnbiasedWithinTwoPercent) {
  for (double fc : {100.0, 400.0, 1000.0}) {
    std::vector<double> fits;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto x = ou_trace(fc, 2000 + s, bs::Integrator::exact_ou);
      fits.push_back(an::fit_lorentzian(an::power_spectrum(x, kDt)).f_c);
    }
    EXPECT_NEAR(median(fits) / fc, 1.0, 0.02) << "f_c = " << fc;
  }
}

TEST(TenPercentRule, Boundaries) {
  EXPECT_TRUE(an::ten_percent_rule(400.0, 400.0));
  EXPECT_TRUE(an::ten_percent_rule(1.0, 1.0999));
  EXPECT_FALSE(an::ten_percent_rule(1.0, 1.1001));
  EXPECT_TRUE(an::ten_percent_rule(1.0, 0.9001));
  EXPECT_FALSE(an::ten_percent_rule(1.0, 0.8999));
  EXPECT_THROW(an::ten_percent_rule(0.0, 1.0), nvtrap::InvalidArgument);
}

TEST(ExtractRatios, EqualSegmentsGiveUnitRatios) {
  const auto s = an::extract_ratios(an::SegmentFrequencies{300.0, 450.0, 450.0, 450.0, 310.0});
  EXPECT_TRUE(s.accepted);
  EXPECT_DOUBLE_EQ(s.r_blue, 1.0);
  EXPECT_DOUBLE_EQ(s.r_red, 1.0);
}

TEST(ExtractRatios, AlgebraicExactness) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(100.0, 1000.0), v(0.95, 1.05);
  for (int i = 0; i < 1000; ++i) {
    const double s = u(rng), e = s * v(rng);
    const double b = u(rng), r = u(rng), ref = u(rng);
    const auto out = an::extract_ratios(an::SegmentFrequencies{s, b, ref, r, e});
    const double f660 = 0.5 * (s + e);
    EXPECT_NEAR(out.r_blue, (b - f660) / (ref - f660), 1e-12 * std::max(1.0, std::abs(out.r_blue)));
    EXPECT_NEAR(out.r_red, (r - f660) / (ref - f660), 1e-12 * std::max(1.0, std::abs(out.r_red)));
    EXPECT_EQ(out.f660_start, s);
    EXPECT_EQ(out.f660_end, e);
  }
}

TEST(ExtractRatios, DriftAndDegenerateReferenceAreRejected) {
  const auto drift = an::extract_ratios(an::SegmentFrequencies{400.0, 500.0, 600.0, 550.0, 450.0});
  EXPECT_FALSE(drift.accepted);
  EXPECT_EQ(drift.reason, an::Rejection::ten_percent);
  const auto flat = an::extract_ratios(an::SegmentFrequencies{400.0, 500.0, 400.0, 550.0, 400.0});
  EXPECT_FALSE(flat.accepted);
  EXPECT_EQ(flat.reason, an::Rejection::degenerate_reference);
}

TEST(ExtractRatios, EndToEndRecoversStiffnessRatios) {
  const double beta = bs::drag_coefficient(kR, {});
  const double k660 = bs::kappa_for_corner_frequency(400.0, beta);
  const double kb = 0.5 * k660, kref = 1.0 * k660, kr = 0.75 * k660;
  std::vector<double> rb, rr;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto acq = bs::simulate_trace({k660, k660 + kb, k660 + kref, k660 + kr, k660},
                                        kR, {}, {}, 300 + s);
    const auto out = an::extract_ratios(acq);
    ASSERT_TRUE(out.accepted) << out.message;
    rb.push_back(out.r_blue);
    rr.push_back(out.r_red);
  }
  EXPECT_NEAR(median(rb) / (kb / kref), 1.0, 0.07);
  EXPECT_NEAR(median(rr) / (kr / kref), 1.0, 0.07);
}

TEST(ExtractRatios, InjectedStiffnessStepIsRejected) {
  const double beta = bs::drag_coefficient(kR, {});
  const double k = bs::kappa_for_corner_frequency(400.0, beta);
  bs::SimulationConfig cfg;
  cfg.step_time = 25.0;
  cfg.step_factor = 1.2;
  const auto acq = bs::simulate_trace({k, 1.5 * k, 2.0 * k, 1.7 * k, k}, kR, {}, cfg, 77);
  const auto out = an::extract_ratios(acq);
  EXPECT_FALSE(out.accepted);
  EXPECT_EQ(out.reason, an::Rejection::ten_percent);
}

TEST(ExtractRatios, SegmentFitFailureIsARejection) {
  const double k = bs::kappa_for_corner_frequency(400.0, bs::drag_coefficient(kR, {}));
  auto acq = bs::simulate_trace({k, k, k, k, k}, kR, {}, {}, 1);
  const auto& seg = acq.segments[1];
  std::fill(acq.samples.begin() + seg.begin, acq.samples.begin() + seg.end, 0.0);
  const auto out = an::extract_ratios(acq);
  EXPECT_FALSE(out.accepted);
  EXPECT_EQ(out.reason, an::Rejection::fit_failure);
  EXPECT_NE(out.message.find("660_blue"), std::string::npos);
}

std::vector<std::array<double, 2>> sklearn_points() {
  std::vector<std::array<double, 2>> p;
  for (int i = 0; i < 30; ++i) {
    p.push_back({std::sin(1.3 * i) + 0.1 * i, 2.0 * std::cos(0.7 * i * i)});
  }
  p[7][0] += 6.0;
  return p;
}

TEST(LofFilter, MatchesReferenceImplementation) {
  // Scores from scikit-learn's LocalOutlierFactor(n_neighbors=6) on the
  // same points after per-axis standardisation.
  const double expect[30] = {
      1.165855711636022,  0.9435563633970846, 1.4818549956157687, 1.2732269118360342,
      1.2792508255448645, 1.125889102550176,  0.9931202346879092, 2.843617869411599,
      1.0976464151850152, 1.1166246159075601, 0.9762534689068026, 1.0396082255266774,
      0.9660380869794184, 1.1483912131081728, 1.0044206590052158, 1.0623527899662788,
      0.9708205063825203, 1.0253986408549578, 0.9706910662737905, 1.0722176979457714,
      1.0012360052567193, 1.4152604868190564, 0.9854521708793526, 0.9898022150687215,
      1.1571302760143503, 0.9668427955135801, 1.0235048537508433, 1.0834431423590225,
      1.0352615838890082, 1.0168283439877348};
  const auto r = an::lof_filter(sklearn_points());
  for (int i = 0; i < 30; ++i) EXPECT_NEAR(r.scores[i], expect[i], 1e-9 * expect[i]) << i;
  EXPECT_EQ(r.n_removed, 0u);
}

TEST(LofFilter, UniformGridKeepsEverything) {
  std::vector<std::array<double, 2>> p;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) p.push_back({double(i), double(j)});
  }
  const auto r = an::lof_filter(p);
  EXPECT_EQ(r.n_removed, 0u);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool interior = p[i][0] > 2 && p[i][0] < 17 && p[i][1] > 2 && p[i][1] < 17;
    if (interior) EXPECT_NEAR(r.scores[i], 1.0, 1e-12);
    EXPECT_LT(r.scores[i], 1.5);
  }
}

TEST(LofFilter, DisplacedPointIsRemoved) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::array<double, 2>> p;
  for (int i = 0; i < 500; ++i) p.push_back({g(rng), g(rng)});
  p.push_back({100.0 * 0.1, 0.0});  // typical spacing ~0.1
  const auto r = an::lof_filter(p);
  EXPECT_TRUE(r.removed.back());
  EXPECT_EQ(r.n_removed, 1u);
}

TEST(LofFilter, PartitionIsScaleInvariant) {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> e(1.0);
  std::vector<std::array<double, 2>> p;
  for (int i = 0; i < 300; ++i) p.push_back({e(rng), e(rng) * e(rng)});
  const auto base = an::lof_filter(p, 6, 2.0);
  ASSERT_GT(base.n_removed, 0u);
  for (double c : {1e-6, 0.37, 1e4}) {
    auto q = p;
    for (auto& v : q) v = {c * v[0], c * v[1]};
    EXPECT_EQ(an::lof_filter(q, 6, 2.0).removed, base.removed) << c;
  }
}

TEST(LofFilter, DuplicatesAndSmallInputs) {
  std::vector<std::array<double, 2>> p(10, {1.0, 1.0});
  p.push_back({2.0, 3.0});
  const auto r = an::lof_filter(p);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(r.scores[i], 1.0);
  EXPECT_TRUE(r.removed.back());
  EXPECT_THROW(an::lof_filter(std::vector<std::array<double, 2>>(6, {0.0, 0.0})),
               nvtrap::InvalidArgument);
}

TEST(DistributionStats, KnownValues) {
  const std::vector<double> x{1.0, 2.0, 3.0, 10.0};
  const auto s = an::distribution_stats(x);
  EXPECT_DOUBLE_EQ(s.mean, 4.0);
  EXPECT_NEAR(s.se, 2.041241452319315, 1e-14);
  EXPECT_NEAR(s.skewness, 1.763632614803888, 1e-13);  // scipy skew(bias=False)
  const std::vector<double> y{0.5, -1.25, 3.0, 2.0, 7.5, -0.3};
  EXPECT_NEAR(an::distribution_stats(y).skewness, 1.2699119205615808, 1e-13);
}

TEST(DistributionStats, SymmetricConstantAndExponential) {
  const std::vector<double> sym{-3.0, -1.0, 0.0, 1.0, 3.0};
  EXPECT_NEAR(an::distribution_stats(sym).skewness, 0.0, 1e-15);
  const std::vector<double> c(50, 0.1);
  const auto cs = an::distribution_stats(c);
  EXPECT_EQ(cs.skewness, 0.0);
  EXPECT_EQ(cs.se, 0.0);
  std::mt19937_64 rng(10);
  std::exponential_distribution<double> e(0.3);
  std::vector<double> x(100000);
  for (auto& v : x) v = e(rng);
  EXPECT_NEAR(an::distribution_stats(x).skewness, 2.0, 0.1);
}

TEST(SummarizeByWavelength, CountsEachFilter) {
  std::vector<an::TaggedRatio> data;
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 0.01);
  for (int w = 0; w < 3; ++w) {
    for (int i = 0; i < 100; ++i) data.push_back({(630.0 + w) * units::nm, 0.1 * w + g(rng), false});
  }
  data.push_back({631.0 * units::nm, 0.1, true});
  data.push_back({631.0 * units::nm, 25.0, false});
  const auto st = an::summarize_by_wavelength(data);
  ASSERT_EQ(st.size(), 3u);
  EXPECT_EQ(st[1].n_rejected_10pct, 1u);
  EXPECT_EQ(st[1].n_rejected_lof, 1u);
  EXPECT_EQ(st[1].n_kept, 100u);
  EXPECT_EQ(st[0].n_kept + st[0].n_rejected_lof, 100u);
  EXPECT_NEAR(st[2].stats.mean, 0.2, 0.005);
}

}  // namespace
