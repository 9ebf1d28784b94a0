#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "srm/distributions.hpp"
#include "srm/errors.hpp"
#include "srm/normal.hpp"

namespace srm {
namespace {

// Closed-form t4 CDF, independent of the library's incomplete-beta path.
double t4_cdf(double t) { return 0.5 + t * (t * t + 6.0) / (2.0 * std::pow(t * t + 4.0, 1.5)); }

double t4_pdf(double t) { return 3.0 / (8.0 * std::pow(1.0 + t * t / 4.0, 2.5)); }

double bisect(const std::function<double(double)>& f, double target, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double ks_to(std::vector<double> x, const std::function<double(double)>& F) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = F(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

TEST(Quantile, NormalMedianIsZero) { EXPECT_NEAR(quantile(ModelSpec::normal(), 0.5), 0.0, 1e-15); }

TEST(Quantile, GpdMedianMatchesClosedFormAndCdfInversion) {
  const auto gpd = ModelSpec::gpd(1.0 / 3.0);
  const double closed = 3.0 * (std::cbrt(2.0) - 1.0);
  EXPECT_NEAR(quantile(gpd, 0.5), closed, 1e-14);
  EXPECT_NEAR(closed, 0.77976, 1e-5);
  const double inverted = bisect([&](double x) { return 1.0 - std::pow(1.0 + x / 3.0, -3.0); }, 0.5, 0.0, 10.0);
  EXPECT_NEAR(quantile(gpd, 0.5), inverted, 1e-12);
}

TEST(Quantile, StudentT4AtNinetyFive) {
  const auto t4 = ModelSpec::student_t(4.0);
  const double q = quantile(t4, 0.95);
  const double root = bisect(t4_cdf, 0.95, 0.0, 50.0);
  EXPECT_NEAR(q, root, 1e-10);
  EXPECT_NEAR(q, 2.13184678632665, 1e-10);
  EXPECT_NEAR(cdf(t4, q), 0.95, 1e-12);
}

TEST(Quantile, StudentT4AgainstLargeSample) {
  const auto t4 = ModelSpec::student_t(4.0);
  const Eigen::Index n = 10'000'000;
  auto x = sample(t4, n, {7, 0}).values;
  const auto k = static_cast<Eigen::Index>(std::ceil(0.95 * n)) - 1;
  std::nth_element(x.data(), x.data() + k, x.data() + n);
  const double q = quantile(t4, 0.95);
  const double se = std::sqrt(0.95 * 0.05 / n) / t4_pdf(q);
  EXPECT_LT(std::abs(x[k] - q), 3.0 * se);
}

TEST(Quantile, NondecreasingOnGrid) {
  for (const auto& m : {ModelSpec::normal(), ModelSpec::student_t(4.0), ModelSpec::gpd(1.0 / 3.0)}) {
    double prev = -INFINITY;
    for (int k = 1; k < 10000; ++k) {
      const double q = quantile(m, k / 10000.0);
      EXPECT_GE(q, prev);
      prev = q;
    }
  }
}

TEST(Quantile, RejectsLevelsOutsideOpenInterval) {
  EXPECT_THROW(quantile(ModelSpec::normal(), 0.0), ParameterError);
  EXPECT_THROW(quantile(ModelSpec::normal(), 1.0), ParameterError);
}

TEST(Quantile, GarchHasNoClosedForm) {
  EXPECT_THROW(quantile(ModelSpec::garch(0.061, 0.932, 0.007), 0.5), UnsupportedQuantileError);
}

TEST(Sample, NormalMean) {
  const auto x = sample(ModelSpec::normal(), 1'000'000, {11, 3}).values;
  EXPECT_LT(std::abs(x.mean()), 4.0 / 1000.0);
}

TEST(Sample, GpdMedian) {
  auto x = sample(ModelSpec::gpd(1.0 / 3.0), 1'000'000, {11, 4}).values;
  std::nth_element(x.data(), x.data() + 500000, x.data() + x.size());
  EXPECT_NEAR(x[500000], 0.77976, 0.01);
}

TEST(Sample, DeterministicUnderSeedPath) {
  for (const auto& m : {ModelSpec::normal(), ModelSpec::student_t(4.0), ModelSpec::gpd(1.0 / 3.0),
                        ModelSpec::garch(0.061, 0.932, 0.007)}) {
    const auto a = sample(m, 5, {42, 9}).values;
    const auto b = sample(m, 5, {42, 9}).values;
    EXPECT_EQ(a, b);
    EXPECT_NE(a, sample(m, 5, {42, 10}).values);
  }
}

TEST(Sample, MatchesModelCdfInKsDistance) {
  for (const auto& m : {ModelSpec::normal(), ModelSpec::student_t(4.0), ModelSpec::gpd(1.0 / 3.0)}) {
    const auto x = sample(m, 1'000'000, {5, 1}).values;
    EXPECT_LT(ks_to(to_std(x), [&](double v) { return cdf(m, v); }), 0.005) << model_name(m);
  }
}

TEST(Garch, UnconditionalVarianceIsOne) {
  const auto x = simulate_garch(ModelSpec::garch(0.061, 0.932, 0.007), 100000, 500, {3, 0}).values;
  const double var = (x.array() - x.mean()).square().sum() / (x.size() - 1);
  EXPECT_NEAR(var, 1.0, 0.1);
}

TEST(Garch, DegenerateCaseIsIidNormal) {
  const auto x = simulate_garch(ModelSpec::garch(0.0, 0.0, 1.0), 100000, 500, {3, 1}).values;
  EXPECT_LT(ks_to(to_std(x), [](double v) { return normal_cdf(v); }), 0.01);
}

TEST(Garch, ZeroOmegaDecaysToZero) {
  const auto m = ModelSpec::garch(0.061, 0.932, 0.0);
  EXPECT_FALSE(model_warnings(m).empty());
  const auto x = simulate_garch(m, 10000, 0, {3, 2}).values;
  EXPECT_LT(x.tail(100).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TrueSrm, NearUniformSpectrumGivesNormalMean) {
  EXPECT_NEAR(true_srm(ModelSpec::normal(), RiskSpectrum::exponential(1e-9), 1e-12).value, 0.0, 1e-8);
}

// Regression constants from an independent 30-digit quadrature of q(u) phi(u).
TEST(TrueSrm, RegressionConstants) {
  struct Case {
    ModelSpec model;
    double beta;
    double value;
  };
  const std::vector<Case> cases = {
      {ModelSpec::normal(), 1.0, 0.278064026759435},  {ModelSpec::normal(), 5.0, 1.08156867255395},
      {ModelSpec::normal(), 10.0, 1.50448600517646},  {ModelSpec::gpd(1.0 / 3.0), 1.0, 1.98174822974047},
      {ModelSpec::gpd(1.0 / 3.0), 5.0, 3.97439986300187}, {ModelSpec::gpd(1.0 / 3.0), 10.0, 5.75234118758319},
      {ModelSpec::student_t(4.0), 1.0, 0.363458667204894}, {ModelSpec::student_t(4.0), 5.0, 1.45579963254690},
  };
  for (const auto& c : cases) {
    const auto truth = true_srm(c.model, RiskSpectrum::exponential(c.beta), 1e-10);
    EXPECT_NEAR(truth.value, c.value, 1e-9) << model_name(c.model) << " beta=" << c.beta;
    EXPECT_FALSE(truth.approximate);
    EXPECT_LT(truth.refinement_delta, 1e-10);
  }
}

TEST(TrueSrm, GarchUsesFlaggedSampleOracle) {
  OracleOptions opts;
  opts.garch_sample_size = 200000;
  const auto m = ModelSpec::garch(0.061, 0.932, 0.007);
  const auto a = true_srm(m, RiskSpectrum::exponential(1.0), 1e-8, opts);
  EXPECT_TRUE(a.approximate);
  EXPECT_NE(a.provenance.find("seed="), std::string::npos);
  EXPECT_EQ(a.value, true_srm(m, RiskSpectrum::exponential(1.0), 1e-8, opts).value);
  // Unit-variance fat-tailed law: between the Normal value and a loose upper bound.
  EXPECT_GT(a.value, 0.2);
  EXPECT_LT(a.value, 0.5);
}

TEST(ModelSpec, RejectsInvalidParameters) {
  EXPECT_THROW(ModelSpec::student_t(0.0).validate(), ParameterError);
  EXPECT_THROW(ModelSpec::gpd(1.0 / 3.0, -1.0).validate(), ParameterError);
  EXPECT_THROW(ModelSpec::garch(0.5, 0.6, 0.1).validate(), ParameterError);
}

TEST(ModelSpec, ParseRoundTrip) {
  for (const auto& m : {ModelSpec::normal(), ModelSpec::student_t(4.0), ModelSpec::gpd(1.0 / 3.0),
                        ModelSpec::garch(0.061, 0.932, 0.007)})
    EXPECT_EQ(parse_model_config(to_config(m)), m);
}

}  // namespace
}  // namespace srm
