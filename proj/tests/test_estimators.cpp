#include <gtest/gtest.h>

#include <cmath>

#include "srm/distributions.hpp"
#include "srm/errors.hpp"
#include "srm/estimators.hpp"
#include "srm/normal.hpp"

namespace srm {
namespace {

Eigen::VectorXd normals(Eigen::Index n, std::uint64_t seed) { return sample(ModelSpec::normal(), n, {seed, 0}).values; }

KernelEstimatorConfig fixed(double b) {
  KernelEstimatorConfig c;
  c.rule = BandwidthRule::Fixed;
  c.bandwidth = b;
  return c;
}

TEST(EmpiricalSrm, ConstantReturns) {
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(50, 0.013);
  for (const auto& s : {RiskSpectrum::exponential(5.0), RiskSpectrum::expected_shortfall(0.05), RiskSpectrum::power_low(0.5)})
    EXPECT_NEAR(empirical_srm(x, s).point, -0.013, 1e-16);
}

TEST(EmpiricalSrm, UniformSpectrumIsMeanLoss) {
  Eigen::VectorXd x(3);
  x << -3.0, -1.0, 2.0;
  EXPECT_NEAR(empirical_srm(x, RiskSpectrum::expected_shortfall(1.0)).point, 2.0 / 3.0, 1e-15);
  EstimateOptions opts;
  opts.sign = SignConvention::Return;
  EXPECT_NEAR(empirical_srm(x, RiskSpectrum::expected_shortfall(1.0), opts).point, -2.0 / 3.0, 1e-15);
}

TEST(EmpiricalSrm, EsIsTailMean) {
  Eigen::VectorXd losses = Eigen::VectorXd::LinSpaced(100, 1.0, 100.0);
  // Top 5 losses of 1..100.
  EXPECT_NEAR(empirical_srm_loss(losses, RiskSpectrum::expected_shortfall(0.05)), 98.0, 1e-12);
}

TEST(EmpiricalSrm, TranslationAndHomogeneity) {
  const Eigen::VectorXd x = normals(257, 1);
  const auto s = RiskSpectrum::exponential(5.0);
  const double base = empirical_srm(x, s).point;
  EXPECT_NEAR(empirical_srm((x.array() + 0.75).matrix(), s).point, base - 0.75, 1e-13);
  EXPECT_NEAR(empirical_srm(3.0 * x, s).point, 3.0 * base, 1e-13);
  EXPECT_EQ(empirical_srm(4.0 * x, s).point, 4.0 * base);
}

TEST(EmpiricalSrm, WithinBootstrapErrorOfTruth) {
  const Eigen::VectorXd x = normals(500, 2);
  const auto s = RiskSpectrum::exponential(5.0);
  const double point = empirical_srm_loss(x, s);
  Substream rng({2, 1});
  Eigen::VectorXd reps(1000);
  Eigen::VectorXd resample(500);
  for (Eigen::Index r = 0; r < reps.size(); ++r) {
    for (Eigen::Index i = 0; i < 500; ++i) resample[i] = x[rng.below(500)];
    reps[r] = empirical_srm_loss(resample, s);
  }
  const double se = std::sqrt((reps.array() - reps.mean()).square().sum() / (reps.size() - 1));
  EXPECT_LT(std::abs(point - true_srm(ModelSpec::normal(), s, 1e-10).value), 3.0 * se);
}

TEST(EmpiricalSrm, BetaMonotone) {
  const Eigen::VectorXd x = normals(300, 3);
  double prev = -INFINITY;
  for (double beta : {0.5, 1.0, 5.0, 10.0, 20.0, 100.0, 200.0}) {
    const double v = empirical_srm(x, RiskSpectrum::exponential(beta)).point;
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(KernelSrm, ConstantReturnsAnyBandwidth) {
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(40, 0.02);
  // The smoothed law is -0.02 + bZ: value -0.02 + b rho(N(0,1)) up to the clipped tail, and within 5b.
  for (double b : {1e-3, 0.1, 2.0}) {
    const double v = kernel_srm(x, RiskSpectrum::exponential(5.0), fixed(b)).point;
    EXPECT_LE(std::abs(v + 0.02), 5.0 * b) << b;
    EXPECT_NEAR(v, -0.02 + b * 1.08156867255395, 5e-5 * b) << b;
    EXPECT_NEAR(kernel_srm(x, RiskSpectrum::expected_shortfall(1.0), fixed(b)).point, -0.02, 1e-9) << b;
  }
  // Swanepoel rule on zero-scale data: the constant, with a warning.
  const auto r = kernel_srm(x, RiskSpectrum::exponential(5.0));
  EXPECT_NEAR(r.point, -0.02, 1e-12);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(KernelSrm, UniformSpectrumIsMeanLoss) {
  Eigen::VectorXd x(3);
  x << -3.0, -1.0, 2.0;
  EXPECT_NEAR(kernel_srm(x, RiskSpectrum::expected_shortfall(1.0), fixed(0.5)).point, 2.0 / 3.0, 1e-4);
}

TEST(KernelSrm, CloseToTruthAtLargeN) {
  const Eigen::VectorXd x = normals(2000, 4);
  const auto s = RiskSpectrum::exponential(1.0);
  const auto model = ModelSpec::normal();
  const auto var = asymptotic_variance(AsymptoticSpec::for_model(model, s));
  const double sd = std::sqrt(var.sigma2 / 2000.0);
  // Loss-side: draws are losses, so negate to feed them as returns.
  const double estimate = kernel_srm((-x).eval(), s).point;
  EXPECT_LT(std::abs(estimate - true_srm(model, s, 1e-10).value), 3.0 * sd);
}

TEST(KernelSrm, QuadratureStableUnderRefinement) {
  const Eigen::VectorXd x = normals(300, 5);
  for (const auto& s : {RiskSpectrum::exponential(5.0), RiskSpectrum::expected_shortfall(0.05)}) {
    auto base = fixed(0.4);
    auto fine = base;
    fine.clip = base.clip / 2.0;
    fine.layout.panels = base.layout.panels * 2;
    const double a = kernel_srm(x, s, base).point;
    const double b = kernel_srm(x, s, fine).point;
    EXPECT_LT(std::abs(a - b), 1e-5 * std::abs(a)) << to_string(s);
    EXPECT_LT(kernel_srm_loss(x, s, base).refinement_delta, 1e-6);
  }
}

TEST(KernelSrm, TranslationEquivarianceFixedBandwidth) {
  const Eigen::VectorXd x = normals(200, 6);
  const auto s = RiskSpectrum::exponential(10.0);
  const double base = kernel_srm(x, s, fixed(0.3)).point;
  EXPECT_NEAR(kernel_srm((x.array() + 1.5).matrix(), s, fixed(0.3)).point, base - 1.5, 1e-9);
}

TEST(KernelSrm, HomogeneityWithScaledBandwidth) {
  const Eigen::VectorXd x = normals(200, 7);
  const auto s = RiskSpectrum::exponential(5.0);
  const double base = kernel_srm(x, s, fixed(0.3)).point;
  EXPECT_NEAR(kernel_srm(2.5 * x, s, fixed(0.75)).point, 2.5 * base, 1e-9);
}

TEST(KernelSrm, BetaMonotone) {
  const Eigen::VectorXd x = 0.01 * normals(400, 8);
  double prev = -INFINITY;
  EstimateOptions opts;
  opts.units = Units::Percent;
  for (double beta : {1.0, 5.0, 10.0, 20.0, 100.0, 200.0}) {
    const double v = kernel_srm(x, RiskSpectrum::exponential(beta), {}, opts).point;
    EXPECT_GT(v, prev) << beta;
    prev = v;
  }
}

TEST(KernelSrm, PercentUnitsScaleData) {
  const Eigen::VectorXd x = 0.01 * normals(250, 9);
  EstimateOptions pct;
  pct.units = Units::Percent;
  const auto s = RiskSpectrum::exponential(5.0);
  const auto r = kernel_srm(x, s, {}, pct);
  const auto direct = kernel_srm((100.0 * x).eval(), s);
  EXPECT_DOUBLE_EQ(r.point, direct.point);
  EXPECT_DOUBLE_EQ(*r.bandwidth, *direct.bandwidth);
  EXPECT_EQ(r.units, Units::Percent);
}

TEST(KernelSrm, ReportCarriesProvenance) {
  const auto r = kernel_srm(normals(50, 10), RiskSpectrum::exponential(1.0));
  EXPECT_EQ(r.provenance.version, kVersion);
  EXPECT_EQ(r.provenance.config_hash.size(), 16u);
  EXPECT_EQ(r.provenance.config_hash, fnv1a_hex(r.provenance.config));
  EXPECT_TRUE(r.bandwidth.has_value());
}

TEST(KernelSrm, RejectsBadConfig) {
  EXPECT_THROW(kernel_srm(normals(50, 11), RiskSpectrum::exponential(1.0), fixed(0.0)), ParameterError);
  EXPECT_THROW(kernel_srm(Eigen::VectorXd::Zero(1), RiskSpectrum::exponential(1.0)), ParameterError);
}

TEST(KernelSrm, CltIntervalAttached) {
  EstimateOptions opts;
  opts.clt_interval = true;
  const auto r = kernel_srm(normals(300, 12), RiskSpectrum::exponential(5.0), {}, opts);
  ASSERT_TRUE(r.ci.has_value());
  EXPECT_EQ(r.ci->method, "clt");
  EXPECT_LT(r.ci->lo, r.point);
  EXPECT_GT(r.ci->hi, r.point);
  EXPECT_NEAR(r.ci->hi - r.point, r.point - r.ci->lo, 1e-12);
}

TEST(AsymptoticVariance, ZeroWeight) {
  const auto v = asymptotic_variance(AsymptoticSpec::from_functions([](double) { return 0.0; }, [](double u) { return u; }));
  EXPECT_EQ(v.sigma2, 0.0);
}

TEST(AsymptoticVariance, UniformIdentityIsOneTwelfth) {
  const auto v = asymptotic_variance(AsymptoticSpec::from_functions([](double) { return 1.0; }, [](double u) { return u; }));
  EXPECT_NEAR(v.sigma2, 1.0 / 12.0, 1e-6);
  EXPECT_LT(std::abs(v.difference), 1e-6);
}

TEST(AsymptoticVariance, NormalExponentialAgainstQuadrature) {
  // Independent x-space quadrature: sigma^2 = int int J(F(x)) J(F(y)) (F(min) - F F) dx dy.
  const auto s = RiskSpectrum::exponential(5.0);
  const int m = 1600;
  const double lo = -9.0, hi = 9.0, h = (hi - lo) / m;
  std::vector<double> F(m), w(m);
  for (int i = 0; i < m; ++i) {
    const double x = lo + (i + 0.5) * h;
    F[i] = normal_cdf(x);
    w[i] = phi(s, F[i]) * h;
  }
  double oracle = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) oracle += w[i] * w[j] * (F[std::min(i, j)] - F[i] * F[j]);
  const auto v = asymptotic_variance(AsymptoticSpec::for_model(ModelSpec::normal(), s));
  EXPECT_NEAR(v.sigma2, oracle, 2e-3 * oracle);
  EXPECT_TRUE(v.clipped);
}

TEST(AsymptoticVariance, GarchHasNoAnalyticSpec) {
  EXPECT_THROW(AsymptoticSpec::for_model(ModelSpec::garch(0.061, 0.932, 0.007), RiskSpectrum::exponential(1.0)),
               UnsupportedQuantileError);
}

TEST(CltInterval, Examples) {
  auto [lo0, hi0] = clt_interval(1.25, 0.0, 50, 0.9);
  EXPECT_EQ(lo0, 1.25);
  EXPECT_EQ(hi0, 1.25);
  auto [lo, hi] = clt_interval(0.0, 1.0, 100, 0.90);
  EXPECT_NEAR(hi, 0.164485362695147, 1e-12);
  EXPECT_NEAR(lo, -0.164485362695147, 1e-12);
  auto [lo95, hi95] = clt_interval(0.0, 1.0, 100, 0.95);
  EXPECT_LT(lo95, lo);
  EXPECT_GT(hi95, hi);
  EXPECT_THROW(clt_interval(0.0, -1.0, 100, 0.9), ParameterError);
  EXPECT_THROW(clt_interval(0.0, 1.0, 100, 1.0), ParameterError);
}

TEST(Parsing, EnumsRoundTrip) {
  EXPECT_EQ(parse_units("daily %"), Units::Percent);
  EXPECT_EQ(parse_units(to_string(Units::Raw)), Units::Raw);
  EXPECT_EQ(parse_sign(to_string(SignConvention::Return)), SignConvention::Return);
  EXPECT_EQ(parse_estimator(to_string(EstimatorKind::Empirical)), EstimatorKind::Empirical);
  EXPECT_THROW(parse_sign("gain"), ParameterError);
}

}  // namespace
}  // namespace srm
