#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "srm/errors.hpp"
#include "srm/montecarlo.hpp"
#include "srm/normal.hpp"

namespace srm {
namespace {

double median_of(const Eigen::VectorXd& x) {
  std::vector<double> v(x.data(), x.data() + x.size());
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

MseExperimentConfig small_experiment() {
  MseExperimentConfig c;
  c.n = 30;
  c.beta = 1.0;
  c.replicates = 200;
  c.workers = 2;
  return c;
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, 4, [&](Eigen::Index i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsFirstError) {
  EXPECT_THROW(parallel_for(100, 3, [](Eigen::Index i) { if (i == 17) throw std::runtime_error("x"); }),
               std::runtime_error);
}

TEST(MseRatio, IdenticalHooksGiveOne) {
  auto c = small_experiment();
  c.empirical_hook = [](const Eigen::VectorXd& x) { return x.maxCoeff(); };
  c.kernel_hook = c.empirical_hook;
  const auto r = mse_ratio_experiment(c);
  EXPECT_EQ(r.ratio, 1.0);
  EXPECT_EQ(r.mse1, r.mse2);
}

TEST(MseRatio, SwappedEstimatorsGiveReciprocal) {
  auto c = small_experiment();
  const LossEstimator a = [](const Eigen::VectorXd& x) { return median_of(x); };
  const LossEstimator b = [](const Eigen::VectorXd& x) { return x.mean(); };
  c.empirical_hook = a;
  c.kernel_hook = b;
  const auto forward = mse_ratio_experiment(c);
  std::swap(c.empirical_hook, c.kernel_hook);
  const auto backward = mse_ratio_experiment(c);
  EXPECT_EQ(forward.mse1, backward.mse2);
  EXPECT_EQ(forward.mse2, backward.mse1);
  EXPECT_DOUBLE_EQ(forward.ratio * backward.ratio, 1.0);
}

TEST(MseRatio, DeterministicAcrossWorkers) {
  auto c = small_experiment();
  c.replicates = 100;
  c.workers = 1;
  const auto one = mse_ratio_experiment(c);
  c.workers = 3;
  const auto three = mse_ratio_experiment(c);
  EXPECT_EQ(one.mse1, three.mse1);
  EXPECT_EQ(one.mse2, three.mse2);
  EXPECT_EQ(one.ratio, three.ratio);
  EXPECT_GT(one.ratio_se, 0.0);
  EXPECT_NEAR(one.truth, 0.278064026759435, 1e-9);
}

TEST(MseRatio, SuppliedTruthIsUsed) {
  auto c = small_experiment();
  c.truth = 0.5;
  c.empirical_hook = [](const Eigen::VectorXd&) { return 0.0; };
  c.kernel_hook = [](const Eigen::VectorXd&) { return 1.0; };
  const auto r = mse_ratio_experiment(c);
  EXPECT_DOUBLE_EQ(r.mse1, 0.25);
  EXPECT_DOUBLE_EQ(r.mse2, 0.25);
  EXPECT_DOUBLE_EQ(r.bias1, -0.5);
  EXPECT_DOUBLE_EQ(r.bias2, 0.5);
}

TEST(PercentileInterval, OrderStatistics) {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(101 - i);
  const auto [lo, hi] = percentile_interval(v, 0.90);
  EXPECT_EQ(lo, 5.0);
  EXPECT_EQ(hi, 95.0);
}

TEST(Bootstrap, ConstantDataIsDegenerate) {
  BootstrapConfig cfg;
  cfg.replicates = 200;
  cfg.workers = 2;
  const auto r = bootstrap_distribution(Eigen::VectorXd::Constant(40, 0.01), RiskSpectrum::exponential(5.0), cfg);
  EXPECT_NEAR(r.point, -0.01, 1e-12);
  EXPECT_NEAR(r.sd, 0.0, 1e-12);
  ASSERT_TRUE(r.ci.has_value());
  EXPECT_NEAR(r.ci->lo, r.point, 1e-10);
  EXPECT_NEAR(r.ci->hi, r.point, 1e-10);
}

TEST(Bootstrap, DeterministicAcrossWorkerCounts) {
  const Eigen::VectorXd x = sample(ModelSpec::normal(), 150, {50, 0}).values;
  BootstrapConfig cfg;
  cfg.replicates = 300;
  cfg.workers = 1;
  std::vector<double> va, vb;
  const auto a = bootstrap_distribution(x, RiskSpectrum::exponential(5.0), cfg, &va);
  cfg.workers = 4;
  const auto b = bootstrap_distribution(x, RiskSpectrum::exponential(5.0), cfg, &vb);
  EXPECT_EQ(va, vb);
  EXPECT_EQ(a.sd, b.sd);
  EXPECT_EQ(a.ci->lo, b.ci->lo);
  EXPECT_EQ(a.ci->hi, b.ci->hi);
  EXPECT_GT(a.sd, 0.0);
}

TEST(Bootstrap, IntervalBracketsReplicateMedian) {
  const Eigen::VectorXd x = sample(ModelSpec::student_t(4.0), 120, {51, 0}).values;
  for (auto est : {EstimatorKind::Kernel, EstimatorKind::Empirical}) {
    BootstrapConfig cfg;
    cfg.replicates = 400;
    cfg.estimator = est;
    std::vector<double> v;
    const auto r = bootstrap_distribution(x, RiskSpectrum::exponential(10.0), cfg, &v);
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    EXPECT_LE(r.ci->lo, v[v.size() / 2]);
    EXPECT_GE(r.ci->hi, v[v.size() / 2]);
    EXPECT_EQ(r.ci->method, "percentile");
  }
}

TEST(Bootstrap, ReturnSignFlipsInterval) {
  const Eigen::VectorXd x = sample(ModelSpec::normal(), 60, {52, 0}).values;
  BootstrapConfig cfg;
  cfg.replicates = 200;
  const auto loss = bootstrap_distribution(x, RiskSpectrum::exponential(1.0), cfg);
  cfg.sign = SignConvention::Return;
  const auto ret = bootstrap_distribution(x, RiskSpectrum::exponential(1.0), cfg);
  EXPECT_EQ(ret.point, -loss.point);
  EXPECT_EQ(ret.ci->lo, -loss.ci->hi);
  EXPECT_EQ(ret.sd, loss.sd);
}

TEST(Bootstrap, SmallSampleWarnsAndTooFewReplicatesRejected) {
  BootstrapConfig cfg;
  cfg.replicates = 100;
  const auto r = bootstrap_distribution(sample(ModelSpec::normal(), 20, {53, 0}).values, RiskSpectrum::exponential(1.0), cfg);
  EXPECT_FALSE(r.warnings.empty());
  cfg.replicates = 10;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

TEST(ConsistencySweep, SingleSizeHasNoAssertion) {
  const auto r = consistency_sweep(ModelSpec::normal(), RiskSpectrum::exponential(5.0), {100}, 10);
  EXPECT_FALSE(r.monotonicity_asserted);
  EXPECT_EQ(r.medians.size(), 1u);
}

TEST(ConsistencySweep, SmallGridDecreases) {
  const auto r = consistency_sweep(ModelSpec::normal(), RiskSpectrum::exponential(1.0), {50, 5000}, 20);
  EXPECT_TRUE(r.monotonicity_asserted);
  EXPECT_TRUE(r.strictly_decreasing);
}

TEST(CltCheck, ZeroReplicatesRejected) {
  EXPECT_THROW(clt_check(ModelSpec::normal(), RiskSpectrum::exponential(1.0), 100, 0), ParameterError);
}

TEST(KsDistance, KnownValues) {
  EXPECT_NEAR(ks_distance_normal({0.0}), 0.5, 1e-15);
  std::vector<double> v;
  for (int i = 1; i < 1000; ++i) v.push_back(normal_quantile(i / 1000.0));
  EXPECT_LT(ks_distance_normal(v), 1.01e-3);
}

TEST(TheoryCheck, UnitWeightAndMildWeightDecay) {
  TheoryCheckOptions opts;
  for (auto h : {WeightFunctionH::unit(), WeightFunctionH::h(1.8), WeightFunctionH::h(0.2)}) {
    const auto r = theory_check_theorem1(h, {100, 1000, 10000}, 20, opts);
    EXPECT_TRUE(r.strictly_decreasing);
  }
}

TEST(TheoryCheck, TheoremTwoSmallRun) {
  TheoryCheckOptions opts;
  opts.bandwidth_exponent = 0.75;
  const auto r = theory_check_theorem2(10000, 2.0, 2.0, 10, 5, opts);
  EXPECT_GT(r.lambda, 0.0);
  EXPECT_GE(r.passing, 9);
}

}  // namespace
}  // namespace srm
