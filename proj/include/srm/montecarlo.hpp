#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "srm/distributions.hpp"
#include "srm/estimators.hpp"
#include "srm/kernel_diagnostics.hpp"

namespace srm {

/// Number of worker threads used when a config asks for 0 (auto).
int default_workers();

/// Runs body(i) for i in [0, count) on `workers` threads (0 = auto). Items are
/// handed out dynamically; the first exception thrown by any item is rethrown
/// after all workers stop.
void parallel_for(Eigen::Index count, int workers, const std::function<void(Eigen::Index)>& body);

/// Estimator applied to one replicate's losses.
using LossEstimator = std::function<double(const Eigen::VectorXd& losses)>;

/// Kernel estimator settings used inside experiments: no panel-doubling check.
KernelEstimatorConfig experiment_kernel_config();

struct MseExperimentConfig {
  ModelSpec model = ModelSpec::normal();
  Eigen::Index n = 30;
  double beta = 1.0;
  Eigen::Index replicates = 1000;
  std::uint64_t master_seed = 20240601;
  // Ground truth; computed by true_srm when empty.
  std::optional<double> truth;
  double truth_tol = 1e-10;
  OracleOptions oracle{};
  KernelEstimatorConfig kernel = experiment_kernel_config();
  // Test hooks replacing the two estimators (MSE1 = empirical, MSE2 = kernel).
  LossEstimator empirical_hook;
  LossEstimator kernel_hook;
  int workers = 0;
};

struct MseRatioReport {
  ModelSpec model;
  Eigen::Index n = 0;
  double beta = 0.0;
  Eigen::Index replicates = 0;
  std::uint64_t master_seed = 0;
  double truth = 0.0;
  bool truth_approximate = false;
  std::string truth_provenance;
  double mse1 = 0.0;  // empirical
  double mse2 = 0.0;  // kernel
  double ratio = 0.0;  // mse2 / mse1
  // Delta-method Monte-Carlo standard error of the ratio.
  double ratio_se = 0.0;
  double bias1 = 0.0;
  double bias2 = 0.0;
};

MseRatioReport mse_ratio_experiment(const MseExperimentConfig& config);

enum class ResampleScheme { IID, MovingBlock };

struct BootstrapConfig {
  Eigen::Index replicates = 10000;
  ResampleScheme scheme = ResampleScheme::IID;
  Eigen::Index block_length = 20;  // MovingBlock only
  double ci_level = 0.90;
  std::uint64_t master_seed = 20240601;
  EstimatorKind estimator = EstimatorKind::Kernel;
  // Bandwidth is recomputed on every resample under the configured rule.
  KernelEstimatorConfig kernel = experiment_kernel_config();
  SignConvention sign = SignConvention::Loss;
  Units units = Units::Raw;
  int workers = 0;

  void validate() const;
};

/// Point estimate on the full sample plus SD and percentile interval of the
/// resampled estimates. `replicate_values`, when given, receives the
/// loss-side replicate estimates in replicate order.
EstimateReport bootstrap_distribution(const Eigen::VectorXd& returns, const RiskSpectrum& spectrum,
                                      const BootstrapConfig& config,
                                      std::vector<double>* replicate_values = nullptr);

/// Percentile interval from order statistics: k_lo = max(1, ceil(R a/2)),
/// k_hi = ceil(R (1 - a/2)), a = 1 - level (1-based ranks).
std::pair<double, double> percentile_interval(std::vector<double> values, double level);

struct DecayReport {
  std::vector<Eigen::Index> n_grid;
  std::vector<double> medians;
  Eigen::Index seeds = 0;
  double truth = 0.0;
  // Only meaningful with at least two grid points.
  bool monotonicity_asserted = false;
  bool strictly_decreasing = true;
};

struct SweepOptions {
  std::uint64_t master_seed = 20240601;
  KernelEstimatorConfig kernel = experiment_kernel_config();
  double truth_tol = 1e-10;
  int workers = 0;
};

/// Median |kernel estimate - truth| over seeds at each n (losses drawn from
/// the model).
DecayReport consistency_sweep(const ModelSpec& model, const RiskSpectrum& spectrum,
                              const std::vector<Eigen::Index>& n_grid, Eigen::Index seeds,
                              const SweepOptions& options = {});

struct CltReport {
  Eigen::Index n = 0;
  Eigen::Index replicates = 0;
  double truth = 0.0;
  double sigma2 = 0.0;
  double sigma2_difference = 0.0;
  // KS distance of sqrt(n)(estimate - truth)/sigma to N(0, 1).
  double ks_distance = 0.0;
  // Same, centred at the replicate mean instead of the truth.
  double ks_distance_centered = 0.0;
  // Mean of the standardized values (the smoothing bias in sd units).
  double standardized_mean = 0.0;
  // Var(sqrt(n) estimate) / sigma^2.
  double variance_ratio = 0.0;
};

CltReport clt_check(const ModelSpec& model, const RiskSpectrum& spectrum, Eigen::Index n, Eigen::Index replicates,
                    const SweepOptions& options = {});

/// Kolmogorov-Smirnov distance of a sample to N(0, 1).
double ks_distance_normal(std::vector<double> values);

struct TheoryCheckOptions {
  std::uint64_t master_seed = 20240601;
  // b = bandwidth_scale * n^{-bandwidth_exponent} on the uniform samples.
  double bandwidth_scale = 1.0;
  double bandwidth_exponent = 0.5;
  int grid_size = 1000;
  KernelType kernel = KernelType::Gaussian;
  int workers = 0;

  double bandwidth(Eigen::Index n) const;
};

/// Median d_h(F_{n,b}, U(0,1)) over seeds for each n.
DecayReport theory_check_theorem1(const WeightFunctionH& h, const std::vector<Eigen::Index>& n_grid, Eigen::Index seeds,
                                  const TheoryCheckOptions& options = {});

struct TheoremTwoReport {
  Eigen::Index n = 0;
  double bandwidth = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  double lambda = 0.0;
  Eigen::Index seeds = 0;
  Eigen::Index passing = 0;
  std::array<Eigen::Index, 6> item_failures{};
  std::array<double, 6> worst_margin{};
};

/// Pre-scans lambda on `pilot_seeds` seeds of a separate stream, then counts
/// the seeds on which all six bounds hold.
TheoremTwoReport theory_check_theorem2(Eigen::Index n, double tau1, double tau2, Eigen::Index seeds,
                                       Eigen::Index pilot_seeds, const TheoryCheckOptions& options = {});

}  // namespace srm
