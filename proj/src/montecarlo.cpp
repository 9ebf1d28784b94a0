#include "srm/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "srm/normal.hpp"

namespace srm {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

double mean_of(const std::vector<double>& v) {
  return pairwise_sum(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))) /
         static_cast<double>(v.size());
}

// Sample variance with divisor m - 1 (m >= 2), from a second pass.
double variance_of(const std::vector<double>& v, double mean) {
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).array() - mean;
  return pairwise_sum(d.array().square().matrix()) / static_cast<double>(v.size() - 1);
}

double covariance_of(const std::vector<double>& a, double ma, const std::vector<double>& b, double mb) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::VectorXd prod = (Eigen::Map<const Eigen::VectorXd>(a.data(), n).array() - ma) *
                         (Eigen::Map<const Eigen::VectorXd>(b.data(), n).array() - mb);
  return pairwise_sum(prod) / static_cast<double>(n - 1);
}

Eigen::VectorXd model_losses(const ModelSpec& model, Eigen::Index n, SeedPath path) {
  return sample(model, n, path).values;
}

std::uint64_t derived_seed(std::uint64_t master, std::uint64_t salt) {
  return detail::mix64(master ^ detail::mix64(salt));
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

int default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(Eigen::Index count, int workers, const std::function<void(Eigen::Index)>& body) {
  if (count <= 0) return;
  if (workers <= 0) workers = default_workers();
  workers = static_cast<int>(std::min<Eigen::Index>(workers, count));
  if (workers == 1) {
    for (Eigen::Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const Eigen::Index i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

KernelEstimatorConfig experiment_kernel_config() {
  KernelEstimatorConfig config;
  config.check_convergence = false;
  return config;
}

MseRatioReport mse_ratio_experiment(const MseExperimentConfig& config) {
  config.model.validate();
  if (config.replicates < 2) throw ParameterError("mse_ratio_experiment: need at least two replicates");
  if (config.n < 2) throw ParameterError("mse_ratio_experiment: n must be >= 2");
  const RiskSpectrum spectrum = RiskSpectrum::exponential(config.beta);

  MseRatioReport report;
  report.model = config.model;
  report.n = config.n;
  report.beta = config.beta;
  report.replicates = config.replicates;
  report.master_seed = config.master_seed;
  if (config.truth) {
    report.truth = *config.truth;
    report.truth_provenance = "supplied";
  } else {
    const TruthValue t = true_srm(config.model, spectrum, config.truth_tol, config.oracle);
    report.truth = t.value;
    report.truth_approximate = t.approximate;
    report.truth_provenance = t.provenance;
  }
  if (!std::isfinite(report.truth)) throw OracleError("mse_ratio_experiment: truth is not finite");

  const LossEstimator empirical = config.empirical_hook
                                      ? config.empirical_hook
                                      : LossEstimator([&](const Eigen::VectorXd& x) { return empirical_srm_loss(x, spectrum); });
  const LossEstimator kernel =
      config.kernel_hook ? config.kernel_hook
                         : LossEstimator([&](const Eigen::VectorXd& x) { return kernel_srm_loss(x, spectrum, config.kernel).value; });

  const auto b = static_cast<std::size_t>(config.replicates);
  std::vector<double> err1(b), err2(b);
  parallel_for(config.replicates, config.workers, [&](Eigen::Index r) {
    const Eigen::VectorXd x = model_losses(config.model, config.n, SeedPath{config.master_seed, static_cast<std::uint64_t>(r)});
    err1[static_cast<std::size_t>(r)] = empirical(x) - report.truth;
    err2[static_cast<std::size_t>(r)] = kernel(x) - report.truth;
  });

  std::vector<double> sq1(b), sq2(b);
  for (std::size_t r = 0; r < b; ++r) {
    sq1[r] = err1[r] * err1[r];
    sq2[r] = err2[r] * err2[r];
  }
  report.bias1 = mean_of(err1);
  report.bias2 = mean_of(err2);
  report.mse1 = mean_of(sq1);
  report.mse2 = mean_of(sq2);
  if (!(report.mse1 > 0.0)) throw NumericalError("mse_ratio_experiment: empirical MSE is zero");
  report.ratio = report.mse2 / report.mse1;
  const double m1 = report.mse1;
  const double m2 = report.mse2;
  const double v1 = variance_of(sq1, m1);
  const double v2 = variance_of(sq2, m2);
  const double c12 = covariance_of(sq1, m1, sq2, m2);
  const double var_ratio =
      (v2 / (m1 * m1) - 2.0 * m2 * c12 / (m1 * m1 * m1) + m2 * m2 * v1 / (m1 * m1 * m1 * m1)) / static_cast<double>(b);
  report.ratio_se = std::sqrt(std::max(0.0, var_ratio));
  return report;
}

void BootstrapConfig::validate() const {
  if (replicates < 100) throw ParameterError("bootstrap: replicates must be >= 100");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw ParameterError("bootstrap: ci level must lie in (0, 1)");
  if (scheme == ResampleScheme::MovingBlock && block_length < 1)
    throw ParameterError("bootstrap: block length must be >= 1");
  kernel.validate();
}

std::pair<double, double> percentile_interval(std::vector<double> values, double level) {
  if (values.empty()) throw ParameterError("percentile_interval: no values");
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("percentile_interval: level must lie in (0, 1)");
  std::sort(values.begin(), values.end());
  const double r = static_cast<double>(values.size());
  const double alpha = 1.0 - level;
  // Guard against representation error pushing an exact product up one rank.
  const auto rank = [](double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); };
  const std::size_t k_lo = std::max<std::size_t>(1, rank(r * alpha / 2.0));
  const std::size_t k_hi = std::clamp<std::size_t>(rank(r * (1.0 - alpha / 2.0)), 1, values.size());
  return {values[k_lo - 1], values[k_hi - 1]};
}

EstimateReport bootstrap_distribution(const Eigen::VectorXd& returns, const RiskSpectrum& spectrum,
                                      const BootstrapConfig& config, std::vector<double>* replicate_values) {
  config.validate();
  if (returns.size() < 2) throw ParameterError("bootstrap: need at least two observations");
  const Eigen::VectorXd losses = -units_factor(config.units) * returns;
  const Eigen::Index n = losses.size();

  auto estimate = [&](const Eigen::VectorXd& x) {
    return config.estimator == EstimatorKind::Empirical ? empirical_srm_loss(x, spectrum)
                                                        : kernel_srm_loss(x, spectrum, config.kernel).value;
  };

  EstimateReport report;
  report.estimator = config.estimator;
  report.n = n;
  report.spectrum = spectrum;
  report.units = config.units;
  report.provenance.seed = config.master_seed;
  if (config.estimator == EstimatorKind::Kernel) {
    const auto full = kernel_srm_loss(losses, spectrum, config.kernel);
    report.point = full.value;
    if (full.bandwidth > 0.0) report.bandwidth = full.bandwidth;
    report.warnings = full.warnings;
  } else {
    report.point = empirical_srm_loss(losses, spectrum);
  }
  if (n < 30) report.warnings.push_back("bootstrap: fewer than 30 observations");

  const auto reps = static_cast<std::size_t>(config.replicates);
  std::vector<double> values(reps);
  parallel_for(config.replicates, config.workers, [&](Eigen::Index r) {
    Substream stream(SeedPath{config.master_seed, static_cast<std::uint64_t>(r)});
    Eigen::VectorXd x(n);
    if (config.scheme == ResampleScheme::IID) {
      for (Eigen::Index i = 0; i < n; ++i) x[i] = losses[static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(n)))];
    } else {
      const Eigen::Index len = std::min(config.block_length, n);
      const auto starts = static_cast<std::uint64_t>(n - len + 1);
      for (Eigen::Index i = 0; i < n;) {
        const auto s = static_cast<Eigen::Index>(stream.below(starts));
        for (Eigen::Index k = 0; k < len && i < n; ++k) x[i++] = losses[s + k];
      }
    }
    values[static_cast<std::size_t>(r)] = estimate(x);
  });

  const double m = mean_of(values);
  report.sd = std::sqrt(variance_of(values, m));
  const auto [lo, hi] = percentile_interval(values, config.ci_level);
  report.ci = ConfidenceInterval{lo, hi, config.ci_level, "percentile"};

  std::ostringstream cfg;
  cfg.precision(17);
  cfg << "estimator=" << to_string(config.estimator) << " spectrum=" << to_string(spectrum)
      << " replicates=" << config.replicates
      << " scheme=" << (config.scheme == ResampleScheme::IID ? "iid" : "block")
      << " ci_level=" << config.ci_level << " seed=" << config.master_seed << " units=" << to_string(config.units);
  if (config.scheme == ResampleScheme::MovingBlock) cfg << " block_length=" << config.block_length;
  if (config.estimator == EstimatorKind::Kernel) cfg << " " << describe(config.kernel);
  report.provenance.config = cfg.str();
  report.provenance.config_hash = fnv1a_hex(report.provenance.config);
  if (replicate_values) *replicate_values = std::move(values);
  apply_sign(report, config.sign);
  return report;
}

DecayReport consistency_sweep(const ModelSpec& model, const RiskSpectrum& spectrum,
                              const std::vector<Eigen::Index>& n_grid, Eigen::Index seeds,
                              const SweepOptions& options) {
  if (seeds < 1) throw ParameterError("consistency_sweep: seeds must be >= 1");
  if (n_grid.empty()) throw ParameterError("consistency_sweep: empty n grid");
  DecayReport report;
  report.n_grid = n_grid;
  report.seeds = seeds;
  report.truth = true_srm(model, spectrum, options.truth_tol).value;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    std::vector<double> errors(static_cast<std::size_t>(seeds));
    const std::uint64_t master = derived_seed(options.master_seed, static_cast<std::uint64_t>(n_grid[g]));
    parallel_for(seeds, options.workers, [&](Eigen::Index s) {
      const Eigen::VectorXd x = model_losses(model, n_grid[g], SeedPath{master, static_cast<std::uint64_t>(s)});
      errors[static_cast<std::size_t>(s)] = std::abs(kernel_srm_loss(x, spectrum, options.kernel).value - report.truth);
    });
    report.medians.push_back(median(std::move(errors)));
  }
  report.monotonicity_asserted = n_grid.size() > 1;
  report.strictly_decreasing = strictly_decreasing(report.medians);
  return report;
}

double ks_distance_normal(std::vector<double> values) {
  if (values.empty()) throw ParameterError("ks_distance_normal: no values");
  std::sort(values.begin(), values.end());
  const double m = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = normal_cdf(values[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / m - f, f - static_cast<double>(i) / m});
  }
  return d;
}

CltReport clt_check(const ModelSpec& model, const RiskSpectrum& spectrum, Eigen::Index n, Eigen::Index replicates,
                    const SweepOptions& options) {
  if (replicates < 2) throw ParameterError("clt_check: replicates must be >= 2");
  if (n < 2) throw ParameterError("clt_check: n must be >= 2");
  CltReport report;
  report.n = n;
  report.replicates = replicates;
  report.truth = true_srm(model, spectrum, options.truth_tol).value;
  const AsymptoticVariance v = asymptotic_variance(AsymptoticSpec::for_model(model, spectrum));
  report.sigma2 = v.sigma2;
  report.sigma2_difference = v.difference;
  if (!(report.sigma2 > 0.0)) throw NumericalError("clt_check: asymptotic variance is zero");

  std::vector<double> est(static_cast<std::size_t>(replicates));
  parallel_for(replicates, options.workers, [&](Eigen::Index r) {
    const Eigen::VectorXd x = model_losses(model, n, SeedPath{options.master_seed, static_cast<std::uint64_t>(r)});
    est[static_cast<std::size_t>(r)] = kernel_srm_loss(x, spectrum, options.kernel).value;
  });
  const double root_n = std::sqrt(static_cast<double>(n));
  const double sigma = std::sqrt(report.sigma2);
  const double mean = mean_of(est);
  std::vector<double> z(est.size()), zc(est.size());
  for (std::size_t r = 0; r < est.size(); ++r) {
    z[r] = root_n * (est[r] - report.truth) / sigma;
    zc[r] = root_n * (est[r] - mean) / sigma;
  }
  report.standardized_mean = mean_of(z);
  report.ks_distance = ks_distance_normal(z);
  report.ks_distance_centered = ks_distance_normal(zc);
  report.variance_ratio = static_cast<double>(n) * variance_of(est, mean) / report.sigma2;
  return report;
}

double TheoryCheckOptions::bandwidth(Eigen::Index n) const {
  return bandwidth_scale * std::pow(static_cast<double>(n), -bandwidth_exponent);
}

DecayReport theory_check_theorem1(const WeightFunctionH& h, const std::vector<Eigen::Index>& n_grid, Eigen::Index seeds,
                                  const TheoryCheckOptions& options) {
  if (seeds < 1) throw ParameterError("theory_check_theorem1: seeds must be >= 1");
  if (n_grid.empty()) throw ParameterError("theory_check_theorem1: empty n grid");
  DecayReport report;
  report.n_grid = n_grid;
  report.seeds = seeds;
  for (Eigen::Index n : n_grid) {
    std::vector<double> d(static_cast<std::size_t>(seeds));
    const std::uint64_t master = derived_seed(options.master_seed, static_cast<std::uint64_t>(n));
    parallel_for(seeds, options.workers, [&](Eigen::Index s) {
      const KernelCdf<double> cdf(uniform_sample(n, SeedPath{master, static_cast<std::uint64_t>(s)}),
                                  options.bandwidth(n), options.kernel);
      d[static_cast<std::size_t>(s)] = dh_distance(cdf, h, options.grid_size);
    });
    report.medians.push_back(median(std::move(d)));
  }
  report.monotonicity_asserted = n_grid.size() > 1;
  report.strictly_decreasing = strictly_decreasing(report.medians);
  return report;
}

TheoremTwoReport theory_check_theorem2(Eigen::Index n, double tau1, double tau2, Eigen::Index seeds,
                                       Eigen::Index pilot_seeds, const TheoryCheckOptions& options) {
  if (seeds < 1 || pilot_seeds < 1) throw ParameterError("theory_check_theorem2: seeds must be >= 1");
  TheoremTwoReport report;
  report.n = n;
  report.tau1 = tau1;
  report.tau2 = tau2;
  report.seeds = seeds;
  report.bandwidth = options.bandwidth(n);
  BoundCheckOptions bound_options;
  bound_options.grid_size = options.grid_size;
  bound_options.kernel = options.kernel;

  std::vector<SeedPath> pilots;
  const std::uint64_t pilot_master = derived_seed(options.master_seed, 0x9111075eedULL);
  for (Eigen::Index s = 0; s < pilot_seeds; ++s) pilots.push_back(SeedPath{pilot_master, static_cast<std::uint64_t>(s)});
  report.lambda = prescan_lambda(n, report.bandwidth, tau1, tau2, pilots, {}, bound_options);
  if (!(report.lambda > 0.0)) return report;

  std::vector<BoundReport> results(static_cast<std::size_t>(seeds));
  parallel_for(seeds, options.workers, [&](Eigen::Index s) {
    results[static_cast<std::size_t>(s)] = nearly_linear_bounds_check(
        n, report.bandwidth, tau1, tau2, report.lambda, SeedPath{options.master_seed, static_cast<std::uint64_t>(s)},
        bound_options);
  });
  report.worst_margin.fill(std::numeric_limits<double>::infinity());
  for (const auto& r : results) {
    if (r.all_pass()) ++report.passing;
    for (std::size_t k = 0; k < 6; ++k) {
      if (!r.items[k].pass) ++report.item_failures[k];
      if (r.items[k].points_checked > 0) report.worst_margin[k] = std::min(report.worst_margin[k], r.items[k].worst_margin);
    }
  }
  return report;
}

}  // namespace srm
