#include "srm/kernel_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace srm {

namespace {

void record(BoundItem& item, double margin, double t) {
  ++item.points_checked;
  if (item.points_checked == 1 || margin < item.worst_margin) {
    item.worst_margin = margin;
    item.worst_t = t;
  }
  if (margin < 0.0) item.pass = false;
}

void check_parameters(double tau1, double tau2, double lambda) {
  if (!(tau1 > 1.0 && tau2 > 1.0)) throw ParameterError("nearly-linear bounds need tau1 > 1 and tau2 > 1");
  if (!(lambda > 0.0 && lambda < 0.5)) throw ParameterError("nearly-linear bounds need 0 < lambda < 1/2");
}

}  // namespace

Eigen::VectorXd uniform_sample(Eigen::Index n, SeedPath seed_path) {
  Substream stream(seed_path);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = stream.uniform();
  return out;
}

BoundReport nearly_linear_bounds_check(const KernelCdf<double>& cdf, double tau1, double tau2, double lambda,
                                       const BoundCheckOptions& options) {
  check_parameters(tau1, tau2, lambda);
  if (options.grid_size < 2) throw ParameterError("nearly-linear bounds: grid_size must be >= 2");
  const int g = options.grid_size;
  const double n = static_cast<double>(cdf.size());

  Eigen::ArrayXd grid(g);
  for (int k = 1; k <= g; ++k) grid[k - 1] = static_cast<double>(k) / (g + 1);
  const Eigen::VectorXd inverse = cdf.quantiles(grid, options.inversion);

  BoundReport report;
  report.lambda = lambda;
  report.tau1 = tau1;
  report.tau2 = tau2;
  report.bandwidth = cdf.bandwidth();
  report.n = cdf.size();
  auto& items = report.items;
  for (int k = 0; k < g; ++k) {
    const double t = grid[k];
    const double f = cdf(t);
    const double q = inverse[k];
    const double upper_power = std::pow(t / lambda, 1.0 / tau1);
    const double lower_power = 1.0 - std::pow((1.0 - t) / lambda, 1.0 / tau2);
    const double lower_linear = lambda * std::pow(t, tau1);
    const double upper_linear = 1.0 - lambda * std::pow(1.0 - t, tau2);

    record(items[0], std::min(f - lower_power, upper_power - f), t);
    if (f > 0.0) record(items[1], f - lower_linear, t);
    if (f < 1.0) record(items[2], upper_linear - f, t);
    record(items[3], std::min(q - lower_linear, upper_linear - q), t);
    if (t >= 1.0 / n) record(items[4], upper_power - q, t);
    if (t <= 1.0 - 1.0 / n) record(items[5], q - lower_power, t);
  }
  return report;
}

BoundReport nearly_linear_bounds_check(Eigen::Index n, double bandwidth, double tau1, double tau2, double lambda,
                                       SeedPath seed_path, const BoundCheckOptions& options) {
  check_parameters(tau1, tau2, lambda);
  if (n < 1) throw ParameterError("nearly-linear bounds: n must be >= 1");
  const KernelCdf<double> cdf(uniform_sample(n, seed_path), bandwidth, options.kernel);
  return nearly_linear_bounds_check(cdf, tau1, tau2, lambda, options);
}

double prescan_lambda(Eigen::Index n, double bandwidth, double tau1, double tau2,
                      const std::vector<SeedPath>& pilot_seeds, std::vector<double> candidates,
                      const BoundCheckOptions& options) {
  if (candidates.empty()) candidates = {0.45, 0.4, 0.3, 0.25, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.001};
  std::sort(candidates.begin(), candidates.end(), std::greater<>());
  std::vector<KernelCdf<double>> pilots;
  pilots.reserve(pilot_seeds.size());
  for (const auto& seed : pilot_seeds) pilots.emplace_back(uniform_sample(n, seed), bandwidth, options.kernel);
  for (double lambda : candidates) {
    const bool ok = std::all_of(pilots.begin(), pilots.end(), [&](const KernelCdf<double>& cdf) {
      return nearly_linear_bounds_check(cdf, tau1, tau2, lambda, options).all_pass();
    });
    if (ok) return lambda;
  }
  return 0.0;
}

}  // namespace srm
