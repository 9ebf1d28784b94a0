#pragma once

#include <array>
#include <vector>

#include "srm/kernel.hpp"
#include "srm/rng.hpp"

namespace srm {

struct BoundItem {
  bool pass = true;
  // Smallest slack over the grid (negative when violated).
  double worst_margin = 0.0;
  double worst_t = 0.0;
  int points_checked = 0;
};

/// Outcome of checking the six almost-sure envelope inequalities for the
/// kernel distribution function of n uniform(0,1) draws and its inverse.
struct BoundReport {
  std::array<BoundItem, 6> items{};
  double lambda = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  double bandwidth = 0.0;
  Eigen::Index n = 0;

  bool all_pass() const {
    for (const auto& item : items)
      if (!item.pass) return false;
    return true;
  }
};

struct BoundCheckOptions {
  int grid_size = 1000;
  KernelType kernel = KernelType::Gaussian;
  InversionOptions inversion{};
};

/// Evaluates, on t = k/(G+1), k = 1..G:
///  1. 1 - ((1-t)/lambda)^{1/tau2} <= F(t) <= (t/lambda)^{1/tau1}
///  2. lambda t^{tau1} <= F(t)                   where F(t) > 0
///  3. F(t) <= 1 - lambda (1-t)^{tau2}           where F(t) < 1
///  4. lambda t^{tau1} <= Q(t) <= 1 - lambda (1-t)^{tau2}
///  5. Q(t) <= (t/lambda)^{1/tau1}               for t >= 1/n
///  6. 1 - ((1-t)/lambda)^{1/tau2} <= Q(t)       for t <= 1 - 1/n
/// with Q the inverse of F. Requires tau1, tau2 > 1 and 0 < lambda < 1/2.
BoundReport nearly_linear_bounds_check(Eigen::Index n, double bandwidth, double tau1, double tau2, double lambda,
                                       SeedPath seed_path, const BoundCheckOptions& options = {});

/// Same check on caller-supplied data in [0, 1].
BoundReport nearly_linear_bounds_check(const KernelCdf<double>& cdf, double tau1, double tau2, double lambda,
                                       const BoundCheckOptions& options = {});

/// Largest lambda from `candidates` (tried in descending order) for which all
/// six items hold on every pilot seed; 0 if none does.
double prescan_lambda(Eigen::Index n, double bandwidth, double tau1, double tau2,
                      const std::vector<SeedPath>& pilot_seeds, std::vector<double> candidates = {},
                      const BoundCheckOptions& options = {});

/// Uniform(0,1) sample from the counter-based stream.
Eigen::VectorXd uniform_sample(Eigen::Index n, SeedPath seed_path);

}  // namespace srm
