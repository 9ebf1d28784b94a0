#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

#include "srm/rng.hpp"
#include "srm/spectrum.hpp"

namespace srm {

enum class ModelKind { GPD, StudentT, Normal, GARCH };

/// One of the four simulation models. Draws are read as losses by the
/// Monte-Carlo harness (large values = large losses).
struct ModelSpec {
  ModelKind kind = ModelKind::Normal;
  double shape = 1.0 / 3.0;  // GPD xi
  double df = 4.0;           // Student-t degrees of freedom
  double garch_alpha1 = 0.061;
  double garch_beta1 = 0.932;
  double garch_omega = 0.007;
  // Variance used to start the GARCH recursion when omega == 0.
  double garch_initial_variance = 1.0;
  double scale = 1.0;
  double location = 0.0;

  static ModelSpec normal(double location = 0.0, double scale = 1.0);
  static ModelSpec student_t(double df, double location = 0.0, double scale = 1.0);
  static ModelSpec gpd(double shape, double scale = 1.0, double location = 0.0);
  static ModelSpec garch(double alpha1, double beta1, double omega);

  /// Throws ParameterError when an invariant of the chosen kind fails.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Non-fatal diagnostics, e.g. the degenerate omega = 0 GARCH recursion.
std::vector<std::string> model_warnings(const ModelSpec& model);

std::string model_name(const ModelSpec& model);

/// Compact CLI syntax: `normal[:loc,scale]`, `t:df`, `gpd:xi[,scale,loc]`,
/// `garch[:alpha1,beta1,omega]`.
ModelSpec parse_model(std::string_view text);

/// Plain-text `key=value` form, one pair per line.
std::string to_config(const ModelSpec& model);
ModelSpec parse_model_config(std::string_view text);

struct SampleBatch {
  Eigen::VectorXd values;
  SeedPath seed_path;
  ModelSpec model;
};

/// Marginal CDF (models GPD, StudentT, Normal).
double cdf(const ModelSpec& model, double x);

/// inf{x : F(x) >= u} for 0 < u < 1.
double quantile(const ModelSpec& model, double u);

/// F^{-1}(1 - d), computed from d directly so far upper-tail quantiles keep
/// full precision.
double quantile_upper(const ModelSpec& model, double d);

/// n i.i.d. draws by inverse CDF of counter-based uniforms. A GARCH model is
/// forwarded to simulate_garch with the default burn-in.
SampleBatch sample(const ModelSpec& model, Eigen::Index n, SeedPath seed_path);

inline constexpr Eigen::Index kDefaultGarchBurnIn = 500;

/// X_i = sigma_i Z_i, sigma_i^2 = omega + alpha1 X_{i-1}^2 + beta1 sigma_{i-1}^2,
/// started at the unconditional variance; returns the last n of burn_in + n.
SampleBatch simulate_garch(const ModelSpec& model, Eigen::Index n, Eigen::Index burn_in,
                           SeedPath seed_path);

struct OracleOptions {
  Eigen::Index garch_sample_size = 10'000'000;
  Eigen::Index garch_burn_in = kDefaultGarchBurnIn;
  SeedPath garch_seed{0x5eed0bad5eedULL, 0};
};

struct TruthValue {
  double value = 0.0;
  // True for the GARCH large-sample oracle.
  bool approximate = false;
  // |I(2m) - I(m)| at the accepted mesh (0 for the sample oracle).
  double refinement_delta = 0.0;
  std::string provenance;
};

/// Loss-side spectral risk measure of the model: integral of q(u) phi(u).
/// Analytic models use dyadically graded Gauss-Legendre refined until two
/// successive mesh doublings differ by less than tol. GARCH uses the
/// L-statistic of one long burnt-in path.
TruthValue true_srm(const ModelSpec& model, const RiskSpectrum& spectrum, double tol,
                    const OracleOptions& options = {});

/// Student-t helpers exposed for testing.
double student_t_upper_tail(double t, double df);
double student_t_upper_quantile(double d, double df);

}  // namespace srm
