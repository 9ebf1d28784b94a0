#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "srm/distributions.hpp"
#include "srm/kernel.hpp"
#include "srm/quadrature.hpp"
#include "srm/spectrum.hpp"

namespace srm {

inline constexpr const char* kVersion = "srm 0.1.0";

enum class EstimatorKind { Empirical, Kernel };
enum class BandwidthRule { Swanepoel, Fixed };
enum class SignConvention { Loss, Return };
enum class Units { Raw, Percent };

struct KernelEstimatorConfig {
  KernelType kernel = KernelType::Gaussian;
  BandwidthRule rule = BandwidthRule::Swanepoel;
  // Used when rule == Fixed.
  double bandwidth = 0.0;
  BandwidthScaling scaling = BandwidthScaling::Verbatim;
  InversionOptions inversion{};
  // Quadrature runs over [clip, 1 - clip].
  double clip = 1e-6;
  // end_levels < 0 picks enough geometric end pieces to resolve the clip.
  PanelLayout layout{64, 8, -1, 0.25};
  // Recompute with twice the panels and flag a relative change above
  // convergence_threshold.
  bool check_convergence = true;
  double convergence_threshold = 1e-6;

  void validate() const;
};

/// Canonical one-line description, used for provenance hashing.
std::string describe(const KernelEstimatorConfig& config);

/// 64-bit FNV-1a of `text` as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.90;
  std::string method;  // "clt" or "percentile"
};

struct Provenance {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string config_hash;
  std::string version = kVersion;
};

struct EstimateReport {
  EstimatorKind estimator = EstimatorKind::Kernel;
  // In the report's sign convention and units.
  double point = 0.0;
  double sd = 0.0;
  std::optional<ConfidenceInterval> ci;
  Eigen::Index n = 0;
  std::optional<double> bandwidth;
  RiskSpectrum spectrum = RiskSpectrum::exponential(1.0);
  SignConvention sign = SignConvention::Loss;
  Units units = Units::Raw;
  Provenance provenance;
  std::vector<std::string> warnings;
};

struct EstimateOptions {
  SignConvention sign = SignConvention::Loss;
  // Percent multiplies the returns by 100 before estimation, so data-driven
  // bandwidths see the percent scale.
  Units units = Units::Raw;
  // Attach a plug-in CLT interval.
  bool clt_interval = false;
  double ci_level = 0.90;
  int variance_grid = 800;
};

double units_factor(Units units);
std::string to_string(EstimatorKind kind);
std::string to_string(SignConvention sign);
std::string to_string(Units units);
EstimatorKind parse_estimator(std::string_view text);
SignConvention parse_sign(std::string_view text);
Units parse_units(std::string_view text);

// ---- loss-side core -------------------------------------------------------

/// sum c_i L_(i) over ascending losses.
double empirical_srm_loss(Eigen::VectorXd losses, const RiskSpectrum& spectrum);

struct KernelSrmResult {
  double value = 0.0;
  double bandwidth = 0.0;
  // Relative change under panel doubling (0 when not checked).
  double refinement_delta = 0.0;
  std::vector<std::string> warnings;
};

/// Nodes on [clip, 1 - clip], split at the spectrum's discontinuities, with
/// weights multiplied by phi.
QuadratureRule<double> spectrum_rule(const RiskSpectrum& spectrum, double clip, const PanelLayout& layout);

/// Integral of F_{n,b}^{-1} phi over [clip, 1 - clip] divided by the integral
/// of phi over the same nodes, so constants pass through exactly.
double kernel_srm_loss(const KernelCdf<double>& cdf, const QuadratureRule<double>& rule,
                       const InversionOptions& inversion = {});

/// Resolves the bandwidth (rule or fixed) on the losses and integrates.
KernelSrmResult kernel_srm_loss(const Eigen::VectorXd& losses, const RiskSpectrum& spectrum,
                                const KernelEstimatorConfig& config = {});

/// Resolved bandwidth for `data` under `config`; nullopt for zero-scale data
/// under the Swanepoel rule.
std::optional<double> resolve_bandwidth(const Eigen::VectorXd& data, const KernelEstimatorConfig& config);

// ---- return-side estimators -----------------------------------------------

/// L-statistic on losses -returns.
EstimateReport empirical_srm(const Eigen::VectorXd& returns, const RiskSpectrum& spectrum,
                             const EstimateOptions& options = {});

/// Kernel estimator on losses -returns.
EstimateReport kernel_srm(const Eigen::VectorXd& returns, const RiskSpectrum& spectrum,
                          const KernelEstimatorConfig& config = {}, const EstimateOptions& options = {});

/// Negates a loss-side report (point and interval) when sign == Return.
void apply_sign(EstimateReport& report, SignConvention sign);

// ---- asymptotic variance --------------------------------------------------

/// Weight J and quantile transform g of the data law. g is evaluated on an
/// ascending vector of levels in [0, 1] and may return infinities at 0 and 1.
struct AsymptoticSpec {
  std::function<double(double)> J;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> g;

  static AsymptoticSpec from_functions(std::function<double(double)> J, std::function<double(double)> g);
  /// J = phi, g = model quantile function (GPD, StudentT, Normal).
  static AsymptoticSpec for_model(const ModelSpec& model, const RiskSpectrum& spectrum);
  /// J = phi, g = kernel quantile function of the sample.
  static AsymptoticSpec plug_in(KernelCdf<double> cdf, const RiskSpectrum& spectrum,
                                InversionOptions inversion = {});
  /// J = phi, g = empirical quantile function of the sample.
  static AsymptoticSpec plug_in_empirical(Eigen::VectorXd data, const RiskSpectrum& spectrum);
};

struct AsymptoticVariance {
  double sigma2 = 0.0;         // on 2 * grid cells
  double sigma2_coarse = 0.0;  // on grid cells
  double difference = 0.0;     // sigma2 - sigma2_coarse
  double mu = 0.0;             // midpoint sum of J g
  bool clipped = false;        // an endpoint of g was non-finite and was moved in by clip
};

/// Midpoint tensor rule for sigma^2 = int int (s^t - st) J(s) J(t) dg(s) dg(t)
/// with Stieltjes increments of g over `grid` cells, then once more on
/// 2 * grid cells. Cells are graded toward 0 and 1; an infinite endpoint
/// value of g is replaced by g at `clip` (or half the first cell, if smaller).
AsymptoticVariance asymptotic_variance(const AsymptoticSpec& spec, int grid = 800, double clip = 1e-6);

/// point -/+ z_{(1+level)/2} sqrt(sigma2 / n).
std::pair<double, double> clt_interval(double point, double sigma2, Eigen::Index n, double level);

}  // namespace srm
