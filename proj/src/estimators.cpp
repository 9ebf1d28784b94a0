#include "srm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "srm/normal.hpp"

namespace srm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_sample(const Eigen::VectorXd& data, const char* who) {
  if (data.size() < 2) throw ParameterError(std::string(who) + ": need at least two observations");
  if (!data.allFinite()) throw InputError(std::string(who) + ": data contain non-finite values");
}

const char* kernel_name(KernelType k) { return k == KernelType::Gaussian ? "gaussian" : "epanechnikov"; }

}  // namespace

void KernelEstimatorConfig::validate() const {
  if (rule == BandwidthRule::Fixed && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
    throw ParameterError("kernel estimator: fixed bandwidth must be a positive finite number");
  if (!(inversion.tol > 0.0) || inversion.max_iter < 1)
    throw ParameterError("kernel estimator: inversion tolerance and iteration cap must be positive");
  if (!(clip > 0.0 && clip < 0.01)) throw ParameterError("kernel estimator: clip must lie in (0, 0.01)");
  if (layout.panels < 1 || layout.order < 1) throw ParameterError("kernel estimator: invalid panel layout");
  if (!(convergence_threshold > 0.0)) throw ParameterError("kernel estimator: convergence threshold must be > 0");
}

std::string describe(const KernelEstimatorConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "kernel=" << kernel_name(c.kernel) << " rule=" << (c.rule == BandwidthRule::Swanepoel ? "swanepoel" : "fixed");
  if (c.rule == BandwidthRule::Fixed) out << " bandwidth=" << c.bandwidth;
  out << " scaling=" << (c.scaling == BandwidthScaling::Verbatim ? "verbatim" : "equivariant")
      << " inversion_tol=" << c.inversion.tol << " inversion_max_iter=" << c.inversion.max_iter << " clip=" << c.clip
      << " panels=" << c.layout.panels << " order=" << c.layout.order << " end_levels=" << c.layout.end_levels
      << " grading=" << c.layout.grading_ratio << " check=" << (c.check_convergence ? 1 : 0)
      << " threshold=" << c.convergence_threshold;
  return out.str();
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

double units_factor(Units units) { return units == Units::Percent ? 100.0 : 1.0; }

std::string to_string(EstimatorKind kind) { return kind == EstimatorKind::Empirical ? "empirical" : "kernel"; }
std::string to_string(SignConvention sign) { return sign == SignConvention::Loss ? "loss" : "return"; }
std::string to_string(Units units) { return units == Units::Raw ? "raw" : "daily %"; }

EstimatorKind parse_estimator(std::string_view text) {
  if (text == "empirical") return EstimatorKind::Empirical;
  if (text == "kernel") return EstimatorKind::Kernel;
  throw ParameterError("unknown estimator '" + std::string(text) + "' (expected empirical or kernel)");
}

SignConvention parse_sign(std::string_view text) {
  if (text == "loss") return SignConvention::Loss;
  if (text == "return") return SignConvention::Return;
  throw ParameterError("unknown sign convention '" + std::string(text) + "' (expected loss or return)");
}

Units parse_units(std::string_view text) {
  if (text == "raw") return Units::Raw;
  if (text == "percent" || text == "daily %" || text == "pct") return Units::Percent;
  throw ParameterError("unknown units '" + std::string(text) + "' (expected raw or percent)");
}

double empirical_srm_loss(Eigen::VectorXd losses, const RiskSpectrum& spectrum) {
  if (losses.size() < 1) throw ParameterError("empirical_srm: empty data");
  std::stable_sort(losses.data(), losses.data() + losses.size());
  const auto w = lstat_weights<double>(DistortionFunction{spectrum}, losses.size());
  return pairwise_sum((w.weights.array() * losses.array()).matrix());
}

QuadratureRule<double> spectrum_rule(const RiskSpectrum& spectrum, double clip, const PanelLayout& layout) {
  std::vector<double> cuts{clip};
  for (double d : spectrum.discontinuities())
    if (d > clip && d < 1.0 - clip) cuts.push_back(d);
  cuts.push_back(1.0 - clip);
  const double span = cuts.back() - cuts.front();

  QuadratureRule<double> rule;
  std::vector<double> nodes;
  std::vector<double> weights;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s];
    const double b = cuts[s + 1];
    PanelLayout piece = layout;
    piece.panels = std::max(2, static_cast<int>(std::lround(layout.panels * (b - a) / span)));
    if (piece.end_levels < 0) piece.end_levels = graded_levels((b - a) / piece.panels, 10.0 * clip, layout.grading_ratio);
    const auto r = composite_gauss_legendre<double>(a, b, piece);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      nodes.push_back(r.nodes[i]);
      weights.push_back(r.weights[i] * phi(spectrum, r.nodes[i]));
    }
  }
  rule.nodes = Eigen::Map<Eigen::ArrayXd>(nodes.data(), static_cast<Eigen::Index>(nodes.size()));
  rule.weights = Eigen::Map<Eigen::ArrayXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return rule;
}

double kernel_srm_loss(const KernelCdf<double>& cdf, const QuadratureRule<double>& rule,
                       const InversionOptions& inversion) {
  const Eigen::VectorXd q = cdf.quantiles(rule.nodes, inversion);
  return (rule.weights * q.array()).sum() / rule.weights.sum();
}

std::optional<double> resolve_bandwidth(const Eigen::VectorXd& data, const KernelEstimatorConfig& config) {
  if (config.rule == BandwidthRule::Fixed) return config.bandwidth;
  if (data.size() >= 2 && data.minCoeff() == data.maxCoeff()) return std::nullopt;
  return bandwidth_swanepoel(data, config.scaling);
}

KernelSrmResult kernel_srm_loss(const Eigen::VectorXd& losses, const RiskSpectrum& spectrum,
                                const KernelEstimatorConfig& config) {
  config.validate();
  KernelSrmResult out;
  const auto b = resolve_bandwidth(losses, config);
  if (!b) {
    // Zero scale: the rule's bandwidth is undefined; return the b -> 0 limit,
    // which for constant data is the common value.
    out.value = losses[0];
    out.warnings.push_back("zero-scale data: bandwidth undefined, returned the small-bandwidth limit");
    return out;
  }
  out.bandwidth = *b;
  const KernelCdf<double> cdf(losses, *b, config.kernel);
  out.value = kernel_srm_loss(cdf, spectrum_rule(spectrum, config.clip, config.layout), config.inversion);
  if (config.check_convergence) {
    PanelLayout fine = config.layout;
    fine.panels *= 2;
    const double refined = kernel_srm_loss(cdf, spectrum_rule(spectrum, config.clip, fine), config.inversion);
    const double scale = std::max({std::abs(refined), std::abs(out.value), cdf.bandwidth()});
    out.refinement_delta = std::abs(refined - out.value) / scale;
    if (out.refinement_delta > config.convergence_threshold) {
      std::ostringstream msg;
      msg << "quadrature not converged: panel doubling changed the estimate by " << out.refinement_delta
          << " (relative)";
      out.warnings.push_back(msg.str());
    }
  }
  return out;
}

void apply_sign(EstimateReport& report, SignConvention sign) {
  report.sign = sign;
  if (sign == SignConvention::Loss) return;
  report.point = -report.point;
  if (report.ci) {
    const double lo = report.ci->lo;
    report.ci->lo = -report.ci->hi;
    report.ci->hi = -lo;
  }
}

namespace {

void attach_clt(EstimateReport& report, const AsymptoticSpec& spec, const EstimateOptions& options) {
  const auto v = asymptotic_variance(spec, options.variance_grid);
  const auto [lo, hi] = clt_interval(report.point, v.sigma2, report.n, options.ci_level);
  report.sd = std::sqrt(v.sigma2 / static_cast<double>(report.n));
  report.ci = ConfidenceInterval{lo, hi, options.ci_level, "clt"};
  if (v.clipped) report.warnings.push_back("asymptotic variance: quantile endpoints clipped");
}

}  // namespace

EstimateReport empirical_srm(const Eigen::VectorXd& returns, const RiskSpectrum& spectrum,
                             const EstimateOptions& options) {
  check_sample(returns, "empirical_srm");
  const Eigen::VectorXd losses = -units_factor(options.units) * returns;
  EstimateReport report;
  report.estimator = EstimatorKind::Empirical;
  report.n = returns.size();
  report.spectrum = spectrum;
  report.units = options.units;
  report.point = empirical_srm_loss(losses, spectrum);
  report.provenance.config = "estimator=empirical spectrum=" + to_string(spectrum);
  report.provenance.config_hash = fnv1a_hex(report.provenance.config);
  if (options.clt_interval) attach_clt(report, AsymptoticSpec::plug_in_empirical(losses, spectrum), options);
  apply_sign(report, options.sign);
  return report;
}

EstimateReport kernel_srm(const Eigen::VectorXd& returns, const RiskSpectrum& spectrum,
                          const KernelEstimatorConfig& config, const EstimateOptions& options) {
  check_sample(returns, "kernel_srm");
  const Eigen::VectorXd losses = -units_factor(options.units) * returns;
  auto result = kernel_srm_loss(losses, spectrum, config);
  EstimateReport report;
  report.estimator = EstimatorKind::Kernel;
  report.n = returns.size();
  report.spectrum = spectrum;
  report.units = options.units;
  report.point = result.value;
  if (result.bandwidth > 0.0) report.bandwidth = result.bandwidth;
  report.warnings = std::move(result.warnings);
  report.provenance.config = "estimator=kernel spectrum=" + to_string(spectrum) + " " + describe(config);
  report.provenance.config_hash = fnv1a_hex(report.provenance.config);
  if (options.clt_interval) {
    if (report.bandwidth) {
      attach_clt(report, AsymptoticSpec::plug_in(KernelCdf<double>(losses, *report.bandwidth, config.kernel), spectrum,
                                                  config.inversion),
                 options);
    } else {
      report.ci = ConfidenceInterval{report.point, report.point, options.ci_level, "clt"};
    }
  }
  apply_sign(report, options.sign);
  return report;
}

// ---- asymptotic variance --------------------------------------------------

AsymptoticSpec AsymptoticSpec::from_functions(std::function<double(double)> J, std::function<double(double)> g) {
  AsymptoticSpec spec;
  spec.J = std::move(J);
  spec.g = [g = std::move(g)](const Eigen::VectorXd& levels) {
    Eigen::VectorXd out(levels.size());
    for (Eigen::Index i = 0; i < levels.size(); ++i) out[i] = g(levels[i]);
    return out;
  };
  return spec;
}

AsymptoticSpec AsymptoticSpec::for_model(const ModelSpec& model, const RiskSpectrum& spectrum) {
  model.validate();
  if (model.kind == ModelKind::GARCH)
    throw UnsupportedQuantileError("asymptotic variance: GARCH has no analytic marginal quantile");
  return from_functions([spectrum](double u) { return phi(spectrum, u); },
                        [model](double u) {
                          if (u <= 0.0) return -kInf;
                          if (u >= 1.0) return kInf;
                          return u < 0.5 ? quantile(model, u) : quantile_upper(model, 1.0 - u);
                        });
}

AsymptoticSpec AsymptoticSpec::plug_in(KernelCdf<double> cdf, const RiskSpectrum& spectrum, InversionOptions inversion) {
  AsymptoticSpec spec;
  spec.J = [spectrum](double u) { return phi(spectrum, u); };
  spec.g = [cdf = std::move(cdf), inversion](const Eigen::VectorXd& levels) {
    Eigen::VectorXd out(levels.size());
    Eigen::Index first = 0;
    Eigen::Index last = levels.size();
    while (first < last && levels[first] <= 0.0) out[first++] = -kInf;
    while (last > first && levels[last - 1] >= 1.0) out[--last] = kInf;
    if (last > first) out.segment(first, last - first) = cdf.quantiles(levels.segment(first, last - first), inversion);
    return out;
  };
  return spec;
}

AsymptoticSpec AsymptoticSpec::plug_in_empirical(Eigen::VectorXd data, const RiskSpectrum& spectrum) {
  std::sort(data.data(), data.data() + data.size());
  const Eigen::Index n = data.size();
  return from_functions([spectrum](double u) { return phi(spectrum, u); },
                        [data = std::move(data), n](double u) {
                          // Left-continuous inverse, with the extreme order
                          // statistics at the endpoints.
                          auto k = static_cast<Eigen::Index>(std::ceil(u * static_cast<double>(n))) - 1;
                          return data[std::clamp<Eigen::Index>(k, 0, n - 1)];
                        });
}

AsymptoticVariance asymptotic_variance(const AsymptoticSpec& spec, int grid, double clip) {
  if (grid < 2) throw ParameterError("asymptotic_variance: grid must be >= 2");
  if (!(clip > 0.0 && clip < 1e-3)) throw ParameterError("asymptotic_variance: clip must lie in (0, 1e-3)");
  if (!spec.J || !spec.g) throw ParameterError("asymptotic_variance: J and g must be set");
  // Cells are uniform in v with u = (1 - cos(pi v)) / 2, so they shrink
  // quadratically toward both ends where g is steep.
  const int fine = 2 * grid;
  Eigen::VectorXd levels(fine + 1);
  for (int k = 0; 2 * k <= fine; ++k) {
    const double s = 0.5 * (1.0 - std::cos(std::numbers::pi * k / fine));
    levels[k] = s;
    levels[fine - k] = 1.0 - s;
  }
  Eigen::VectorXd gv = spec.g(levels);

  AsymptoticVariance out;
  // The clip never crosses the first interior node.
  clip = std::min(clip, 0.5 * levels[1]);
  if (!std::isfinite(gv[0])) {
    gv[0] = spec.g(Eigen::VectorXd::Constant(1, clip))[0];
    out.clipped = true;
  }
  if (!std::isfinite(gv[fine])) {
    gv[fine] = spec.g(Eigen::VectorXd::Constant(1, 1.0 - clip))[0];
    out.clipped = true;
  }
  if (!gv.allFinite()) throw NumericalError("asymptotic_variance: quantile transform is not finite inside (0, 1)");

  auto evaluate = [&](int cells, int step, double& mu) {
    Eigen::VectorXd a(cells);
    Eigen::VectorXd m(cells);
    mu = 0.0;
    for (int i = 0; i < cells; ++i) {
      const double lo = levels[i * step];
      const double hi = levels[(i + 1) * step];
      m[i] = 0.5 * (lo + hi);
      const double j = spec.J(m[i]);
      a[i] = j * (gv[(i + 1) * step] - gv[i * step]);
      mu += j * 0.5 * (gv[(i + 1) * step] + gv[i * step]) * (hi - lo);
    }
    // sum_ij min(m_i, m_j) a_i a_j with ascending m, via prefix sums.
    double below = 0.0;  // sum_{j<i} m_j a_j
    double quad = 0.0;
    for (int i = 0; i < cells; ++i) {
      quad += a[i] * (2.0 * below + m[i] * a[i]);
      below += m[i] * a[i];
    }
    const double lin = m.dot(a);
    return std::max(0.0, quad - lin * lin);
  };
  double mu_coarse = 0.0;
  out.sigma2_coarse = evaluate(grid, 2, mu_coarse);
  out.sigma2 = evaluate(fine, 1, out.mu);
  out.difference = out.sigma2 - out.sigma2_coarse;
  return out;
}

std::pair<double, double> clt_interval(double point, double sigma2, Eigen::Index n, double level) {
  if (!(sigma2 >= 0.0)) throw ParameterError("clt_interval: sigma^2 must be >= 0");
  if (n < 1) throw ParameterError("clt_interval: n must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("clt_interval: level must lie in (0, 1)");
  const double half = normal_quantile(0.5 * (1.0 + level)) * std::sqrt(sigma2 / static_cast<double>(n));
  return {point - half, point + half};
}

}  // namespace srm
