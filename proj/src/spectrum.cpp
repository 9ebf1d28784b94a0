#include "srm/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "srm/quadrature.hpp"

namespace srm {

namespace {

constexpr int kMonotoneGrid = 10000;
constexpr double kNormalizationTolerance = 1e-8;
constexpr int kLevels = 200;

double parse_number(std::string_view text, std::string_view context) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ParameterError("cannot parse number '" + std::string(text) + "' in " + std::string(context));
  return value;
}

}  // namespace

RiskSpectrum RiskSpectrum::exponential(double beta) {
  if (!(beta > 0.0)) throw ParameterError("exponential spectrum: beta must be > 0");
  if (!(beta < 700.0)) throw ParameterError("exponential spectrum: beta must be < 700 (e^beta overflows)");
  return {SpectrumKind::Exponential, beta};
}

RiskSpectrum RiskSpectrum::power_low(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("powlow spectrum: gamma must lie in (0, 1)");
  return {SpectrumKind::PowerLow, gamma};
}

RiskSpectrum RiskSpectrum::power_high(double gamma) {
  if (!(gamma > 1.0) || !std::isfinite(gamma)) throw ParameterError("powhigh spectrum: gamma must be > 1");
  return {SpectrumKind::PowerHigh, gamma};
}

RiskSpectrum RiskSpectrum::expected_shortfall(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("es spectrum: p must lie in (0, 1]");
  return {SpectrumKind::ExpectedShortfall, p};
}

std::vector<double> RiskSpectrum::discontinuities() const {
  if (kind_ == SpectrumKind::ExpectedShortfall && parameter_ < 1.0) return {1.0 - parameter_};
  return {};
}

RiskSpectrum parse_spectrum(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw ParameterError("spectrum '" + std::string(text) + "' must look like exp:5, powlow:0.5, powhigh:2 or es:0.05");
  const auto family = text.substr(0, colon);
  const double value = parse_number(text.substr(colon + 1), "spectrum");
  if (family == "exp") return RiskSpectrum::exponential(value);
  if (family == "powlow") return RiskSpectrum::power_low(value);
  if (family == "powhigh") return RiskSpectrum::power_high(value);
  if (family == "es") return RiskSpectrum::expected_shortfall(value);
  throw ParameterError("unknown spectrum family '" + std::string(family) + "'");
}

std::string to_string(const RiskSpectrum& spectrum) {
  std::ostringstream out;
  out.precision(17);
  switch (spectrum.kind()) {
    case SpectrumKind::Exponential: out << "exp:"; break;
    case SpectrumKind::PowerLow: out << "powlow:"; break;
    case SpectrumKind::PowerHigh: out << "powhigh:"; break;
    case SpectrumKind::ExpectedShortfall: out << "es:"; break;
  }
  out << spectrum.parameter();
  return out.str();
}

namespace {

AdmissibilityReport check_grid(const std::function<double(double)>& phi, Orientation orientation,
                               double integral) {
  AdmissibilityReport report;
  report.orientation = orientation;
  report.integral = integral;
  report.normalized = std::fabs(integral - 1.0) <= kNormalizationTolerance;
  report.min_value = std::numeric_limits<double>::infinity();
  bool nondecreasing = true;
  bool nonincreasing = true;
  double previous = 0.0;
  for (int i = 0; i < kMonotoneGrid; ++i) {
    const double u = (i + 0.5) / kMonotoneGrid;
    const double value = phi(u);
    report.min_value = std::min(report.min_value, value);
    if (i > 0) {
      // Relative slack absorbs last-bit noise in flat stretches.
      const double slack = 1e-12 * std::max(std::fabs(value), std::fabs(previous));
      if (value < previous - slack) nondecreasing = false;
      if (value > previous + slack) nonincreasing = false;
    }
    previous = value;
  }
  report.nonnegative = report.min_value >= 0.0;
  const bool wanted = orientation == Orientation::LossQuantile ? nondecreasing : nonincreasing;
  const bool other = orientation == Orientation::LossQuantile ? nonincreasing : nondecreasing;
  report.monotone = wanted;
  report.mirror_suggested = !wanted && other;
  return report;
}

}  // namespace

AdmissibilityReport validate_admissible(const RiskSpectrum& spectrum, Orientation orientation) {
  // Integrate each half toward its endpoint so power singularities at u = 1
  // are resolved in the distance variable.
  const std::vector<double> breaks_low = [&] {
    std::vector<double> b;
    for (double x : spectrum.discontinuities())
      if (x < 0.5) b.push_back(x);
    return b;
  }();
  const std::vector<double> breaks_high = [&] {
    std::vector<double> b;
    for (double x : spectrum.discontinuities())
      if (x >= 0.5) b.push_back(1.0 - x);
    return b;
  }();
  const double lower = graded_integral<double>([&](double u) { return phi(spectrum, u); }, 0.5,
                                               kLevels, 8, 1, breaks_low);
  const double upper = graded_integral<double>([&](double d) { return phi_upper(spectrum, d); },
                                               0.5, kLevels, 8, 1, breaks_high);
  const RiskSpectrum copy = spectrum;
  return check_grid([copy](double u) { return phi(copy, u); }, orientation, lower + upper);
}

AdmissibilityReport validate_admissible(const std::function<double(double)>& phi_fn,
                                        Orientation orientation,
                                        const std::vector<double>& breakpoints) {
  std::vector<double> edges{0.0};
  for (double b : breakpoints)
    if (b > 0.0 && b < 1.0) edges.push_back(b);
  edges.push_back(1.0);
  std::sort(edges.begin(), edges.end());
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double width = edges[i + 1] - edges[i];
    PanelLayout layout;
    layout.panels = 64;
    layout.end_levels = graded_levels(width / layout.panels, 1e-14, layout.grading_ratio);
    integral += composite_gauss_legendre<double>(edges[i], edges[i + 1], layout).integrate(phi_fn);
  }
  return check_grid(phi_fn, orientation, integral);
}

double min_second_difference(const DistortionFunction& d, int grid) {
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 1; i < grid; ++i) {
    const double a = d(static_cast<double>(i - 1) / grid);
    const double b = d(static_cast<double>(i) / grid);
    const double c = d(static_cast<double>(i + 1) / grid);
    worst = std::min(worst, a - 2.0 * b + c);
  }
  return worst;
}

}  // namespace srm
