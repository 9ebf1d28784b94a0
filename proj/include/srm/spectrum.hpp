#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "srm/errors.hpp"

namespace srm {

// All spectra use the loss-quantile orientation: u -> 1 is the large-loss
// tail, phi is nondecreasing in u and the distortion D(u) is the running
// integral of phi from 0.

enum class SpectrumKind { Exponential, PowerLow, PowerHigh, ExpectedShortfall };

/// An admissible risk-aversion function, identified by family and parameter
/// (beta for Exponential, gamma for the power families, p for ES).
class RiskSpectrum {
 public:
  /// phi(u) = beta e^{-beta(1-u)} / (1 - e^{-beta}), 0 < beta < 700.
  static RiskSpectrum exponential(double beta);
  /// phi(u) = gamma (1-u)^{gamma-1}, 0 < gamma < 1.
  static RiskSpectrum power_low(double gamma);
  /// phi(u) = gamma u^{gamma-1}, gamma > 1.
  static RiskSpectrum power_high(double gamma);
  /// phi(u) = 1{u >= 1-p} / p, 0 < p <= 1 (p = 1 is the plain mean).
  static RiskSpectrum expected_shortfall(double p);

  SpectrumKind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return parameter_; }

  /// Breakpoints in (0, 1) where phi is discontinuous.
  std::vector<double> discontinuities() const;

  friend bool operator==(const RiskSpectrum&, const RiskSpectrum&) = default;

 private:
  RiskSpectrum(SpectrumKind kind, double parameter) : kind_(kind), parameter_(parameter) {}

  SpectrumKind kind_;
  double parameter_;
};

/// Parses the CLI/config syntax `exp:beta`, `powlow:gamma`, `powhigh:gamma`, `es:p`.
RiskSpectrum parse_spectrum(std::string_view text);
std::string to_string(const RiskSpectrum& spectrum);

/// phi(u) for 0 < u < 1.
template <typename Scalar>
Scalar phi(const RiskSpectrum& spectrum, Scalar u) {
  using std::exp;
  using std::expm1;
  using std::pow;
  const Scalar a(spectrum.parameter());
  switch (spectrum.kind()) {
    case SpectrumKind::Exponential:
      return a * exp(-a * (Scalar(1) - u)) / -expm1(-a);
    case SpectrumKind::PowerLow:
      return a * pow(Scalar(1) - u, a - Scalar(1));
    case SpectrumKind::PowerHigh:
      return a * pow(u, a - Scalar(1));
    case SpectrumKind::ExpectedShortfall:
      return u >= Scalar(1) - a ? Scalar(1) / a : Scalar(0);
  }
  return Scalar(0);
}

/// phi(1 - d), evaluated from the distance d to the upper end so the loss tail
/// keeps full relative precision.
template <typename Scalar>
Scalar phi_upper(const RiskSpectrum& spectrum, Scalar d) {
  using std::exp;
  using std::expm1;
  using std::pow;
  const Scalar a(spectrum.parameter());
  switch (spectrum.kind()) {
    case SpectrumKind::Exponential:
      return a * exp(-a * d) / -expm1(-a);
    case SpectrumKind::PowerLow:
      return a * pow(d, a - Scalar(1));
    case SpectrumKind::PowerHigh:
      return a * pow(Scalar(1) - d, a - Scalar(1));
    case SpectrumKind::ExpectedShortfall:
      return d <= a ? Scalar(1) / a : Scalar(0);
  }
  return Scalar(0);
}

/// D(u) = integral of phi over [0, u]; D(0) = 0 and D(1) = 1 exactly.
template <typename Scalar>
Scalar distortion(const RiskSpectrum& spectrum, Scalar u) {
  using std::exp;
  using std::expm1;
  using std::pow;
  if (!(u > Scalar(0))) return Scalar(0);
  if (!(u < Scalar(1))) return Scalar(1);
  const Scalar a(spectrum.parameter());
  switch (spectrum.kind()) {
    case SpectrumKind::Exponential:
      // e^{-a(1-u)} (1 - e^{-a u}) / (1 - e^{-a}); no e^{a u} overflow.
      return exp(-a * (Scalar(1) - u)) * -expm1(-a * u) / -expm1(-a);
    case SpectrumKind::PowerLow:
      return Scalar(1) - pow(Scalar(1) - u, a);
    case SpectrumKind::PowerHigh:
      return pow(u, a);
    case SpectrumKind::ExpectedShortfall: {
      const Scalar v = (u - (Scalar(1) - a)) / a;
      return v <= Scalar(0) ? Scalar(0) : (v >= Scalar(1) ? Scalar(1) : v);
    }
  }
  return Scalar(0);
}

/// Cumulative weight function induced by a spectrum.
struct DistortionFunction {
  RiskSpectrum spectrum;

  template <typename Scalar>
  Scalar operator()(Scalar u) const {
    return distortion(spectrum, u);
  }
};

template <typename Scalar>
struct LStatWeights {
  Eigen::Index n = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
  DistortionFunction distortion;
};

/// c_i = D(i/n) - D((i-1)/n), i = 1..n.
template <typename Scalar = double>
LStatWeights<Scalar> lstat_weights(const DistortionFunction& d, Eigen::Index n) {
  if (n < 1) throw ParameterError("lstat_weights: n must be >= 1");
  LStatWeights<Scalar> out{n, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(n), d};
  Scalar previous(0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    const Scalar current = i == n ? Scalar(1) : d(Scalar(i) / Scalar(n));
    out.weights[i - 1] = current - previous;
    previous = current;
  }
  return out;
}

enum class Orientation {
  LossQuantile,  // phi must be nondecreasing (this library's convention)
  Mirrored,      // phi must be nonincreasing (quantiles indexed by 1 - u)
};

struct AdmissibilityReport {
  bool nonnegative = false;
  bool normalized = false;
  bool monotone = false;
  double integral = 0.0;
  double min_value = 0.0;
  Orientation orientation = Orientation::LossQuantile;
  // Monotonicity fails in the requested orientation but holds in the other:
  // the function is admissible after mirroring u -> 1 - u.
  bool mirror_suggested = false;

  bool admissible() const { return nonnegative && normalized && monotone; }
};

/// Grid check of the admissibility axioms: phi >= 0, integral 1 within 1e-8,
/// monotone on a 10^4-point grid.
AdmissibilityReport validate_admissible(const RiskSpectrum& spectrum,
                                        Orientation orientation = Orientation::LossQuantile);
AdmissibilityReport validate_admissible(const std::function<double(double)>& phi,
                                        Orientation orientation = Orientation::LossQuantile,
                                        const std::vector<double>& breakpoints = {});

/// Largest negative second difference of D on an n-point grid; convex D gives
/// a value >= -tolerance.
double min_second_difference(const DistortionFunction& d, int grid = 10000);

}  // namespace srm
