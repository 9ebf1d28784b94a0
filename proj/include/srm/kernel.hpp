#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "srm/errors.hpp"
#include "srm/normal.hpp"

namespace srm {

/// Kernels with bounded density, zero mean and finite variance. Only kernels
/// meeting those requirements are representable.
enum class KernelType {
  Gaussian,      // K = Phi
  Epanechnikov,  // k(z) = 3/4 (1 - z^2) on [-1, 1], K its integral
};

namespace kernels {

template <typename Scalar>
Scalar integrated(KernelType kernel, Scalar z) {
  if (kernel == KernelType::Gaussian) return normal_cdf(z);
  if (z <= Scalar(-1)) return Scalar(0);
  if (z >= Scalar(1)) return Scalar(1);
  return (Scalar(2) + Scalar(3) * z - z * z * z) / Scalar(4);
}

template <typename Scalar>
Scalar density(KernelType kernel, Scalar z) {
  if (kernel == KernelType::Gaussian) return normal_pdf(z);
  if (z <= Scalar(-1) || z >= Scalar(1)) return Scalar(0);
  return Scalar(0.75) * (Scalar(1) - z * z);
}

/// |z| beyond which K(z) is exactly 0 or 1 in double precision (the Gaussian
/// tail Phi(-9) ~ 1e-19 is below the resolution of any sum we form).
template <typename Scalar>
Scalar support_radius(KernelType kernel) {
  return kernel == KernelType::Gaussian ? Scalar(9) : Scalar(1);
}

}  // namespace kernels

/// Leading constant of the smoothing rule, [375 sqrt(3) / (28 pi)]^{1/7}.
inline double swanepoel_constant() {
  return std::pow(375.0 * std::numbers::sqrt3 / (28.0 * std::numbers::pi), 1.0 / 7.0);
}

enum class BandwidthScaling {
  Verbatim,          // b = C sigma^{-4/7} n^{-1/7}
  ScaleEquivariant,  // b = C sigma n^{-1/7}
};

/// min{S, IQR/1.349} with IQR from type-7 sample quartiles; when one of the
/// two is zero the other is used.
template <typename Derived>
double robust_scale(const Eigen::MatrixBase<Derived>& data) {
  const Eigen::Index n = data.size();
  if (n < 2) throw ParameterError("bandwidth: need at least two observations");
  Eigen::VectorXd sorted = data.template cast<double>();
  std::sort(sorted.data(), sorted.data() + n);
  const double mean = sorted.mean();
  const double sd = std::sqrt((sorted.array() - mean).square().sum() / static_cast<double>(n - 1));
  auto type7 = [&](double p) {
    const double h = (n - 1) * p;
    const auto lo = static_cast<Eigen::Index>(std::floor(h));
    const auto hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
  };
  const double iqr_scale = (type7(0.75) - type7(0.25)) / 1.349;
  if (!(sd > 0.0) && !(iqr_scale > 0.0)) throw ParameterError("bandwidth: data are all identical (zero scale)");
  if (!(iqr_scale > 0.0)) return sd;
  if (!(sd > 0.0)) return iqr_scale;
  return std::min(sd, iqr_scale);
}

inline double swanepoel_bandwidth_from_scale(double sigma, Eigen::Index n,
                                             BandwidthScaling scaling = BandwidthScaling::Verbatim) {
  const double n_term = std::pow(static_cast<double>(n), -1.0 / 7.0);
  const double s_term = scaling == BandwidthScaling::Verbatim ? std::pow(sigma, -4.0 / 7.0) : sigma;
  return swanepoel_constant() * s_term * n_term;
}

template <typename Derived>
double bandwidth_swanepoel(const Eigen::MatrixBase<Derived>& data,
                           BandwidthScaling scaling = BandwidthScaling::Verbatim) {
  return swanepoel_bandwidth_from_scale(robust_scale(data), data.size(), scaling);
}

struct InversionOptions {
  double tol = 1e-10;
  int max_iter = 200;
};

/// Kernel distribution function F(x) = (1/n) sum K((x - X_i)/b).
/// Immutable after construction; all members are thread-safe.
template <typename Scalar = double>
class KernelCdf {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  KernelCdf(Vector data, Scalar bandwidth, KernelType kernel = KernelType::Gaussian)
      : data_(std::move(data)), bandwidth_(bandwidth), kernel_(kernel) {
    if (data_.size() < 1) throw ParameterError("KernelCdf: empty data");
    if (!(bandwidth_ > Scalar(0)) || !std::isfinite(static_cast<double>(bandwidth_)))
      throw ParameterError("KernelCdf: bandwidth must be a positive finite number");
    std::sort(data_.data(), data_.data() + data_.size());
  }

  const Vector& data() const noexcept { return data_; }
  Scalar bandwidth() const noexcept { return bandwidth_; }
  KernelType kernel() const noexcept { return kernel_; }
  Eigen::Index size() const noexcept { return data_.size(); }

  Scalar operator()(Scalar x) const { return evaluate(x).first; }

  Scalar density(Scalar x) const { return evaluate(x).second; }

  /// (F(x), f(x)) from a single pass over the points within the kernel radius.
  std::pair<Scalar, Scalar> evaluate(Scalar x) const {
    const Scalar radius = kernels::support_radius<Scalar>(kernel_) * bandwidth_;
    const Scalar* begin = data_.data();
    const Scalar* end = begin + data_.size();
    // Points at or below x - radius contribute exactly 1, points at or above
    // x + radius contribute 0.
    const Scalar* first = std::upper_bound(begin, end, x - radius);
    const Scalar* last = std::lower_bound(first, end, x + radius);
    Scalar cdf_sum(0);
    Scalar pdf_sum(0);
    for (const Scalar* p = first; p != last; ++p) {
      const Scalar z = (x - *p) / bandwidth_;
      cdf_sum += kernels::integrated(kernel_, z);
      pdf_sum += kernels::density(kernel_, z);
    }
    const Scalar n(data_.size());
    return {(Scalar(first - begin) + cdf_sum) / n, pdf_sum / (n * bandwidth_)};
  }

  Scalar support_lo() const { return data_[0] - Scalar(10) * bandwidth_; }
  Scalar support_hi() const { return data_[data_.size() - 1] + Scalar(10) * bandwidth_; }

  /// x with |F(x) - u| <= tol, 0 < u < 1.
  Scalar quantile(Scalar u, const InversionOptions& options = {}) const {
    check_level(u);
    auto [lo, f_lo] = lower_bracket(u, options);
    auto [hi, f_hi] = upper_bracket(u, options);
    (void)f_lo;
    (void)f_hi;
    return solve(u, lo, hi, initial_guess(u, lo, hi), options).first;
  }

  /// Quantiles at an ascending sequence of levels; each solve starts from the
  /// previous solution, which also brackets it from below.
  template <typename Derived>
  Vector quantiles(const Eigen::DenseBase<Derived>& levels, const InversionOptions& options = {}) const {
    const Eigen::Index m = levels.size();
    Vector out(m);
    if (m == 0) return out;
    Scalar lo = Scalar(0);
    Scalar hi = Scalar(0);
    Scalar prev_x(0);
    Scalar prev_f(0);
    Scalar prev_density(0);
    for (Eigen::Index j = 0; j < m; ++j) {
      const Scalar u = levels[j];
      check_level(u);
      if (j > 0 && u < levels[j - 1]) throw ParameterError("KernelCdf::quantiles: levels must be ascending");
      Scalar start;
      if (j == 0) {
        lo = lower_bracket(u, options).first;
        hi = upper_bracket(u, options).first;
        start = initial_guess(u, lo, hi);
      } else {
        if (std::abs(prev_f - u) <= Scalar(options.tol)) {
          out[j] = prev_x;
          continue;
        }
        // F(support_hi) is 1 in floating point, so the first upper bracket
        // serves every later level.
        lo = prev_x;
        start = prev_density > Scalar(0) ? prev_x + (u - prev_f) / prev_density : (lo + hi) / Scalar(2);
        if (!(start > lo && start < hi)) start = (lo + hi) / Scalar(2);
      }
      auto [x, fx] = solve(u, lo, hi, start, options);
      out[j] = x;
      prev_x = x;
      prev_f = fx.first;
      prev_density = fx.second;
    }
    return out;
  }

 private:
  static void check_level(Scalar u) {
    if (!(u > Scalar(0) && u < Scalar(1))) throw ParameterError("kernel quantile: level must lie in (0, 1)");
  }

  std::pair<Scalar, Scalar> lower_bracket(Scalar u, const InversionOptions& options) const {
    Scalar lo = support_lo();
    Scalar width = Scalar(10) * bandwidth_;
    for (int k = 0; k < options.max_iter; ++k) {
      const Scalar f = (*this)(lo);
      if (f < u) return {lo, f};
      lo -= width;
      width *= Scalar(2);
    }
    throw InversionError("kernel quantile: could not bracket from below", static_cast<double>(lo),
                         static_cast<double>(support_hi()));
  }

  std::pair<Scalar, Scalar> upper_bracket(Scalar u, const InversionOptions& options) const {
    Scalar hi = support_hi();
    Scalar width = Scalar(10) * bandwidth_;
    for (int k = 0; k < options.max_iter; ++k) {
      const Scalar f = (*this)(hi);
      if (f > u) return {hi, f};
      hi += width;
      width *= Scalar(2);
    }
    throw InversionError("kernel quantile: could not bracket from above", static_cast<double>(support_lo()),
                         static_cast<double>(hi));
  }

  Scalar initial_guess(Scalar u, Scalar lo, Scalar hi) const {
    const Eigen::Index n = data_.size();
    auto index = static_cast<Eigen::Index>(std::ceil(static_cast<double>(u) * static_cast<double>(n))) - 1;
    index = std::clamp<Eigen::Index>(index, 0, n - 1);
    const Scalar guess = data_[index];
    return guess > lo && guess < hi ? guess : (lo + hi) / Scalar(2);
  }

  // Newton steps kept inside a shrinking bracket; falls back to bisection
  // whenever a step leaves it or the density vanishes.
  std::pair<Scalar, std::pair<Scalar, Scalar>> solve(Scalar u, Scalar lo, Scalar hi, Scalar x,
                                                     const InversionOptions& options) const {
    const Scalar tol(options.tol);
    for (int iter = 0; iter < options.max_iter; ++iter) {
      const auto fx = evaluate(x);
      const Scalar residual = fx.first - u;
      if (std::abs(residual) <= tol) return {x, fx};
      if (residual < Scalar(0)) lo = x; else hi = x;
      Scalar next = fx.second > Scalar(0) ? x - residual / fx.second : (lo + hi) / Scalar(2);
      if (!(next > lo && next < hi)) next = lo + (hi - lo) / Scalar(2);
      if (next == x || hi - lo <= Scalar(0)) break;
      x = next;
    }
    throw InversionError("kernel quantile: inversion did not reach the tolerance", static_cast<double>(lo),
                         static_cast<double>(hi));
  }

  Vector data_;
  Scalar bandwidth_;
  KernelType kernel_;
};

/// Weight functions for the weighted sup-distance on (0, 1).
struct WeightFunctionH {
  enum class Form {
    H,      // [t(1-t)]^{1 - delta/2}
    HStar,  // [t(1-t)]^{1 - delta/4}
    Unit,   // 1 (plain sup-distance)
  };

  double delta = 0.2;
  Form form = Form::H;

  static WeightFunctionH h(double delta) { return make(delta, Form::H); }
  static WeightFunctionH h_star(double delta) { return make(delta, Form::HStar); }
  static WeightFunctionH unit() { return {0.0, Form::Unit}; }

  double operator()(double t) const {
    switch (form) {
      case Form::H: return std::pow(t * (1.0 - t), 1.0 - delta / 2.0);
      case Form::HStar: return std::pow(t * (1.0 - t), 1.0 - delta / 4.0);
      case Form::Unit: return 1.0;
    }
    return 1.0;
  }

 private:
  static WeightFunctionH make(double delta, Form form) {
    if (!(delta > 0.0 && delta < 2.0)) throw ParameterError("weight function: delta must lie in (0, 2)");
    return {delta, form};
  }
};

/// Grid approximation of sup_t |F(t) - t| / h(t) over t = k/(G+1), k = 1..G.
template <typename Scalar>
double dh_distance(const KernelCdf<Scalar>& cdf, const WeightFunctionH& h, int grid_size = 1000) {
  if (grid_size < 100) throw ParameterError("dh_distance: grid_size must be >= 100");
  double sup = 0.0;
  for (int k = 1; k <= grid_size; ++k) {
    const double t = static_cast<double>(k) / (grid_size + 1);
    sup = std::max(sup, std::abs(static_cast<double>(cdf(Scalar(t))) - t) / h(t));
  }
  return sup;
}

}  // namespace srm
