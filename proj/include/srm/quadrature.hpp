#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "srm/errors.hpp"

namespace srm {

/// Nodes (ascending) and weights of an interpolatory rule on some interval.
template <typename Scalar>
struct QuadratureRule {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> weights;

  Eigen::Index size() const { return nodes.size(); }

  template <typename F>
  Scalar integrate(F&& f) const {
    Scalar sum(0);
    for (Eigen::Index i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
    return sum;
  }
};

/// Gauss-Legendre rule on [-1, 1] by Golub-Welsch: nodes are the eigenvalues
/// of the symmetric Jacobi matrix of the Legendre recurrence, weights are
/// twice the squared first components of the normalized eigenvectors.
template <typename Scalar>
QuadratureRule<Scalar> gauss_legendre(int order) {
  if (order < 1) throw ParameterError("gauss_legendre: order must be >= 1");
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix jacobi = Matrix::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const Scalar kk(k);
    const Scalar off = kk / std::sqrt(Scalar(4) * kk * kk - Scalar(1));
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(jacobi);
  QuadratureRule<Scalar> rule;
  rule.nodes = solver.eigenvalues().array();
  rule.weights = Scalar(2) * solver.eigenvectors().row(0).transpose().array().square();
  // Symmetrize to remove the eigen-solver's last-bit asymmetry.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const Scalar x = (rule.nodes[j] - rule.nodes[i]) / Scalar(2);
    const Scalar w = (rule.weights[i] + rule.weights[j]) / Scalar(2);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = Scalar(0);
  return rule;
}

/// Panel structure of a composite rule on [a, b]: `panels` equal panels, with
/// the first and last panel further split into `end_levels` geometric pieces
/// shrinking by `grading_ratio` toward the interval ends.
struct PanelLayout {
  int panels = 64;
  int order = 8;
  int end_levels = 0;
  double grading_ratio = 0.25;
};

/// Number of geometric end levels needed so the innermost end piece of a
/// panel of width `panel_width` is no wider than `target`.
inline int graded_levels(double panel_width, double target, double ratio) {
  if (!(target > 0.0) || panel_width <= target) return 0;
  return static_cast<int>(std::ceil(std::log(panel_width / target) / std::log(1.0 / ratio)));
}

template <typename Scalar>
QuadratureRule<Scalar> composite_gauss_legendre(Scalar a, Scalar b, const PanelLayout& layout) {
  if (layout.panels < 1) throw ParameterError("composite_gauss_legendre: panels must be >= 1");
  if (!(b > a)) throw ParameterError("composite_gauss_legendre: empty interval");
  if (layout.end_levels < 0 || !(layout.grading_ratio > 0.0 && layout.grading_ratio < 1.0))
    throw ParameterError("composite_gauss_legendre: invalid end grading");

  const Scalar h = (b - a) / Scalar(layout.panels);
  const Scalar r(layout.grading_ratio);

  // Panel edges, ascending.
  std::vector<Scalar> edges;
  edges.push_back(a);
  Scalar width = h;
  std::vector<Scalar> left_inner;
  for (int k = 0; k < layout.end_levels; ++k) {
    width *= r;
    left_inner.push_back(a + width);
  }
  edges.insert(edges.end(), left_inner.rbegin(), left_inner.rend());
  for (int p = 1; p < layout.panels; ++p) edges.push_back(a + h * Scalar(p));
  width = h;
  for (int k = 0; k < layout.end_levels; ++k) {
    width *= r;
    edges.push_back(b - width);
  }
  edges.push_back(b);
  if (layout.panels == 1 && layout.end_levels > 0) {
    // A single panel graded at both ends: keep edges strictly increasing.
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }

  const QuadratureRule<Scalar> base = gauss_legendre<Scalar>(layout.order);
  const auto pieces = static_cast<Eigen::Index>(edges.size() - 1);
  QuadratureRule<Scalar> rule;
  rule.nodes.resize(pieces * layout.order);
  rule.weights.resize(pieces * layout.order);
  for (Eigen::Index p = 0; p < pieces; ++p) {
    const Scalar lo = edges[p];
    const Scalar hi = edges[p + 1];
    const Scalar mid = (lo + hi) / Scalar(2);
    const Scalar half = (hi - lo) / Scalar(2);
    rule.nodes.segment(p * layout.order, layout.order) = mid + half * base.nodes;
    rule.weights.segment(p * layout.order, layout.order) = half * base.weights;
  }
  return rule;
}

/// Integral of f over (0, upper] with dyadic panels [upper 2^-(k+1), upper 2^-k],
/// k < levels, each split at any `breaks` it contains and then into 2^refine
/// equal pieces. Mass below upper 2^-levels is dropped; with levels around 100
/// that is negligible for any integrable power or logarithmic endpoint
/// singularity.
template <typename Scalar, typename F>
Scalar graded_integral(F&& f, Scalar upper, int levels, int order, int refine,
                       const std::vector<Scalar>& breaks = {}) {
  const QuadratureRule<Scalar> base = gauss_legendre<Scalar>(order);
  const int pieces = 1 << refine;
  Scalar total(0);
  Scalar hi = upper;
  for (int k = 0; k < levels; ++k) {
    const Scalar lo = hi / Scalar(2);
    std::vector<Scalar> cuts{lo};
    for (Scalar b : breaks)
      if (b > lo && b < hi) cuts.push_back(b);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    Scalar level_sum(0);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const Scalar width = (cuts[c + 1] - cuts[c]) / Scalar(pieces);
      for (int p = 0; p < pieces; ++p) {
        const Scalar a = cuts[c] + width * Scalar(p);
        const Scalar mid = a + width / Scalar(2);
        const Scalar half = width / Scalar(2);
        for (Eigen::Index i = 0; i < base.size(); ++i)
          level_sum += half * base.weights[i] * f(mid + half * base.nodes[i]);
      }
    }
    total += level_sum;
    hi = lo;
  }
  return total;
}

namespace detail {
template <typename Derived>
typename Derived::Scalar pairwise_range(const Derived& v, Eigen::Index start, Eigen::Index len) {
  using Scalar = typename Derived::Scalar;
  if (len <= 16) {
    Scalar s(0);
    for (Eigen::Index i = start; i < start + len; ++i) s += v.coeff(i);
    return s;
  }
  const Eigen::Index half = len / 2;
  return pairwise_range(v, start, half) + pairwise_range(v, start + half, len - half);
}
}  // namespace detail

/// Pairwise (cascade) sum: error grows like log(n) rather than n, and the
/// result depends only on the element order, never on how work was split.
template <typename Derived>
typename Derived::Scalar pairwise_sum(const Eigen::DenseBase<Derived>& values) {
  const auto evaluated = values.derived().eval();
  return detail::pairwise_range(evaluated, 0, evaluated.size());
}

}  // namespace srm
