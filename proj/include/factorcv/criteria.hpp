#pragma once

// Panel information criterion IC1: ln V(d) + d * ((n+p)/(np)) * ln(np/(n+p)),
// where V(d) is the mean squared residual of the d-factor principal
// component fit.

#include <cmath>
#include <limits>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "factorcv/dcv.hpp"
#include "factorcv/errors.hpp"
#include "factorcv/factor_core.hpp"
#include "factorcv/spectra.hpp"

namespace factorcv {

template <typename Scalar>
struct IcCurve {
  Eigen::Index d_min = 0;
  Eigen::Index d_max = 0;
  VectorX<Scalar> v_values;
  VectorX<Scalar> ic_values;
  Eigen::Index selected = 0;
};

template <typename Scalar = double>
Scalar ic1_penalty(Eigen::Index n, Eigen::Index p) {
  const Scalar np = Scalar(n) * Scalar(p);
  const Scalar sum = Scalar(n) + Scalar(p);
  return (sum / np) * std::log(np / sum);
}

/// (1/np) * ||X - F L^T||_F^2 for the d-factor principal component pair.
template <typename Derived>
typename Derived::Scalar residual_variance(const Eigen::MatrixBase<Derived>& X,
                                           Eigen::Index d) {
  using Scalar = typename Derived::Scalar;
  if (d < 0 || d > std::min(X.rows(), X.cols()))
    throw DimensionError("residual_variance: d=" + std::to_string(d) +
                         " outside [0, min(n,p)]");
  const auto loading = estimate_loadings(X, d);
  const auto factors = principal_factors(X, loading);
  const MatrixX<Scalar> resid = X - factors.scores * loading.loadings.transpose();
  return resid.squaredNorm() / (Scalar(X.rows()) * Scalar(X.cols()));
}

/// V(d) for d in [d_min, d_max] from the eigenvalue tail,
/// V(d) = (1/np) sum_{t>d} lambda_t. Eigenvalues below the zero cutoff are
/// exact zeros, so an exactly fitting d gives V(d) == 0.
template <typename Scalar>
VectorX<Scalar> residual_variance_curve(const EigenSystem<Scalar>& system,
                                        Eigen::Index n, Eigen::Index d_min,
                                        Eigen::Index d_max) {
  const Eigen::Index p = system.dim();
  VectorX<Scalar> out(d_max - d_min + 1);
  const Scalar scale = Scalar(n) * Scalar(p);
  // Accumulate from the smallest eigenvalue up; after adding lambda_t (0-based)
  // the running sum is the residual for d = t.
  Scalar tail = 0;
  for (Eigen::Index t = p - 1; t >= d_min; --t) {
    tail += system.values(t);
    if (t <= d_max) out(t - d_min) = tail / scale;
  }
  return out;
}

template <typename Derived>
IcCurve<typename Derived::Scalar> ic1_curve(const Eigen::MatrixBase<Derived>& X,
                                            Eigen::Index d_min,
                                            Eigen::Index d_max) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (d_min < 0 || d_min > d_max)
    throw DimensionError("need 0 <= d_min <= d_max");
  if (d_max >= std::min(n, p))
    throw DimensionError("d_max must be < min(n, p) (d_max=" +
                         std::to_string(d_max) + ", n=" + std::to_string(n) +
                         ", p=" + std::to_string(p) + ")");

  IcCurve<Scalar> curve;
  curve.d_min = d_min;
  curve.d_max = d_max;
  curve.v_values = residual_variance_curve(gram_eigen(X), n, d_min, d_max);

  const Scalar penalty = ic1_penalty<Scalar>(n, p);
  curve.ic_values.resize(curve.v_values.size());
  for (Eigen::Index j = 0; j < curve.v_values.size(); ++j) {
    const Scalar v = curve.v_values(j);
    const Scalar fit = v > 0 ? std::log(v) : -std::numeric_limits<Scalar>::infinity();
    curve.ic_values(j) = fit + Scalar(d_min + j) * penalty;
  }
  curve.selected = select_d(
      std::span<const Scalar>(curve.ic_values.data(),
                              static_cast<std::size_t>(curve.ic_values.size())),
      d_min);
  return curve;
}

}  // namespace factorcv
