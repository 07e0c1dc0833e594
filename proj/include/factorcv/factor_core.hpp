#pragma once

// Principal-component loadings and factors, the rescaled per-fold loadings,
// and the least-squares machinery (leverages, scores) that regresses a row of
// data on a loading matrix.

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "factorcv/errors.hpp"
#include "factorcv/spectra.hpp"

namespace factorcv {

/// A p x d loading matrix. Unrescaled estimates satisfy L^T L / p = I_d.
template <typename Scalar>
struct LoadingEstimate {
  MatrixX<Scalar> loadings;
  bool rescaled = false;
  std::optional<int> excluded_fold;

  Eigen::Index working_d() const { return loadings.cols(); }
  Eigen::Index variables() const { return loadings.rows(); }
};

/// n x d factor scores, one row per observation.
template <typename Scalar>
struct FactorScores {
  MatrixX<Scalar> scores;
};

/// Relative tolerance on squared singular values of a loading matrix below
/// which a direction counts as missing.
inline constexpr double kRankRelTol = 1e-10;

/// sqrt(p) times the leading d eigenvectors of an already decomposed Gram
/// matrix.
template <typename Scalar>
LoadingEstimate<Scalar> estimate_loadings(const EigenSystem<Scalar>& system,
                                          Eigen::Index d) {
  const Eigen::Index p = system.dim();
  if (d < 0 || d > p)
    throw DimensionError("working d=" + std::to_string(d) +
                         " outside [0, p=" + std::to_string(p) + "]");
  LoadingEstimate<Scalar> out;
  out.loadings = std::sqrt(Scalar(p)) * system.vectors.leftCols(d);
  return out;
}

template <typename Derived>
LoadingEstimate<typename Derived::Scalar> estimate_loadings(
    const Eigen::MatrixBase<Derived>& X, Eigen::Index d) {
  if (d < 0 || d > X.cols())
    throw DimensionError("working d=" + std::to_string(d) +
                         " outside [0, p=" + std::to_string(X.cols()) + "]");
  return estimate_loadings(gram_eigen(X), d);
}

/// Factors paired with unrescaled loadings: F = X L / p.
template <typename Derived, typename Scalar = typename Derived::Scalar>
FactorScores<Scalar> principal_factors(const Eigen::MatrixBase<Derived>& X,
                                       const LoadingEstimate<Scalar>& loading) {
  if (X.cols() != loading.variables())
    throw DimensionError("data has " + std::to_string(X.cols()) +
                         " columns but loadings have " +
                         std::to_string(loading.variables()) + " rows");
  return {(X * loading.loadings) / Scalar(X.cols())};
}

/// (1/m) X_minus^T X_minus L, where m is the number of retained rows.
template <typename Derived, typename Scalar = typename Derived::Scalar>
LoadingEstimate<Scalar> rescale_loadings(
    const Eigen::MatrixBase<Derived>& X_minus,
    const LoadingEstimate<Scalar>& tilde) {
  if (tilde.rescaled)
    throw UsageError("loadings are already rescaled");
  if (X_minus.cols() != tilde.variables())
    throw DimensionError("retained data has " +
                         std::to_string(X_minus.cols()) +
                         " columns but loadings have " +
                         std::to_string(tilde.variables()) + " rows");
  if (X_minus.rows() == 0) throw EmptyMatrix();

  LoadingEstimate<Scalar> out;
  const MatrixX<Scalar> scores = X_minus * tilde.loadings;
  out.loadings = (X_minus.transpose() * scores) / Scalar(X_minus.rows());
  out.rescaled = true;
  out.excluded_fold = tilde.excluded_fold;
  return out;
}

/// Thin SVD of a loading matrix, giving the orthogonal projector onto its
/// column space. Directions whose squared singular value falls below
/// kRankRelTol times the largest are treated as absent.
template <typename Scalar>
class LoadingProjector {
 public:
  template <typename Derived>
  explicit LoadingProjector(const Eigen::MatrixBase<Derived>& L)
      : p_(L.rows()), d_(L.cols()) {
    if (d_ == 0) {
      basis_ = MatrixX<Scalar>::Zero(p_, 0);
      coef_ = MatrixX<Scalar>::Zero(0, 0);
      return;
    }
    Eigen::JacobiSVD<MatrixX<Scalar>> svd(L,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const Scalar largest = sv(0) * sv(0);
    rank_ = 0;
    for (Eigen::Index t = 0; t < sv.size(); ++t)
      if (largest > 0 && sv(t) * sv(t) > Scalar(kRankRelTol) * largest) ++rank_;
    basis_ = svd.matrixU().leftCols(rank_);
    // f = V S^-1 U^T x, stored as the d x r map applied to U^T x.
    coef_ = svd.matrixV().leftCols(rank_) *
            sv.head(rank_).cwiseInverse().asDiagonal();
  }

  Eigen::Index rank() const { return rank_; }
  Eigen::Index working_d() const { return d_; }
  bool full_rank() const { return rank_ == d_; }

  /// Diagonal of the projection matrix onto the column space.
  VectorX<Scalar> leverages() const {
    return basis_.rowwise().squaredNorm();
  }

  /// Minimum-norm least-squares coefficients, one row per row of X.
  template <typename Derived>
  MatrixX<Scalar> scores(const Eigen::MatrixBase<Derived>& X) const {
    return (X * basis_) * coef_.transpose();
  }

  /// Least-squares fitted values L f for each row of X.
  template <typename Derived>
  MatrixX<Scalar> fitted(const Eigen::MatrixBase<Derived>& X) const {
    return (X * basis_) * basis_.transpose();
  }

 private:
  Eigen::Index p_;
  Eigen::Index d_;
  Eigen::Index rank_ = 0;
  MatrixX<Scalar> basis_;
  MatrixX<Scalar> coef_;
};

namespace detail {

template <typename Scalar>
LoadingProjector<Scalar> full_rank_projector(
    const LoadingEstimate<Scalar>& loading) {
  LoadingProjector<Scalar> proj(loading.loadings);
  if (!proj.full_rank())
    throw RankDeficient("loading matrix has effective rank " +
                            std::to_string(proj.rank()) + " < d=" +
                            std::to_string(loading.working_d()),
                        loading.excluded_fold,
                        static_cast<int>(loading.working_d()));
  return proj;
}

}  // namespace detail

/// Leverages w_s: diagonal of L (L^T L)^-1 L^T.
template <typename Scalar>
VectorX<Scalar> projection_leverages(const LoadingEstimate<Scalar>& loading) {
  return detail::full_rank_projector(loading).leverages();
}

/// Row i holds (L^T L)^-1 L^T x_i.
template <typename Derived, typename Scalar = typename Derived::Scalar>
FactorScores<Scalar> ols_factor_scores(const LoadingEstimate<Scalar>& loading,
                                       const Eigen::MatrixBase<Derived>& X) {
  if (X.cols() != loading.variables())
    throw DimensionError("data has " + std::to_string(X.cols()) +
                         " columns but loadings have " +
                         std::to_string(loading.variables()) + " rows");
  return {detail::full_rank_projector(loading).scores(X)};
}

}  // namespace factorcv
