#pragma once

// Symmetric eigen-decomposition of Gram matrices X^T X, computed from the SVD
// of X. Every estimator in the library reads its eigenvalues and eigenvectors
// through gram_eigen().

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "factorcv/errors.hpp"

namespace factorcv {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Eigenvalues (nonincreasing) and orthonormal eigenvectors of a p x p Gram
/// matrix. Column t of `vectors` pairs with `values[t]`.
template <typename Scalar>
struct EigenSystem {
  VectorX<Scalar> values;
  MatrixX<Scalar> vectors;

  Eigen::Index dim() const { return values.size(); }
};

/// Relative cutoff under which a squared singular value is reported as an
/// exact zero eigenvalue.
inline constexpr double kZeroEigenRelTol = 1e-12;

/// Flips each column so that its entry of largest magnitude is positive.
/// Ties go to the lowest row index.
template <typename Derived>
void canonicalize_signs(Eigen::MatrixBase<Derived>& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index best = 0;
    auto best_abs = typename Derived::Scalar(-1);
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const auto a = std::abs(vectors(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (vectors.rows() > 0 && vectors(best, c) < 0) vectors.col(c) *= -1;
  }
}

namespace detail {

// Rows sorted lexicographically. X^T X does not depend on row order, so
// decomposing a canonical ordering makes the result bit-identical under any
// row permutation of the input.
template <typename Derived>
MatrixX<typename Derived::Scalar> canonical_row_order(
    const Eigen::MatrixBase<Derived>& X) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(X.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     for (Eigen::Index c = 0; c < X.cols(); ++c) {
                       if (X(a, c) < X(b, c)) return true;
                       if (X(b, c) < X(a, c)) return false;
                     }
                     return false;
                   });
  MatrixX<typename Derived::Scalar> out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    out.row(i) = X.row(order[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace detail

/// Eigen-decomposition of X^T X via the SVD of X (eigenvalues are the squared
/// singular values). Eigenvalues below 1e-12 * largest are set to exactly 0,
/// and eigenvector signs are canonicalized.
template <typename Derived>
EigenSystem<typename Derived::Scalar> gram_eigen(
    const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  if (X.rows() == 0 || X.cols() == 0) throw EmptyMatrix();
  if (!X.allFinite()) throw NonFiniteInput();

  const MatrixX<Scalar> ordered = detail::canonical_row_order(X);
  Eigen::BDCSVD<MatrixX<Scalar>> svd(ordered, Eigen::ComputeFullV);

  const Eigen::Index p = X.cols();
  const auto& sv = svd.singularValues();

  EigenSystem<Scalar> out;
  out.values = VectorX<Scalar>::Zero(p);
  out.values.head(sv.size()) = sv.array().square().matrix();
  const Scalar cutoff = Scalar(kZeroEigenRelTol) * out.values(0);
  for (Eigen::Index t = 0; t < p; ++t)
    if (out.values(t) < cutoff) out.values(t) = Scalar(0);

  out.vectors = svd.matrixV();
  canonicalize_signs(out.vectors);
  return out;
}

}  // namespace factorcv
