#pragma once

// Slow reference implementations used to check the library. None of them
// share code with it: eigenvectors come from cyclic Jacobi rotations, least
// squares from explicit normal-equation inverses, and the cross-validation
// curve from refitting every deletion from scratch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat normal_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Mat X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index s = 0; s < p; ++s) X(i, s) = z(rng);
  return X;
}

struct Eig {
  Vec values;   // descending
  Mat vectors;  // columns
};

// Cyclic Jacobi for a symmetric matrix.
inline Eig jacobi_eigen(Mat A) {
  const Eigen::Index n = A.rows();
  Mat V = Mat::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
    if (off <= 1e-30 * std::max(1.0, A.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (A(p, q) == 0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return A(a, a) > A(b, b); });
  Eig out{Vec(n), Mat(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = A(order[k], order[k]);
    out.vectors.col(k) = V.col(order[k]);
  }
  return out;
}

// L (L^T L)^-1 L^T by explicit inverse.
inline Mat projector(const Mat& L) {
  return L * (L.transpose() * L).inverse() * L.transpose();
}

// (L^T L)^-1 L^T x by explicit inverse.
inline Vec normal_equation_scores(const Mat& L, const Vec& x) {
  return (L.transpose() * L).inverse() * (L.transpose() * x);
}

// Mean over s of the squared error of predicting x_s from an OLS fit of x on
// L with row s of L and entry s of x removed.
inline double loo_refit_error(const Vec& x, const Mat& L) {
  const Eigen::Index p = L.rows(), d = L.cols();
  if (d == 0) return x.squaredNorm() / double(p);
  double total = 0;
  for (Eigen::Index s = 0; s < p; ++s) {
    Mat Ls(p - 1, d);
    Vec xs(p - 1);
    for (Eigen::Index r = 0, k = 0; r < p; ++r) {
      if (r == s) continue;
      Ls.row(k) = L.row(r);
      xs(k++) = x(r);
    }
    const Vec f = normal_equation_scores(Ls, xs);
    const double e = x(s) - L.row(s).dot(f);
    total += e * e;
  }
  return total / double(p);
}

struct BruteCurve {
  Vec values;
  Eigen::Index selected = 0;
};

// Double-loop DCV: for every fold, Jacobi-decompose the retained Gram matrix,
// rescale, and for every held-out row refit after deleting each variable.
inline BruteCurve brute_force_dcv(const Mat& X,
                                  const std::vector<std::vector<Eigen::Index>>& folds,
                                  Eigen::Index d_min, Eigen::Index d_max) {
  const Eigen::Index n = X.rows(), p = X.cols();
  Vec sums = Vec::Zero(d_max - d_min + 1);
  for (const auto& fold : folds) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::find(fold.begin(), fold.end(), i) == fold.end()) keep.push_back(i);
    Mat Xm(static_cast<Eigen::Index>(keep.size()), p);
    for (std::size_t r = 0; r < keep.size(); ++r) Xm.row(r) = X.row(keep[r]);
    const Mat G = Xm.transpose() * Xm;
    const Eig eig = jacobi_eigen(G);
    for (Eigen::Index d = d_min; d <= d_max; ++d) {
      const Mat tilde = std::sqrt(double(p)) * eig.vectors.leftCols(d);
      const Mat hat = G * tilde / double(Xm.rows());
      for (auto i : fold)
        sums(d - d_min) += loo_refit_error(X.row(i).transpose(), hat);
    }
  }
  BruteCurve out;
  out.values = sums / double(n);
  out.selected = d_min;
  double best = out.values(0);
  for (Eigen::Index j = 1; j < out.values.size(); ++j)
    if (out.values(j) < best) {
      best = out.values(j);
      out.selected = d_min + j;
    }
  return out;
}

// Largest principal angle (radians) between the column spaces of A and B,
// both with orthonormal columns.
inline double max_principal_angle(const Mat& A, const Mat& B) {
  Eigen::JacobiSVD<Mat> svd(A.transpose() * B);
  const double smallest = svd.singularValues().minCoeff();
  return std::acos(std::min(1.0, smallest));
}

}  // namespace oracle
