#pragma once

// Double cross-validation for the number of factors.
//
// Outer loop: rows are split into K folds; loadings are estimated on the rows
// outside each fold and rescaled by the retained Gram matrix. Inner loop: each
// held-out entry x_is is predicted from a least-squares fit of x_i on the
// loadings with variable s deleted. The inner loop never refits: the deleted-
// variable residual is the full-fit residual divided by (1 - w_s), with w_s
// the leverage of variable s.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "factorcv/errors.hpp"
#include "factorcv/factor_core.hpp"
#include "factorcv/parallel.hpp"
#include "factorcv/spectra.hpp"

namespace factorcv {

/// Disjoint, balanced partition of {0..n-1}. Indices inside a fold are sorted.
struct FoldPlan {
  std::vector<std::vector<Eigen::Index>> folds;
  std::uint64_t seed = 0;

  std::size_t fold_count() const { return folds.size(); }
  Eigen::Index rows() const {
    Eigen::Index n = 0;
    for (const auto& f : folds) n += static_cast<Eigen::Index>(f.size());
    return n;
  }

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

inline FoldPlan make_folds(Eigen::Index n, Eigen::Index K, std::uint64_t seed) {
  if (K < 2 || K > n)
    throw BadFoldCount("fold count K=" + std::to_string(K) +
                       " must satisfy 2 <= K <= n=" + std::to_string(n));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  FoldPlan plan;
  plan.seed = seed;
  plan.folds.resize(static_cast<std::size_t>(K));
  for (std::size_t j = 0; j < order.size(); ++j)
    plan.folds[j % static_cast<std::size_t>(K)].push_back(order[j]);
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

/// Leverages above this make the deleted-variable prediction undefined.
inline constexpr double kLeverageCeiling = 1.0 - 1e-8;

namespace detail {

template <typename Derived, typename Scalar>
void check_leverages(const Eigen::MatrixBase<Derived>& w,
                     std::optional<int> fold, std::optional<int> d) {
  for (Eigen::Index s = 0; s < w.size(); ++s)
    if (w(s) > Scalar(kLeverageCeiling))
      throw LeverageSaturated("leverage of variable " + std::to_string(s + 1) +
                                  " is " + std::to_string(double(w(s))) +
                                  ", prediction with it deleted is undefined",
                              fold, d);
}

// Mean over s of ((x_is - fit_is) / (1 - w_s))^2 for every row of X.
template <typename Scalar, typename DX, typename DW>
VectorX<Scalar> deleted_variable_errors(const LoadingProjector<Scalar>& proj,
                                        const Eigen::MatrixBase<DX>& X,
                                        const Eigen::MatrixBase<DW>& w) {
  const MatrixX<Scalar> resid = X - proj.fitted(X);
  const VectorX<Scalar> inv = (Scalar(1) - w.array()).inverse().matrix();
  return (resid * inv.asDiagonal()).rowwise().squaredNorm() / Scalar(X.cols());
}

}  // namespace detail

/// Deleted-variable prediction error for every row of X against one loading
/// matrix: V_i = (1/p) sum_s (1 - w_s)^-2 (x_is - f_i^T l_s)^2.
template <typename Derived, typename Scalar = typename Derived::Scalar>
VectorX<Scalar> press_errors(const Eigen::MatrixBase<Derived>& X,
                             const LoadingEstimate<Scalar>& loading,
                             const VectorX<Scalar>& w) {
  const Eigen::Index p = loading.variables();
  if (X.cols() != p || w.size() != p)
    throw DimensionError("press: data, loadings and leverages disagree on p");
  const auto d = static_cast<int>(loading.working_d());
  detail::check_leverages<VectorX<Scalar>, Scalar>(w, loading.excluded_fold, d);
  const auto proj = detail::full_rank_projector(loading);
  return detail::deleted_variable_errors(proj, X, w);
}

template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar press_error(const Eigen::MatrixBase<Derived>& x,
                   const LoadingEstimate<Scalar>& loading,
                   const VectorX<Scalar>& w) {
  const MatrixX<Scalar> row = x.derived().reshaped(1, x.size());
  return press_errors(row, loading, w)(0);
}

enum class TransposePolicy { never, automatic, always };

/// What to do when a fold's rescaled loadings have fewer than d effective
/// columns, which happens when the retained rows have rank below d.
enum class RankPolicy {
  /// Regress on the effective columns only. Because trailing columns carry
  /// (numerically) zero loadings, this is the minimum-norm least-squares
  /// predictor and DCV(d) equals DCV(rank) exactly.
  project,
  /// Raise RankDeficient naming the fold and d.
  strict,
};

struct DcvOptions {
  /// Number of folds; kLeaveOneOut means one fold per row.
  Eigen::Index folds = 10;
  Eigen::Index d_min = 0;
  Eigen::Index d_max = 8;
  std::uint64_t seed = 0;
  TransposePolicy transpose = TransposePolicy::automatic;
  RankPolicy rank_policy = RankPolicy::project;
  unsigned threads = 1;

  static constexpr Eigen::Index kLeaveOneOut = 0;
};

template <typename Scalar>
struct DcvCurve {
  Eigen::Index d_min = 0;
  Eigen::Index d_max = 0;
  VectorX<Scalar> values;
  Eigen::Index selected = 0;
  FoldPlan fold_plan;
  bool transposed = false;

  Scalar at(Eigen::Index d) const { return values(d - d_min); }
};

/// Smallest d attaining the minimum of values, where values[j] belongs to
/// d_min + j. NaN entries never win. Returns d_min for an empty range.
template <typename Scalar>
Eigen::Index select_d(std::span<const Scalar> values, Eigen::Index d_min) {
  Eigen::Index best = 0;
  for (std::size_t j = 1; j < values.size(); ++j)
    if (values[j] < values[static_cast<std::size_t>(best)])
      best = static_cast<Eigen::Index>(j);
  return d_min + best;
}

template <typename Scalar>
Eigen::Index select_d(const DcvCurve<Scalar>& curve) {
  return select_d(std::span<const Scalar>(curve.values.data(),
                                          static_cast<std::size_t>(curve.values.size())),
                  curve.d_min);
}

namespace detail {

template <typename Scalar>
Scalar sorted_sum(std::vector<Scalar> v) {
  std::sort(v.begin(), v.end());
  Scalar s = 0;
  for (Scalar x : v) s += x;
  return s;
}

// Per-fold deleted-variable errors for every d in [d_min, d_max], indexed
// [d - d_min][row within fold].
template <typename Scalar>
std::vector<VectorX<Scalar>> fold_errors(const MatrixX<Scalar>& X,
                                         const std::vector<Eigen::Index>& held,
                                         int fold_id, const DcvOptions& opt) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  std::vector<bool> in_fold(static_cast<std::size_t>(n), false);
  for (auto i : held) in_fold[static_cast<std::size_t>(i)] = true;

  MatrixX<Scalar> kept(n - static_cast<Eigen::Index>(held.size()), p);
  MatrixX<Scalar> heldout(static_cast<Eigen::Index>(held.size()), p);
  for (Eigen::Index i = 0, r = 0, h = 0; i < n; ++i) {
    if (in_fold[static_cast<std::size_t>(i)])
      heldout.row(h++) = X.row(i);
    else
      kept.row(r++) = X.row(i);
  }
  // Canonical order keeps the rescaling product independent of how the
  // retained rows happened to be listed.
  const MatrixX<Scalar> retained = canonical_row_order(kept);

  auto tilde = estimate_loadings(gram_eigen(retained), opt.d_max);
  tilde.excluded_fold = fold_id;
  const auto hat = rescale_loadings(retained, tilde);

  // Keyed by effective column count so that d above the fold's rank reuses
  // the exact numbers computed for the rank itself.
  std::map<Eigen::Index, VectorX<Scalar>> by_columns;
  auto errors_for = [&](Eigen::Index cols, Eigen::Index d) -> const VectorX<Scalar>& {
    auto it = by_columns.find(cols);
    if (it != by_columns.end()) return it->second;
    VectorX<Scalar> v;
    if (cols == 0) {
      v = heldout.rowwise().squaredNorm() / Scalar(p);
    } else {
      LoadingProjector<Scalar> proj(hat.loadings.leftCols(cols));
      const VectorX<Scalar> w = proj.leverages();
      check_leverages<VectorX<Scalar>, Scalar>(w, fold_id, static_cast<int>(d));
      v = deleted_variable_errors(proj, heldout, w);
    }
    return by_columns.emplace(cols, std::move(v)).first->second;
  };

  std::vector<VectorX<Scalar>> out;
  for (Eigen::Index d = opt.d_min; d <= opt.d_max; ++d) {
    Eigen::Index cols = d;
    if (d > 0) {
      LoadingProjector<Scalar> proj(hat.loadings.leftCols(d));
      if (!proj.full_rank()) {
        if (opt.rank_policy == RankPolicy::strict)
          throw RankDeficient("rescaled loadings have effective rank " +
                                  std::to_string(proj.rank()),
                              fold_id, static_cast<int>(d));
        cols = proj.rank();
        while (cols > 0) {
          LoadingProjector<Scalar> sub(hat.loadings.leftCols(cols));
          if (sub.full_rank()) break;
          cols = sub.rank();
        }
      }
    }
    out.push_back(errors_for(cols, d));
  }
  return out;
}

}  // namespace detail

/// DCV(d) for d in [d_min, d_max] and the smallest minimizer. Fold ids in
/// error messages are 1-based.
template <typename Derived>
DcvCurve<typename Derived::Scalar> dcv_curve(const Eigen::MatrixBase<Derived>& X_in,
                                             const DcvOptions& opt) {
  using Scalar = typename Derived::Scalar;
  if (X_in.rows() == 0 || X_in.cols() == 0) throw EmptyMatrix();
  if (!X_in.allFinite()) throw NonFiniteInput();

  const bool transpose =
      opt.transpose == TransposePolicy::always ||
      (opt.transpose == TransposePolicy::automatic && X_in.rows() < X_in.cols());
  const MatrixX<Scalar> X = transpose ? MatrixX<Scalar>(X_in.transpose())
                                      : MatrixX<Scalar>(X_in);
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();

  if (opt.d_min < 0 || opt.d_min > opt.d_max)
    throw DimensionError("need 0 <= d_min <= d_max (got d_min=" +
                         std::to_string(opt.d_min) + ", d_max=" +
                         std::to_string(opt.d_max) + ")");
  if (opt.d_max >= p)
    throw DimensionError("d_max must be < p (d_max=" + std::to_string(opt.d_max) +
                         ", p=" + std::to_string(p) + ")");
  const Eigen::Index K = opt.folds == DcvOptions::kLeaveOneOut ? n : opt.folds;

  DcvCurve<Scalar> curve;
  curve.d_min = opt.d_min;
  curve.d_max = opt.d_max;
  curve.transposed = transpose;
  curve.fold_plan = make_folds(n, K, opt.seed);

  const auto& folds = curve.fold_plan.folds;
  std::vector<std::vector<VectorX<Scalar>>> per_fold(folds.size());
  parallel_for(folds.size(), opt.threads, [&](std::size_t k) {
    per_fold[k] = detail::fold_errors<Scalar>(X, folds[k], static_cast<int>(k + 1), opt);
  });

  const Eigen::Index range = opt.d_max - opt.d_min + 1;
  curve.values.resize(range);
  for (Eigen::Index j = 0; j < range; ++j) {
    std::vector<Scalar> all;
    all.reserve(static_cast<std::size_t>(n));
    for (const auto& f : per_fold)
      for (Eigen::Index i = 0; i < f[static_cast<std::size_t>(j)].size(); ++i)
        all.push_back(f[static_cast<std::size_t>(j)](i));
    curve.values(j) = detail::sorted_sum(std::move(all)) / Scalar(n);
  }
  curve.selected = select_d(curve);
  return curve;
}

}  // namespace factorcv
