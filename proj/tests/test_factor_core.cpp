#include "doctest.h"

#include <cmath>

#include "factorcv/factor_core.hpp"
#include "oracles.hpp"

using namespace factorcv;

namespace {

LoadingEstimate<double> as_loading(const Eigen::MatrixXd& L, bool rescaled = true) {
  LoadingEstimate<double> out;
  out.loadings = L;
  out.rescaled = rescaled;
  return out;
}

}  // namespace

TEST_CASE("estimate_loadings on diagonal data") {
  Eigen::MatrixXd X(2, 2);
  X << 2, 0, 0, 1;
  const auto L = estimate_loadings(X, 1);
  REQUIRE(L.loadings.rows() == 2);
  REQUIRE(L.loadings.cols() == 1);
  CHECK(L.loadings(0, 0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(std::abs(L.loadings(1, 0)) < 1e-15);
  CHECK_FALSE(L.rescaled);
  CHECK(L.working_d() == 1);
}

TEST_CASE("d = 0 gives an empty loading") {
  const auto X = oracle::normal_matrix(5, 4, 1);
  const auto L = estimate_loadings(X, 0);
  CHECK(L.loadings.rows() == 4);
  CHECK(L.loadings.cols() == 0);
  const auto hat = rescale_loadings(X, L);
  CHECK(hat.loadings.rows() == 4);
  CHECK(hat.loadings.cols() == 0);
  CHECK(projection_leverages(hat) == Eigen::VectorXd::Zero(4));
  CHECK(ols_factor_scores(hat, X).scores.cols() == 0);
}

TEST_CASE("6x4 loadings are normalized and match the oracle subspace") {
  const auto X = oracle::normal_matrix(6, 4, 6042);
  const auto L = estimate_loadings(X, 2);
  const Eigen::MatrixXd gram = L.loadings.transpose() * L.loadings / 4.0;
  CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-8);
  const auto ref = oracle::jacobi_eigen(X.transpose() * X);
  const Eigen::MatrixXd mine = L.loadings / 2.0;
  CHECK(oracle::max_principal_angle(mine, ref.vectors.leftCols(2)) < 1e-6);
}

TEST_CASE("estimate_loadings rejects d > p") {
  const auto X = oracle::normal_matrix(6, 4, 1);
  CHECK_THROWS_AS(estimate_loadings(X, 5), DimensionError);
  CHECK_THROWS_AS(estimate_loadings(X, -1), DimensionError);
}

TEST_CASE("rescale_loadings on diagonal data") {
  Eigen::MatrixXd X(2, 2);
  X << 2, 0, 0, 1;
  const auto hat = rescale_loadings(X, estimate_loadings(X, 1));
  CHECK(hat.rescaled);
  CHECK(hat.loadings(0, 0) == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK(std::abs(hat.loadings(1, 0)) < 1e-15);
}

TEST_CASE("rescale_loadings matches the defining product and the eigen identity") {
  const auto Xm = oracle::normal_matrix(8, 5, 8053);
  const auto tilde = estimate_loadings(Xm, 3);
  const auto hat = rescale_loadings(Xm, tilde);
  const Eigen::MatrixXd direct = Xm.transpose() * Xm * tilde.loadings / 8.0;
  CHECK((hat.loadings - direct).cwiseAbs().maxCoeff() <= 1e-10);

  const auto es = gram_eigen(Xm);
  for (Eigen::Index t = 0; t < 3; ++t) {
    const Eigen::VectorXd expect = es.values(t) / 8.0 * std::sqrt(5.0) * es.vectors.col(t);
    CHECK((hat.loadings.col(t) - expect).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("rescale_loadings errors") {
  const auto Xm = oracle::normal_matrix(8, 5, 1);
  const auto tilde = estimate_loadings(Xm, 2);
  CHECK_THROWS_AS(rescale_loadings(oracle::normal_matrix(8, 4, 1), tilde), DimensionError);
  CHECK_THROWS_AS(rescale_loadings(Xm, rescale_loadings(Xm, tilde)), UsageError);
}

TEST_CASE("leverages of simple loadings") {
  Eigen::MatrixXd L(2, 1);
  L << 1, 1;
  const auto w = projection_leverages(as_loading(L));
  CHECK(w(0) == doctest::Approx(0.5));
  CHECK(w(1) == doctest::Approx(0.5));

  const auto full = projection_leverages(as_loading(Eigen::MatrixXd::Identity(4, 4)));
  CHECK((full.array() - 1).abs().maxCoeff() < 1e-14);
}

TEST_CASE("7x2 leverages match the explicit projector") {
  const auto L = oracle::normal_matrix(7, 2, 7002);
  const auto w = projection_leverages(as_loading(L));
  const Eigen::VectorXd ref = oracle::projector(L).diagonal();
  CHECK((w - ref).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("leverage range and trace on random loadings") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Eigen::Index p = 3 + static_cast<Eigen::Index>(seed % 20);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(seed % std::min<Eigen::Index>(p, 6));
    const auto w = projection_leverages(as_loading(oracle::normal_matrix(p, d, seed)));
    CHECK(w.minCoeff() >= -1e-10);
    CHECK(w.maxCoeff() <= 1 + 1e-10);
    CHECK(std::abs(w.sum() - double(d)) <= 1e-8);
  }
}

TEST_CASE("rank-deficient loadings are rejected") {
  Eigen::MatrixXd L(4, 2);
  L << 1, 2, 1, 2, 0, 0, 3, 6;
  CHECK_THROWS_AS(projection_leverages(as_loading(L)), RankDeficient);
  CHECK_THROWS_AS(ols_factor_scores(as_loading(L), Eigen::MatrixXd::Ones(1, 4)), RankDeficient);
  LoadingProjector<double> proj(L);
  CHECK(proj.rank() == 1);
  CHECK_FALSE(proj.full_rank());
}

TEST_CASE("factor scores") {
  Eigen::MatrixXd L(2, 1);
  L << 1, 1;
  Eigen::MatrixXd x(1, 2);
  x << 1, 0;
  CHECK(ols_factor_scores(as_loading(L), x).scores(0, 0) == doctest::Approx(0.5));

  const auto L5 = oracle::normal_matrix(5, 3, 5003);
  const auto X = oracle::normal_matrix(4, 5, 4005);
  const auto f = ols_factor_scores(as_loading(L5), X).scores;
  for (Eigen::Index i = 0; i < 4; ++i) {
    const Eigen::VectorXd ref = oracle::normal_equation_scores(L5, X.row(i).transpose());
    CHECK((f.row(i).transpose() - ref).cwiseAbs().maxCoeff() <= 1e-9);
    const Eigen::VectorXd resid = X.row(i).transpose() - L5 * f.row(i).transpose();
    CHECK((L5.transpose() * resid).cwiseAbs().maxCoeff() <= 1e-8 * X.row(i).norm());
  }

  const Eigen::MatrixXd inside = (L5 * oracle::normal_matrix(3, 2, 9)).transpose();
  const auto fi = ols_factor_scores(as_loading(L5), inside).scores;
  CHECK((inside - fi * L5.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("sign flips leave leverages and fits unchanged") {
  const auto L = oracle::normal_matrix(9, 3, 12);
  Eigen::MatrixXd flipped = L;
  flipped.col(1) *= -1;
  const auto X = oracle::normal_matrix(4, 9, 13);
  const auto a = as_loading(L), b = as_loading(flipped);
  CHECK((projection_leverages(a) - projection_leverages(b)).cwiseAbs().maxCoeff() <= 1e-12);
  const Eigen::MatrixXd fa = ols_factor_scores(a, X).scores * L.transpose();
  const Eigen::MatrixXd fb = ols_factor_scores(b, X).scores * flipped.transpose();
  CHECK((fa - fb).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("scaling the data") {
  const auto X = oracle::normal_matrix(12, 6, 21);
  const double c = 3.5;
  const auto a = estimate_loadings(X, 2);
  const auto b = estimate_loadings(Eigen::MatrixXd(c * X), 2);
  CHECK((a.loadings - b.loadings).cwiseAbs().maxCoeff() <= 1e-10);
  const auto ra = rescale_loadings(X, a);
  const auto rb = rescale_loadings(Eigen::MatrixXd(c * X), b);
  CHECK((rb.loadings - c * c * ra.loadings).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("noiseless data is reconstructed by its own rank") {
  const auto F = oracle::normal_matrix(20, 3, 31);
  const auto L0 = oracle::normal_matrix(15, 3, 32);
  const Eigen::MatrixXd X = F * L0.transpose();
  const auto L = estimate_loadings(X, 3);
  const auto f = principal_factors(X, L);
  const Eigen::MatrixXd common = f.scores * L.loadings.transpose();
  CHECK((common - X).cwiseAbs().maxCoeff() <= 1e-8 * X.cwiseAbs().maxCoeff());
}
