#include "factorcv/simgen.hpp"

#include <cmath>

#include "factorcv/errors.hpp"
#include "factorcv/seeding.hpp"

namespace factorcv {

std::string to_string(ErrorModel m) {
  switch (m) {
    case ErrorModel::E1: return "E1";
    case ErrorModel::E2: return "E2";
    case ErrorModel::E3: return "E3";
    case ErrorModel::E4: return "E4";
    case ErrorModel::E5: return "E5";
  }
  return "?";
}

ErrorModel parse_error_model(std::string_view text) {
  if (text == "E1") return ErrorModel::E1;
  if (text == "E2") return ErrorModel::E2;
  if (text == "E3") return ErrorModel::E3;
  if (text == "E4") return ErrorModel::E4;
  if (text == "E5") return ErrorModel::E5;
  throw UsageError("unknown error model '" + std::string(text) +
                   "' (expected E1..E5)");
}

namespace {

constexpr double kAr1 = 0.3;
constexpr double kMaDecay = 0.15;
constexpr int kMaHalfWidth = 10;

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = z(rng);
  return out;
}

}  // namespace

Eigen::MatrixXd gen_errors(ErrorModel model, Eigen::Index n, Eigen::Index p,
                           std::mt19937_64& rng, bool e5_literal_exponent) {
  if (n < 1 || p < 1) throw DimensionError("gen_errors: need n >= 1 and p >= 1");

  switch (model) {
    case ErrorModel::E1:
      return standard_normal(n, p, rng);

    case ErrorModel::E2: {
      std::student_t_distribution<double> t3(3.0);
      Eigen::MatrixXd out(n, p);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index s = 0; s < p; ++s) out(i, s) = t3(rng);
      return out;
    }

    case ErrorModel::E3: {
      Eigen::MatrixXd out = standard_normal(n, p, rng);
      // Column s (0-based) is variable s+1; even variables get variance 2.
      for (Eigen::Index s = 1; s < p; s += 2) out.col(s) *= std::sqrt(2.0);
      return out;
    }

    case ErrorModel::E4: {
      const Eigen::MatrixXd nu = standard_normal(n, p, rng);
      Eigen::MatrixXd out(n, p);
      for (Eigen::Index i = 0; i < n; ++i) {
        out(i, 0) = nu(i, 0) / std::sqrt(1.0 - kAr1 * kAr1);
        for (Eigen::Index s = 1; s < p; ++s)
          out(i, s) = kAr1 * out(i, s - 1) + nu(i, s);
      }
      return out;
    }

    case ErrorModel::E5: {
      // Row r of nu is observation r - kMaHalfWidth + 1 (1-based), so rows
      // cover -9 .. n+10.
      const Eigen::MatrixXd nu = standard_normal(n + 2 * kMaHalfWidth, p, rng);
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, p);
      for (int j = -kMaHalfWidth; j <= kMaHalfWidth; ++j) {
        const double weight = std::pow(kMaDecay, e5_literal_exponent ? j : std::abs(j));
        // observation i (0-based) draws nu at observation i - j.
        out += weight * nu.middleRows(kMaHalfWidth - j, n);
      }
      return out;
    }
  }
  throw UsageError("unknown error model");
}

SimDraw gen_factor_data(const SimConfig& cfg) {
  if (cfg.n < 1 || cfg.p < 1 || cfg.d0 < 0 || !(cfg.theta >= 0))
    throw UsageError("simulation config needs n >= 1, p >= 1, d0 >= 0, theta >= 0");

  std::mt19937_64 f_rng(derive_seed(cfg.seed, cfg.streams.factors));
  std::mt19937_64 l_rng(derive_seed(cfg.seed, cfg.streams.loadings));
  std::mt19937_64 e_rng(derive_seed(cfg.seed, cfg.streams.errors));

  SimDraw draw;
  draw.F0 = standard_normal(cfg.n, cfg.d0, f_rng);
  draw.L0 = standard_normal(cfg.p, cfg.d0, l_rng);
  draw.E = gen_errors(cfg.error_model, cfg.n, cfg.p, e_rng, cfg.e5_literal_exponent);
  draw.X = draw.F0 * draw.L0.transpose() + std::sqrt(cfg.theta) * draw.E;
  return draw;
}

}  // namespace factorcv
