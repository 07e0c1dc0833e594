#pragma once

// Simulated factor panels: x_is = sum_j f_ij l_sj + sqrt(theta) e_is with
// standard normal factors and loadings and one of five idiosyncratic error
// designs.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace factorcv {

enum class ErrorModel {
  E1,  ///< iid N(0,1)
  E2,  ///< iid Student t with 3 degrees of freedom, unscaled
  E3,  ///< independent N(0, delta_s), delta_s = 1 for odd s, 2 for even s
  E4,  ///< AR(1) across variables, coefficient 0.3, stationary start
  E5,  ///< moving average across observations, weights 0.15^|j|, |j| <= 10
};

std::string to_string(ErrorModel m);
ErrorModel parse_error_model(std::string_view text);

/// Substream indices under SimConfig::seed for each random ingredient.
struct StreamOffsets {
  std::uint64_t factors = 0;
  std::uint64_t loadings = 1;
  std::uint64_t errors = 2;
};

struct SimConfig {
  Eigen::Index n = 100;
  Eigen::Index p = 50;
  Eigen::Index d0 = 5;
  double theta = 1.0;
  ErrorModel error_model = ErrorModel::E1;
  std::uint64_t seed = 0;
  StreamOffsets streams{};
  /// Use 0.15^j (not 0.15^|j|) in E5, which blows up for negative j.
  bool e5_literal_exponent = false;
};

struct SimDraw {
  Eigen::MatrixXd X;
  Eigen::MatrixXd F0;
  Eigen::MatrixXd L0;
  Eigen::MatrixXd E;
};

/// n x p idiosyncratic errors drawn from `rng`, filled in row-major order.
Eigen::MatrixXd gen_errors(ErrorModel model, Eigen::Index n, Eigen::Index p,
                           std::mt19937_64& rng, bool e5_literal_exponent = false);

SimDraw gen_factor_data(const SimConfig& cfg);

}  // namespace factorcv
