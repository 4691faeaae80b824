#pragma once

#include <Eigen/Dense>

#include <random>

#include "ltviqc/lintime.hpp"
#include "ltviqc/rde.hpp"

namespace fixtures {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// lambda >= 0, R(t, lambda) < 0 on the grid, and no finite escape.
inline bool feasible(const ltviqc::AnalysisProblem& p, const VectorXd& lambda, const ltviqc::RdeOptions& opts = {}) {
  if ((lambda.array() < 0.0).any()) return false;
  if (ltviqc::check_r_negdef(p.qsr, lambda, opts.r_tolerance)) return false;
  const auto n = p.system.state_size();
  return ltviqc::solve_rde_backward(p.system, p.qsr, lambda, MatrixXd::Zero(n, n), std::nullopt, opts).solved();
}

inline MatrixXd random_matrix(std::mt19937& rng, Eigen::Index r, Eigen::Index c, double scale) {
  std::normal_distribution<double> N(0.0, scale);
  return MatrixXd::NullaryExpr(r, c, [&] { return N(rng); });
}

inline MatrixXd random_psd(std::mt19937& rng, Eigen::Index n, Eigen::Index rank, double scale) {
  const MatrixXd F = random_matrix(rng, n, rank, scale);
  return F * F.transpose();
}

/// Smoothly time-varying Riccati coefficients on [0, 1] with R < 0.
inline ltviqc::RiccatiCoefficients random_coefficients(std::mt19937& rng, Eigen::Index n, Eigen::Index m,
                                                       std::size_t grid_points = 51) {
  const ltviqc::Grid g = ltviqc::Grid::uniform(1.0, grid_points);
  auto varying = [&](Eigen::Index r, Eigen::Index c, double s, bool sym) {
    MatrixXd base = random_matrix(rng, r, c, s), ripple = random_matrix(rng, r, c, 0.3 * s);
    if (sym) {
      base = 0.5 * (base + base.transpose()).eval();
      ripple = 0.5 * (ripple + ripple.transpose()).eval();
    }
    return ltviqc::Schedule::sample(g, [&](double t) -> MatrixXd { return base + std::sin(3.0 * t) * ripple; });
  };
  const MatrixXd R0 = -MatrixXd::Identity(m, m) - random_psd(rng, m, m, 0.3);
  return {varying(n, n, 0.5, false), varying(n, m, 0.5, false), varying(n, n, 0.3, true),
          varying(n, m, 0.2, false), ltviqc::Schedule::constant(g, R0), std::nullopt};
}

}  // namespace fixtures
