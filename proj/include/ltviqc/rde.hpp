#pragma once

#include <limits>
#include <optional>

#include "ltviqc/core.hpp"
#include "ltviqc/dense_trajectory.hpp"
#include "ltviqc/lintime.hpp"
#include "ltviqc/ode.hpp"

namespace ltviqc {

struct RdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  /// Frobenius norm beyond which the backward solution is declared escaped.
  double y_max = 1e9;
  /// Step-size floor relative to the horizon; hitting it also counts as escape.
  double min_step_fraction = 1e-12;
  /// Preferred norm band for the escape probe point.
  double probe_low = 1e6;
  double probe_high = 1e8;
  double r_tolerance = kRNegDefTolerance;

  OdeOptions<double> ode() const { return {rtol, atol, min_step_fraction, 5'000'000}; }
};

enum class RdeStatus { Solved, Escaped };

struct EscapeProbe {
  double time = 0.0;
  double spectral_radius = 0.0;
  VectorXd direction;  // unit eigenvector for the eigenvalue of largest magnitude
};

/// Result of one backward Riccati solve. `trajectory` holds Y(t) flattened
/// column-major (n*n entries) on the accepted integration points; it covers
/// [0, T] when solved and (t_escape, T] when escaped.
struct RdeOutcome {
  RdeStatus status = RdeStatus::Solved;
  Eigen::Index n = 0;
  DenseTrajectory<double> trajectory;
  double t_escape = std::numeric_limits<double>::quiet_NaN();
  std::optional<EscapeProbe> probe;
  long accepted_steps = 0;

  bool solved() const { return status == RdeStatus::Solved; }
  MatrixXd Y(double t) const;
  MatrixXd Y_dot(double t) const;
  /// Solution sampled at the dense output points as a schedule (solved only).
  Schedule to_schedule() const;
};

/// Time-varying coefficients of a Riccati equation
///   dY/dt + A'Y + YA + Q - (YB + S) R^{-1} (YB + S)' = W
/// All schedules must share one grid. W is optional (zero when absent).
struct RiccatiCoefficients {
  Schedule A;
  Schedule B;
  Schedule Q;
  Schedule S;
  Schedule R;
  std::optional<Schedule> W;
};

/// Integrates the Riccati equation backward from Y(T) = YT. The escape test
/// (norm above y_max, or step underflow) ends the integration with status
/// Escaped. R is not checked for sign here.
RdeOutcome integrate_riccati(const RiccatiCoefficients& coeffs, const MatrixXd& YT,
                             const RdeOptions& opts = {});

/// Backward solve of the IQC Riccati equation at multiplier vector lambda,
/// optionally perturbed by W. Requires R(t, lambda) < 0 on the grid.
RdeOutcome solve_rde_backward(const AugmentedLtv& ga, const QsrData& qsr, const VectorXd& lambda,
                              const MatrixXd& YT, const std::optional<Schedule>& W = std::nullopt,
                              const RdeOptions& opts = {});

/// Worst-case cost bound: bottom-right entry of Y(0), or +inf if escaped.
double eval_j(const RdeOutcome& outcome);

/// Max over the solution's output points and interval midpoints of the
/// Frobenius norm of dY/dt + A'Y + YA + Q - (YB+S)R^{-1}(YB+S)' - W, with
/// dY/dt taken from the dense interpolant.
double rde_residual(const AugmentedLtv& ga, const QsrData& qsr, const VectorXd& lambda,
                    const DenseTrajectory<double>& Y,
                    const std::optional<Schedule>& W = std::nullopt);

struct LqrDesign {
  Schedule gain;                   // K(t) = Rw^{-1} B(t)' P(t), on A's grid
  DenseTrajectory<double> cost;    // P(t), flattened column-major
};

/// Finite-horizon LQR for dx = A x + B u, cost x'PT x + int x'Qw x + u'Rw u.
LqrDesign lqr_design(const Schedule& A, const Schedule& B, const MatrixXd& Qw, const MatrixXd& Rw,
                     const MatrixXd& PT, const RdeOptions& opts = {});

}  // namespace ltviqc
