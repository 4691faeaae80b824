#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ltviqc/core.hpp"
#include "ltviqc/worstcase.hpp"

namespace ltviqc {

/// E = { a : (a - center)' shape^{-1} (a - center) <= 1 }.
template <typename Scalar>
struct Ellipsoid {
  Vector<Scalar> center;
  Matrix<Scalar> shape;

  static Ellipsoid ball(Eigen::Index m, Scalar radius) {
    return {Vector<Scalar>::Zero(m), Matrix<Scalar>::Identity(m, m) * (radius * radius)};
  }

  Eigen::Index dimension() const { return center.size(); }

  /// log of the volume up to the unit-ball constant: 0.5 log det(shape).
  Scalar log_volume() const {
    Eigen::LLT<Matrix<Scalar>> llt(shape);
    if (llt.info() != Eigen::Success) throw NumericalError("Ellipsoid: shape is not positive definite");
    return llt.matrixLLT().diagonal().array().log().sum();
  }

  bool contains(const Vector<Scalar>& a) const {
    const Vector<Scalar> d = a - center;
    return d.dot(shape.ldlt().solve(d)) <= Scalar(1);
  }
};

/// Minimum-volume ellipsoid containing e intersected with { a : g'(a - center) <= 0 }.
template <typename Scalar>
Ellipsoid<Scalar> step(const Ellipsoid<Scalar>& e, const Vector<Scalar>& g) {
  const Eigen::Index m = e.dimension();
  if (m < 2) throw PreconditionError("ellipsoid step: dimension must be at least 2 (use bisection for m = 1)");
  if (g.size() != m) throw DimensionError("ellipsoid step: cut has length " + std::to_string(g.size()));
  const Vector<Scalar> Lg = e.shape * g;
  const Scalar gLg = g.dot(Lg);
  if (!(gLg > Scalar(0))) throw NumericalError("ellipsoid step: g' Lambda g is not positive");
  const Vector<Scalar> Lgt = Lg / std::sqrt(gLg);
  const Scalar mm = Scalar(m);
  Ellipsoid<Scalar> out;
  out.center = e.center - Lgt / (mm + 1);
  out.shape = (mm * mm / (mm * mm - 1)) * (e.shape - (Scalar(2) / (mm + 1)) * Lgt * Lgt.transpose());
  symmetrize(out.shape);
  return out;
}

/// Per-step ratio vol(E+)/vol(E) of the central-cut update in dimension m.
template <typename Scalar>
Scalar step_volume_ratio(Eigen::Index m) {
  const Scalar mm = Scalar(m);
  return mm / (mm + 1) * std::pow(mm * mm / (mm * mm - 1), (mm - 1) / 2);
}

/// Gap bound sqrt(g' Lambda g) at the current center.
template <typename Scalar>
Scalar gap_bound(const Ellipsoid<Scalar>& e, const Vector<Scalar>& g) {
  return std::sqrt(std::max(Scalar(0), g.dot(e.shape * g)));
}

using CutOracle = std::function<CutVector(const VectorXd&)>;

struct EllipsoidOptions {
  double radius = 20.0;
  /// Termination tolerance on the gap bound.
  double gap_tol = 0.01;
  /// When true the gap is compared with gap_tol * J(lambda_k).
  bool relative_gap = true;
  /// 0 selects 500 * m.
  int max_iter = 0;
};

struct IterationRecord {
  int k = 0;
  VectorXd lambda;
  double J = 0.0;  // +inf at infeasible iterates
  CutKind kind = CutKind::Subgradient;
  double gap = 0.0;  // +inf at infeasible iterates
  double elapsed = 0.0;  // seconds since the start of the run
};

enum class MinimizeStatus { Converged, MaxIterations, NoFeasiblePoint };

std::string_view to_string(MinimizeStatus status);

struct MinimizeResult {
  MinimizeStatus status = MinimizeStatus::NoFeasiblePoint;
  VectorXd lambda;  // best feasible iterate
  double J = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();  // gap bound at termination
  int iterations = 0;
  std::vector<IterationRecord> log;
  std::vector<std::string> warnings;
  std::optional<Witness> witness;  // worst-case pair at the best iterate
  double wall_time = 0.0;

  bool converged() const { return status == MinimizeStatus::Converged; }
};

/// Ellipsoid algorithm over lambda in R^m (m >= 2), starting from the ball of
/// the given radius centered at the origin.
MinimizeResult minimize(const CutOracle& oracle, Eigen::Index m, const EllipsoidOptions& opts = {});

/// Interval bisection on [0, lambda_hi] driven by the sign of the cut at the
/// midpoint. The gap is |g| times the interval half-width.
MinimizeResult bisect_scalar(const CutOracle& oracle, double lambda_hi = 10.0, double gap_tol = 0.01,
                             bool relative_gap = true, int max_iter = 0);

/// Oracle backed by evaluate_cut on an analysis problem.
CutOracle make_oracle(const AnalysisProblem& problem, const RdeOptions& rde = {});

struct AnalysisOptions {
  EllipsoidOptions ellipsoid;
  /// Upper end of the bisection interval for problems with one multiplier.
  double bisection_upper = 10.0;
  RdeOptions rde;
};

/// Minimizes J over the multipliers of the problem: bisection when there is
/// one IQC, the ellipsoid algorithm otherwise.
MinimizeResult optimize_multipliers(const AnalysisProblem& problem, const AnalysisOptions& opts = {});

}  // namespace ltviqc
