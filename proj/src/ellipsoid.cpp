#include "ltviqc/ellipsoid.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace ltviqc {

std::string_view to_string(MinimizeStatus status) {
  switch (status) {
    case MinimizeStatus::Converged:
      return "converged";
    case MinimizeStatus::MaxIterations:
      return "max_iterations";
    case MinimizeStatus::NoFeasiblePoint:
      return "no_feasible_point";
  }
  return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_cut(const CutVector& cut, Eigen::Index m) {
  if (cut.g.size() != m) {
    throw DimensionError("cut oracle returned a vector of length " + std::to_string(cut.g.size()) +
                         ", expected " + std::to_string(m));
  }
  if (!cut.g.allFinite()) throw NumericalError("cut oracle returned a non-finite vector");
}

/// Bookkeeping shared by the ellipsoid and bisection loops.
class RunState {
 public:
  explicit RunState(Eigen::Index m) { result_.lambda = VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN()); }

  /// Records iterate k; returns the gap bound (+inf when infeasible).
  void record(int k, const VectorXd& lambda, CutVector&& cut, double gap) {
    IterationRecord rec{k, lambda, cut.J, cut.kind, gap, seconds_since(start_)};
    if (cut.kind != CutKind::Subgradient) {
      rec.J = std::numeric_limits<double>::infinity();
      rec.gap = std::numeric_limits<double>::infinity();
    } else {
      // J_best - J* <= J_k - J* <= gap_k for every feasible k.
      result_.gap = std::min(result_.gap, gap);
      if (cut.J < result_.J) {
        result_.J = cut.J;
        result_.lambda = lambda;
        result_.witness = std::move(cut.witness);
      }
    }
    result_.log.push_back(std::move(rec));
    result_.iterations = k + 1;
  }

  MinimizeResult finish(bool converged) {
    if (converged) {
      result_.status = MinimizeStatus::Converged;
    } else if (std::isfinite(result_.J)) {
      result_.status = MinimizeStatus::MaxIterations;
    } else {
      result_.status = MinimizeStatus::NoFeasiblePoint;
    }
    result_.wall_time = seconds_since(start_);
    return std::move(result_);
  }

  MinimizeResult& result() { return result_; }

 private:
  Clock::time_point start_ = Clock::now();
  MinimizeResult result_;
};

bool gap_met(double gap, double J, double tol, bool relative) {
  return gap <= (relative ? tol * std::abs(J) : tol);
}

}  // namespace

MinimizeResult minimize(const CutOracle& oracle, Eigen::Index m, const EllipsoidOptions& opts) {
  if (m < 2) throw PreconditionError("minimize: needs at least two multipliers (use bisect_scalar)");
  if (!(opts.radius > 0.0)) throw PreconditionError("minimize: radius must be positive");
  if (!(opts.gap_tol > 0.0)) throw PreconditionError("minimize: gap tolerance must be positive");
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(500 * m);

  RunState state(m);
  Ellipsoid<double> e = Ellipsoid<double>::ball(m, opts.radius);
  bool converged = false;
  for (int k = 0; k < max_iter; ++k) {
    Eigen::LLT<MatrixXd> llt(e.shape);
    if (llt.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "minimize: ellipsoid shape lost positive definiteness at iteration " << k
          << " (min eigenvalue " << Eigen::SelfAdjointEigenSolver<MatrixXd>(e.shape).eigenvalues()(0)
          << ")";
      throw NumericalError(msg.str());
    }
    CutVector cut = oracle(e.center);
    check_cut(cut, m);
    const bool feasible = cut.kind == CutKind::Subgradient;
    const double gap = gap_bound(e, cut.g);
    const VectorXd g = cut.g;
    const double J = cut.J;
    state.record(k, e.center, std::move(cut), gap);
    if (feasible && gap_met(gap, J, opts.gap_tol, opts.relative_gap)) {
      converged = true;
      break;
    }
    if (!(g.cwiseAbs().maxCoeff() > 0.0)) throw NumericalError("minimize: zero cut at an infeasible center");
    e = step(e, g);
  }
  MinimizeResult& r = state.result();
  if (std::isfinite(r.J) && r.lambda.norm() >= 0.95 * opts.radius) {
    r.warnings.push_back("final center lies within 5% of the initial sphere boundary; the optimum may lie outside it");
  }
  return state.finish(converged);
}

MinimizeResult bisect_scalar(const CutOracle& oracle, double lambda_hi, double gap_tol, bool relative_gap,
                             int max_iter) {
  if (!(lambda_hi > 0.0)) throw PreconditionError("bisect_scalar: upper end must be positive");
  if (!(gap_tol > 0.0)) throw PreconditionError("bisect_scalar: gap tolerance must be positive");
  if (max_iter <= 0) max_iter = 500;

  RunState state(1);
  double lo = 0.0;
  double hi = lambda_hi;
  bool converged = false;
  for (int k = 0; k < max_iter; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const VectorXd lambda = VectorXd::Constant(1, mid);
    CutVector cut = oracle(lambda);
    check_cut(cut, 1);
    const bool feasible = cut.kind == CutKind::Subgradient;
    const double g = cut.g(0);
    const double J = cut.J;
    const double gap = std::abs(g) * half;
    state.record(k, lambda, std::move(cut), gap);
    if (feasible && gap_met(gap, J, gap_tol, relative_gap)) {
      converged = true;
      break;
    }
    // Everything better lies in { a : g (a - mid) < 0 }.
    if (g > 0.0) {
      hi = mid;
    } else if (g < 0.0) {
      lo = mid;
    } else {
      throw NumericalError("bisect_scalar: zero cut at an infeasible midpoint");
    }
  }
  return state.finish(converged);
}

CutOracle make_oracle(const AnalysisProblem& problem, const RdeOptions& rde) {
  return [&problem, rde](const VectorXd& lambda) { return evaluate_cut(problem, lambda, rde); };
}

MinimizeResult optimize_multipliers(const AnalysisProblem& problem, const AnalysisOptions& opts) {
  const auto m = static_cast<Eigen::Index>(problem.qsr.multiplier_count());
  const CutOracle oracle = make_oracle(problem, opts.rde);
  const EllipsoidOptions& eo = opts.ellipsoid;
  if (m == 0) throw PreconditionError("optimize_multipliers: the problem has no IQCs");
  if (m == 1) {
    return bisect_scalar(oracle, opts.bisection_upper, eo.gap_tol, eo.relative_gap, eo.max_iter);
  }
  return minimize(oracle, m, eo);
}

}  // namespace ltviqc
