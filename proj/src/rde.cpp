#include "ltviqc/rde.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace ltviqc {

namespace {

Eigen::Map<const MatrixXd> as_matrix(const VectorXd& v, Eigen::Index n) {
  return Eigen::Map<const MatrixXd>(v.data(), n, n);
}

VectorXd flatten(const MatrixXd& m) { return Eigen::Map<const VectorXd>(m.data(), m.size()); }

/// Evaluates the right-hand side of the backward Riccati equation with
/// per-solve scratch storage.
class RiccatiRhs {
 public:
  explicit RiccatiRhs(const RiccatiCoefficients& c)
      : c_(c),
        n_(c.A.rows()),
        nw_(c.B.cols()),
        A_(n_, n_),
        B_(n_, nw_),
        Q_(n_, n_),
        S_(n_, nw_),
        R_(nw_, nw_),
        W_(n_, n_),
        Y_(n_, n_),
        T1_(n_, nw_),
        K_(nw_, n_),
        F_(n_, n_) {}

  void operator()(double t, const VectorXd& y, VectorXd& dy) {
    load(t);
    Y_ = 0.5 * (as_matrix(y, n_) + as_matrix(y, n_).transpose());
    residual_terms();
    F_ = -F_;
    dy = Eigen::Map<const VectorXd>(F_.data(), F_.size());
  }

  /// F = A'Y + YA + Q - (YB+S) R^{-1} (YB+S)' - W for the currently loaded Y.
  MatrixXd terms(double t, const MatrixXd& Y) {
    load(t);
    Y_ = Y;
    residual_terms();
    return F_;
  }

 private:
  void load(double t) {
    c_.A.evaluate(t, A_);
    c_.B.evaluate(t, B_);
    c_.Q.evaluate(t, Q_);
    c_.S.evaluate(t, S_);
    c_.R.evaluate(t, R_);
    if (c_.W) c_.W->evaluate(t, W_);
  }

  void residual_terms() {
    T1_.noalias() = Y_ * B_;
    T1_ += S_;
    ldlt_.compute(R_);
    K_ = ldlt_.solve(T1_.transpose());
    F_.noalias() = A_.transpose() * Y_;
    F_.noalias() += Y_ * A_;
    F_ += Q_;
    F_.noalias() -= T1_ * K_;
    if (c_.W) F_ -= W_;
    F_ = 0.5 * (F_ + F_.transpose()).eval();
  }

  const RiccatiCoefficients& c_;
  Eigen::Index n_, nw_;
  MatrixXd A_, B_, Q_, S_, R_, W_, Y_, T1_, K_, F_;
  Eigen::LDLT<MatrixXd> ldlt_;
};

void check_coefficients(const RiccatiCoefficients& c) {
  const Eigen::Index n = c.A.rows();
  const Eigen::Index nw = c.B.cols();
  require_shape(c.A, n, n, "Riccati A");
  require_shape(c.B, n, nw, "Riccati B");
  require_shape(c.Q, n, n, "Riccati Q");
  require_shape(c.S, n, nw, "Riccati S");
  require_shape(c.R, nw, nw, "Riccati R");
  require_same_grid(c.A, c.B, "Riccati B");
  require_same_grid(c.A, c.Q, "Riccati Q");
  require_same_grid(c.A, c.S, "Riccati S");
  require_same_grid(c.A, c.R, "Riccati R");
  if (c.W) {
    require_shape(*c.W, n, n, "Riccati W");
    require_same_grid(c.A, *c.W, "Riccati W");
  }
}

std::optional<EscapeProbe> pick_probe(const DenseTrajectory<double>& traj, Eigen::Index n,
                                      const RdeOptions& opts) {
  if (traj.size() < 2) return std::nullopt;
  // Walking away from the escape time, take the last point of the first run
  // inside the band: the best-conditioned admissible probe.
  std::size_t pick = 0;  // fallback: last accepted point before blow-up
  bool inside = false;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const double norm = traj.values()[i].norm();
    if (norm >= opts.probe_low && norm <= opts.probe_high) {
      pick = i;
      inside = true;
    } else if (inside) {
      break;
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(as_matrix(traj.values()[pick], n));
  Eigen::Index idx = 0;
  eig.eigenvalues().cwiseAbs().maxCoeff(&idx);
  return EscapeProbe{traj.times()[pick], std::abs(eig.eigenvalues()(idx)),
                     eig.eigenvectors().col(idx)};
}

}  // namespace

MatrixXd RdeOutcome::Y(double t) const { return as_matrix(trajectory.value(t), n); }

MatrixXd RdeOutcome::Y_dot(double t) const { return as_matrix(trajectory.derivative(t), n); }

Schedule RdeOutcome::to_schedule() const {
  if (!solved()) throw PreconditionError("RdeOutcome::to_schedule: solution escaped");
  std::vector<MatrixXd> samples;
  samples.reserve(trajectory.size());
  for (const auto& v : trajectory.values()) samples.emplace_back(as_matrix(v, n));
  std::vector<double> times = trajectory.times();
  times.front() = 0.0;
  return Schedule(Grid(std::move(times)), std::move(samples));
}

RdeOutcome integrate_riccati(const RiccatiCoefficients& coeffs, const MatrixXd& YT,
                             const RdeOptions& opts) {
  check_coefficients(coeffs);
  const Eigen::Index n = coeffs.A.rows();
  if (YT.rows() != n || YT.cols() != n) {
    throw DimensionError("integrate_riccati: terminal condition is " +
                         shape_string(YT.rows(), YT.cols()) + ", expected " + shape_string(n, n));
  }
  const Grid& grid = coeffs.A.grid();
  RiccatiRhs rhs(coeffs);
  const double y_max = opts.y_max;
  auto observer = [y_max](double, const VectorXd& y, const VectorXd&) {
    return y.norm() <= y_max;
  };
  auto res = integrate_dopri5<double>(
      [&rhs](double t, const VectorXd& y, VectorXd& dy) { rhs(t, y, dy); }, grid.horizon(), 0.0,
      flatten(symmetrized(YT)), opts.ode(), grid.points(), observer);

  RdeOutcome out;
  out.n = n;
  out.accepted_steps = res.accepted_steps;
  out.trajectory = std::move(res.trajectory);
  switch (res.status) {
    case OdeStatus::Completed:
      out.status = RdeStatus::Solved;
      break;
    case OdeStatus::Stopped:
    case OdeStatus::StepUnderflow:
      out.status = RdeStatus::Escaped;
      out.t_escape = res.t_end;
      out.trajectory.drop_before(std::nextafter(res.t_end, std::numeric_limits<double>::infinity()));
      out.probe = pick_probe(out.trajectory, n, opts);
      break;
    case OdeStatus::MaxSteps:
      throw NumericalError("integrate_riccati: step budget exhausted at t = " +
                           std::to_string(res.t_end));
  }
  if (out.solved() && !out.trajectory.values().front().allFinite()) {
    throw NumericalError("integrate_riccati: non-finite solution");
  }
  return out;
}

RdeOutcome solve_rde_backward(const AugmentedLtv& ga, const QsrData& qsr, const VectorXd& lambda,
                              const MatrixXd& YT, const std::optional<Schedule>& W,
                              const RdeOptions& opts) {
  if (auto v = check_r_negdef(qsr, lambda, opts.r_tolerance)) {
    throw PreconditionError("solve_rde_backward: R(t, lambda) is not negative definite at t = " +
                            std::to_string(v->time) + " (max eigenvalue " +
                            std::to_string(v->max_eigenvalue) + ")");
  }
  if ((YT - YT.transpose()).norm() > 1e-12 * std::max(1.0, YT.norm())) {
    throw PreconditionError("solve_rde_backward: terminal condition is not symmetric");
  }
  if (!(qsr.grid() == ga.grid())) throw DimensionError("solve_rde_backward: grid mismatch");
  QsrBlock c = combined_block(qsr, lambda);
  RiccatiCoefficients coeffs{ga.Aa(), ga.Ba(), std::move(c.Q), std::move(c.S), std::move(c.R), W};
  return integrate_riccati(coeffs, YT, opts);
}

double eval_j(const RdeOutcome& outcome) {
  if (!outcome.solved()) return std::numeric_limits<double>::infinity();
  const Eigen::Index n = outcome.n;
  return outcome.trajectory.values().front()((n - 1) + (n - 1) * n);
}

double rde_residual(const AugmentedLtv& ga, const QsrData& qsr, const VectorXd& lambda,
                    const DenseTrajectory<double>& Y, const std::optional<Schedule>& W) {
  QsrBlock c = combined_block(qsr, lambda);
  RiccatiCoefficients coeffs{ga.Aa(), ga.Ba(), std::move(c.Q), std::move(c.S), std::move(c.R), W};
  check_coefficients(coeffs);
  const Eigen::Index n = ga.state_size();
  RiccatiRhs rhs(coeffs);
  VectorXd y(Y.dimension()), dy(Y.dimension());
  double worst = 0.0;
  auto probe = [&](double t) {
    Y.evaluate(t, y, &dy);
    const MatrixXd F = rhs.terms(t, as_matrix(y, n));
    worst = std::max(worst, (as_matrix(dy, n) + F).norm());
  };
  const auto& times = Y.times();
  for (std::size_t i = 0; i < times.size(); ++i) {
    probe(times[i]);
    if (i + 1 < times.size()) probe(0.5 * (times[i] + times[i + 1]));
  }
  return worst;
}

LqrDesign lqr_design(const Schedule& A, const Schedule& B, const MatrixXd& Qw, const MatrixXd& Rw,
                     const MatrixXd& PT, const RdeOptions& opts) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  require_shape(A, n, n, "lqr_design: A");
  require_shape(B, n, m, "lqr_design: B");
  require_same_grid(A, B, "lqr_design: B");
  auto check = [](const MatrixXd& X, Eigen::Index size, const char* name, bool strict) {
    if (X.rows() != size || X.cols() != size) {
      throw DimensionError(std::string("lqr_design: ") + name + " has wrong shape");
    }
    if ((X - X.transpose()).norm() > 1e-12 * std::max(1.0, X.norm())) {
      throw PreconditionError(std::string("lqr_design: ") + name + " is not symmetric");
    }
    const double min_eig = Eigen::SelfAdjointEigenSolver<MatrixXd>(X).eigenvalues()(0);
    const double floor = strict ? 0.0 : -1e-12 * std::max(1.0, X.norm());
    if (strict ? !(min_eig > floor) : min_eig < floor) {
      throw PreconditionError(std::string("lqr_design: ") + name +
                              (strict ? " must be positive definite" : " must be positive semidefinite"));
    }
  };
  check(Rw, m, "Rw", true);
  check(Qw, n, "Qw", false);
  check(PT, n, "PT", false);

  const Grid& g = A.grid();
  RiccatiCoefficients coeffs{A, B, Schedule::constant(g, Qw), Schedule::constant(g, MatrixXd::Zero(n, m)),
                             Schedule::constant(g, Rw), std::nullopt};
  RdeOptions o = opts;
  o.y_max = std::numeric_limits<double>::infinity();
  RdeOutcome sol = integrate_riccati(coeffs, PT, o);
  if (!sol.solved()) throw NumericalError("lqr_design: Riccati integration failed");

  const Eigen::LLT<MatrixXd> rw(Rw);
  std::vector<MatrixXd> K;
  K.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    K.emplace_back(rw.solve(B.sample(i).transpose() * sol.Y(g[i])));
  }
  return {Schedule(g, std::move(K)), std::move(sol.trajectory)};
}

}  // namespace ltviqc
