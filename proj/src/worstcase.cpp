#include "ltviqc/worstcase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ltviqc {

std::string_view to_string(CutKind kind) {
  switch (kind) {
    case CutKind::Subgradient:
      return "subgradient";
    case CutKind::NonnegCut:
      return "nonneg";
    case CutKind::EscapeCut:
      return "escape";
    case CutKind::RIndefCut:
      return "r_indef";
  }
  return "unknown";
}

double Witness::lq_cost(const VectorXd& lambda) const {
  if (lambda.size() + 1 != block_integrals.size()) {
    throw DimensionError("Witness::lq_cost: lambda has wrong length");
  }
  return block_integrals(0) + lambda.dot(block_integrals.tail(lambda.size()));
}

double Witness::energy() const {
  double e = 0.0;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double a = state[i].squaredNorm() + disturbance[i].squaredNorm();
    const double b = state[i + 1].squaredNorm() + disturbance[i + 1].squaredNorm();
    e += 0.5 * (times[i + 1] - times[i]) * (a + b);
  }
  return e;
}

namespace {

const QsrBlock& block_of(const QsrData& qsr, std::size_t k) {
  return k == 0 ? qsr.performance : qsr.iqc.at(k - 1);
}

/// Integrates the closed loop  dxa = (Aa - Ba R^{-1}(Y Ba + S)') xa  forward
/// from (t_start, x_start) to T together with the running block integrals.
Witness forward_sweep(const AugmentedLtv& ga, const QsrData& qsr, const VectorXd& lambda,
                      const DenseTrajectory<double>& Y, double t_start, const VectorXd& x_start,
                      const RdeOptions& opts) {
  const Eigen::Index n = ga.state_size();
  const Eigen::Index nw = ga.dims().n_w;
  const std::size_t nb = qsr.multiplier_count() + 1;
  const double T = ga.grid().horizon();
  const QsrBlock combined = combined_block(qsr, lambda);

  struct Scratch {
    MatrixXd A, B, S, R, Qk, Sk, Rk, T1, K;
    VectorXd y, w;
    Eigen::LDLT<MatrixXd> ldlt;
  } s{MatrixXd(n, n), MatrixXd(n, nw), MatrixXd(n, nw), MatrixXd(nw, nw), MatrixXd(n, n),
      MatrixXd(n, nw), MatrixXd(nw, nw), MatrixXd(n, nw), MatrixXd(nw, n), VectorXd(n * n),
      VectorXd(nw), {}};

  auto gain_at = [&](double t) {
    ga.Aa().evaluate(t, s.A);
    ga.Ba().evaluate(t, s.B);
    combined.S.evaluate(t, s.S);
    combined.R.evaluate(t, s.R);
    Y.evaluate(t, s.y, nullptr);
    const Eigen::Map<const MatrixXd> Ym(s.y.data(), n, n);
    s.T1.noalias() = Ym * s.B;
    s.T1 += s.S;
    s.ldlt.compute(s.R);
    s.K = s.ldlt.solve(s.T1.transpose());
  };

  auto rhs = [&](double t, const VectorXd& z, VectorXd& dz) {
    gain_at(t);
    const auto x = z.head(n);
    s.w.noalias() = -s.K * x;
    dz.head(n).noalias() = s.A * x;
    dz.head(n).noalias() += s.B * s.w;
    for (std::size_t k = 0; k < nb; ++k) {
      const QsrBlock& b = block_of(qsr, k);
      b.Q.evaluate(t, s.Qk);
      b.S.evaluate(t, s.Sk);
      b.R.evaluate(t, s.Rk);
      dz(n + static_cast<Eigen::Index>(k)) =
          x.dot(s.Qk * x) + 2.0 * x.dot(s.Sk * s.w) + s.w.dot(s.Rk * s.w);
    }
  };

  std::vector<double> breaks;
  for (double t : ga.grid().points()) {
    if (t > t_start) breaks.push_back(t);
  }
  for (double t : Y.times()) {
    if (t > t_start) breaks.push_back(t);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  VectorXd z0 = VectorXd::Zero(n + static_cast<Eigen::Index>(nb));
  z0.head(n) = x_start;
  OdeOptions<double> ode = opts.ode();
  auto res = integrate_dopri5<double>(rhs, t_start, T, z0, ode, std::span<const double>(breaks));
  if (res.status != OdeStatus::Completed) {
    throw NumericalError("optimal disturbance sweep failed at t = " + std::to_string(res.t_end));
  }

  Witness wit;
  const auto& traj = res.trajectory;
  wit.times = traj.times();
  wit.state.reserve(traj.size());
  wit.disturbance.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const VectorXd x = traj.values()[i].head(n);
    gain_at(traj.times()[i]);
    wit.disturbance.emplace_back(-s.K * x);
    wit.state.push_back(x);
  }
  wit.block_integrals = traj.values().back().tail(static_cast<Eigen::Index>(nb));
  return wit;
}

}  // namespace

Witness optimal_disturbance(const AugmentedLtv& ga, const QsrData& qsr, const VectorXd& lambda,
                            const RdeOutcome& solved, const RdeOptions& opts) {
  if (!solved.solved()) throw PreconditionError("optimal_disturbance: Riccati solution escaped");
  if (solved.n != ga.state_size()) throw DimensionError("optimal_disturbance: size mismatch");
  return forward_sweep(ga, qsr, lambda, solved.trajectory, 0.0, ga.initial_state(), opts);
}

CutVector subgradient(const QsrData& qsr, const Witness& witness, double J) {
  const auto m = static_cast<Eigen::Index>(qsr.multiplier_count());
  if (witness.block_integrals.size() != m + 1) {
    throw DimensionError("subgradient: witness does not match the IQC count");
  }
  return {witness.block_integrals.tail(m), CutKind::Subgradient, J, witness};
}

CutVector escape_cut(const AugmentedLtv& ga, const QsrData& qsr, const VectorXd& lambda,
                     const RdeOutcome& escaped, const RdeOptions& opts) {
  if (escaped.solved()) throw PreconditionError("escape_cut: Riccati solution did not escape");
  if (!escaped.probe) {
    throw EscapeAtHorizonError("escape_cut: Riccati solution escaped within the first step from T");
  }
  EscapeProbe probe = *escaped.probe;
  const double rho_floor = 1e-3 * opts.probe_low;
  if (probe.spectral_radius < opts.probe_low) {
    // Retry closer to the escape time: the last accepted point before blow-up.
    const auto& traj = escaped.trajectory;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(
        Eigen::Map<const MatrixXd>(traj.values().front().data(), escaped.n, escaped.n));
    Eigen::Index idx = 0;
    eig.eigenvalues().cwiseAbs().maxCoeff(&idx);
    probe = {traj.times().front(), std::abs(eig.eigenvalues()(idx)), eig.eigenvectors().col(idx)};
    if (probe.spectral_radius < rho_floor) {
      throw NumericalError("escape_cut: degenerate probe, spectral radius " +
                           std::to_string(probe.spectral_radius));
    }
  }
  // The witness starts at rho^{-1} v. Integrate from the unit vector v and
  // rescale afterwards; the pair is linear in its initial state.
  Witness wit = forward_sweep(ga, qsr, lambda, escaped.trajectory, probe.time, probe.direction, opts);
  const double scale = 1.0 / probe.spectral_radius;
  for (auto& x : wit.state) x *= scale;
  for (auto& w : wit.disturbance) w *= scale;
  wit.block_integrals *= scale * scale;
  const auto m = static_cast<Eigen::Index>(qsr.multiplier_count());
  VectorXd g = wit.block_integrals.tail(m);
  if (!(g.cwiseAbs().maxCoeff() > 0.0)) throw NumericalError("escape_cut: zero cut vector");
  return {std::move(g), CutKind::EscapeCut, std::numeric_limits<double>::infinity(), std::move(wit)};
}

CutVector r_indef_cut(const QsrData& qsr, const VectorXd& lambda, const RViolation& violation) {
  const auto m = static_cast<Eigen::Index>(qsr.multiplier_count());
  if (lambda.size() != m) throw DimensionError("r_indef_cut: lambda has wrong length");
  VectorXd g(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const MatrixXd& Ri = qsr.iqc[static_cast<std::size_t>(i)].R.sample(violation.grid_index);
    g(i) = violation.direction.dot(Ri * violation.direction);
  }
  if (!(g.cwiseAbs().maxCoeff() > 1e-14)) {
    throw NumericalError("r_indef_cut: R(t, lambda) does not depend on lambda along the violating "
                         "direction at t = " + std::to_string(violation.time));
  }
  return {std::move(g), CutKind::RIndefCut, std::numeric_limits<double>::infinity(), std::nullopt};
}

CutVector nonneg_cut(const VectorXd& lambda) {
  Eigen::Index idx = 0;
  const double most_negative = lambda.minCoeff(&idx);
  if (!(most_negative < 0.0)) throw PreconditionError("nonneg_cut: lambda has no negative entry");
  VectorXd g = VectorXd::Zero(lambda.size());
  g(idx) = -1.0;
  return {std::move(g), CutKind::NonnegCut, std::numeric_limits<double>::infinity(), std::nullopt};
}

CutVector evaluate_cut(const AnalysisProblem& problem, const VectorXd& lambda,
                       const RdeOptions& opts) {
  if (lambda.size() > 0 && lambda.minCoeff() < 0.0) return nonneg_cut(lambda);
  if (auto violation = check_r_negdef(problem.qsr, lambda, opts.r_tolerance)) {
    return r_indef_cut(problem.qsr, lambda, *violation);
  }
  const Eigen::Index n = problem.system.state_size();
  RdeOutcome sol = solve_rde_backward(problem.system, problem.qsr, lambda, MatrixXd::Zero(n, n),
                                      std::nullopt, opts);
  if (sol.solved()) {
    const double J = eval_j(sol);
    Witness wit = optimal_disturbance(problem.system, problem.qsr, lambda, sol, opts);
    return subgradient(problem.qsr, wit, J);
  }
  return escape_cut(problem.system, problem.qsr, lambda, sol, opts);
}

double trapezoid_block_integral(const QsrData& qsr, std::size_t k, const Witness& witness) {
  const QsrBlock& b = block_of(qsr, k);
  auto integrand = [&](std::size_t i) {
    const double t = witness.times[i];
    const VectorXd& x = witness.state[i];
    const VectorXd& w = witness.disturbance[i];
    return x.dot(b.Q(t) * x) + 2.0 * x.dot(b.S(t) * w) + w.dot(b.R(t) * w);
  };
  double total = 0.0;
  double prev = witness.times.empty() ? 0.0 : integrand(0);
  for (std::size_t i = 1; i < witness.times.size(); ++i) {
    const double cur = integrand(i);
    total += 0.5 * (witness.times[i] - witness.times[i - 1]) * (prev + cur);
    prev = cur;
  }
  return total;
}

}  // namespace ltviqc
