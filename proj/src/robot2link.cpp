#include "ltviqc/robot2link.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

namespace ltviqc::robot {

Matrix2 mass_matrix(const RobotParams& p, double theta2) {
  const double a = p.alpha(), b = p.beta(), d = p.delta();
  const double c = std::cos(theta2);
  Matrix2 M;
  M << a + 2 * b * c, d + b * c,
       d + b * c, d;
  return M;
}

Vector2 coriolis(const RobotParams& p, double theta2, const Vector2& dtheta) {
  const double bs = p.beta() * std::sin(theta2);
  return {-bs * (2 * dtheta(0) * dtheta(1) + dtheta(1) * dtheta(1)), bs * dtheta(0) * dtheta(0)};
}

namespace {

Eigen::PartialPivLU<Matrix2> factor_mass(const RobotParams& p, double theta2) {
  const Matrix2 M = mass_matrix(p, theta2);
  if (!(std::abs(M.determinant()) > 1e-12)) {
    throw NumericalError("robot: mass matrix is singular at theta2 = " + std::to_string(theta2));
  }
  return Eigen::PartialPivLU<Matrix2>(M);
}

Vector2 head2(const VectorXd& v, Eigen::Index offset) { return v.segment<2>(offset); }

}  // namespace

Vector2 dynamics(const RobotParams& p, const Vector2& theta, const Vector2& dtheta, const Vector2& tau) {
  return factor_mass(p, theta(1)).solve(tau - coriolis(p, theta(1), dtheta));
}

Vector2 inverse_dynamics(const RobotParams& p, const Vector2& theta, const Vector2& dtheta,
                         const Vector2& ddtheta) {
  return mass_matrix(p, theta(1)) * ddtheta + coriolis(p, theta(1), dtheta);
}

AccelerationJacobians acceleration_jacobians(const RobotParams& p, const Vector2& theta,
                                             const Vector2& dtheta, const Vector2& tau) {
  const auto lu = factor_mass(p, theta(1));
  const Vector2 dd = lu.solve(tau - coriolis(p, theta(1), dtheta));
  const double b = p.beta();
  const double s = std::sin(theta(1)), c = std::cos(theta(1));
  const double q1 = dtheta(0), q2 = dtheta(1);

  Matrix2 dM;  // dM / dtheta2
  dM << -2 * b * s, -b * s,
        -b * s, 0.0;
  const Vector2 dh_dtheta2(-b * c * (2 * q1 * q2 + q2 * q2), b * c * q1 * q1);
  Matrix2 dh_ddtheta;
  dh_ddtheta << -2 * b * s * q2, -b * s * (2 * q1 + 2 * q2),
                2 * b * s * q1, 0.0;

  AccelerationJacobians J;
  J.torque = lu.inverse();
  J.state.col(0).setZero();
  J.state.col(1) = lu.solve(-dM * dd - dh_dtheta2);
  J.state.rightCols<2>() = -J.torque * dh_ddtheta;
  return J;
}

double kinetic_energy(const RobotParams& p, const Vector4& eta) {
  const Vector2 dq = eta.tail<2>();
  return 0.5 * dq.dot(mass_matrix(p, eta(1)) * dq);
}

ReferenceTrajectory::ReferenceTrajectory(double horizon, Vector2 start, Vector2 goal)
    : T_(horizon), start_(std::move(start)), goal_(std::move(goal)) {
  if (!(horizon > 0.0)) throw PreconditionError("ReferenceTrajectory: horizon must be positive");
}

namespace {

/// s(u), s'(u), s''(u) of the quintic blend, with u clamped to [0, 1].
std::array<double, 3> blend(double u) {
  u = std::clamp(u, 0.0, 1.0);
  const double u2 = u * u, u3 = u2 * u;
  return {u3 * (10 - 15 * u + 6 * u2), 30 * u2 * (1 - 2 * u + u2), 60 * u * (1 - 3 * u + 2 * u2)};
}

}  // namespace

Vector2 ReferenceTrajectory::position(double t) const {
  return start_ + (goal_ - start_) * blend(t / T_)[0];
}

Vector2 ReferenceTrajectory::velocity(double t) const {
  return (goal_ - start_) * (blend(t / T_)[1] / T_);
}

Vector2 ReferenceTrajectory::acceleration(double t) const {
  return (goal_ - start_) * (blend(t / T_)[2] / (T_ * T_));
}

Vector4 ReferenceTrajectory::state(double t) const {
  Vector4 x;
  x << position(t), velocity(t);
  return x;
}

Vector2 ReferenceTrajectory::max_speed() const { return (goal_ - start_).cwiseAbs() * (15.0 / 8.0 / T_); }

VectorXd OpenLoopRobot::f(const VectorXd& x, const VectorXd& w, const VectorXd& d, double) const {
  VectorXd dx(4);
  dx << x.tail<2>(), dynamics(p_, head2(x, 0), head2(x, 2), head2(d, 0) + head2(w, 0));
  return dx;
}

VectorXd OpenLoopRobot::g_v(const VectorXd&, const VectorXd&, const VectorXd& d, double) const { return d; }

VectorXd OpenLoopRobot::g_e(const VectorXd& x, const VectorXd&, const VectorXd&, double) const { return x; }

std::optional<ModelJacobians> OpenLoopRobot::jacobians(const VectorXd& x, const VectorXd& w,
                                                       const VectorXd& d, double) const {
  const auto J = acceleration_jacobians(p_, head2(x, 0), head2(x, 2), head2(d, 0) + head2(w, 0));
  ModelJacobians out{MatrixXd::Zero(4, 4), MatrixXd::Zero(4, 2), MatrixXd::Zero(2, 4),
                     MatrixXd::Zero(2, 2), MatrixXd::Identity(4, 4), MatrixXd::Zero(4, 2)};
  out.A.topRightCorner<2, 2>().setIdentity();
  out.A.bottomRows<2>() = J.state;
  out.B.bottomRows<2>() = J.torque;
  return out;
}

ClosedLoopRobot::ClosedLoopRobot(RobotParams p, Schedule gain) : p_(p), K_(std::move(gain)) {
  require_shape(K_, 2, 4, "ClosedLoopRobot: gain");
}

VectorXd ClosedLoopRobot::g_v(const VectorXd& x, const VectorXd&, const VectorXd& d, double t) const {
  return d.tail<2>() + K_(t) * (d.head<4>() - x);
}

VectorXd ClosedLoopRobot::f(const VectorXd& x, const VectorXd& w, const VectorXd& d, double t) const {
  const VectorXd tau = g_v(x, w, d, t) + w;
  VectorXd dx(4);
  dx << x.tail<2>(), dynamics(p_, head2(x, 0), head2(x, 2), tau);
  return dx;
}

VectorXd ClosedLoopRobot::g_e(const VectorXd& x, const VectorXd&, const VectorXd& d, double) const {
  return d.head<4>() - x;
}

std::optional<ModelJacobians> ClosedLoopRobot::jacobians(const VectorXd& x, const VectorXd& w,
                                                         const VectorXd& d, double t) const {
  const MatrixXd K = K_(t);
  const VectorXd tau = g_v(x, w, d, t) + w;
  const auto J = acceleration_jacobians(p_, head2(x, 0), head2(x, 2), tau);
  ModelJacobians out{MatrixXd::Zero(4, 4), MatrixXd::Zero(4, 2), -K,
                     MatrixXd::Zero(2, 2), -MatrixXd::Identity(4, 4), MatrixXd::Zero(4, 2)};
  out.A.topRightCorner<2, 2>().setIdentity();
  out.A.bottomRows<2>() = J.state - J.torque * K;
  out.B.bottomRows<2>() = J.torque;
  return out;
}

std::string describe(const UncertaintyStructure& s) {
  std::ostringstream out;
  auto num = [](double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
  };
  std::visit(
      [&out, &num](const auto& u) {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, FullBlock>) {
          out << "full beta=" << num(u.beta);
        } else if constexpr (std::is_same_v<T, Channel1>) {
          out << "ch1 beta=" << num(u.beta);
        } else if constexpr (std::is_same_v<T, Channel2>) {
          out << "ch2 beta=" << num(u.beta);
        } else {
          out << "diagonal beta1=" << num(u.beta1) << " beta2=" << num(u.beta2);
        }
      },
      s);
  return out.str();
}

RobotBenchmark build_benchmark(const UncertaintyStructure& structure, const RobotProblemOptions& opts) {
  const RobotParams& p = opts.params;
  const Grid grid = Grid::uniform(opts.horizon, opts.grid_points);
  ReferenceTrajectory ref(opts.horizon);
  auto taubar = [&](double t) -> VectorXd {
    return inverse_dynamics(p, ref.position(t), ref.velocity(t), ref.acceleration(t));
  };
  auto etabar = [&](double t) -> VectorXd { return ref.state(t); };

  // Open-loop linearization along the reference for the tracking LQR.
  const Schedule eta_s = Schedule::sample(grid, etabar);
  const Schedule tau_s = Schedule::sample(grid, taubar);
  const Trajectory open_loop{grid, eta_s, tau_s, eta_s, tau_s, ref.state(0.0)};
  const Linearization ol = linearize(OpenLoopRobot(p), open_loop, {opts.jacobians});
  LqrDesign lqr = lqr_design(ol.system.A(), ol.system.B(), opts.lqr.Qw, opts.lqr.Rw, opts.lqr.PT, opts.rde);

  const ClosedLoopRobot cl(p, lqr.gain);
  InputSignal dbar = [&](double t) -> VectorXd {
    VectorXd d(6);
    d << etabar(t), taubar(t);
    return d;
  };
  Trajectory nominal = simulate_nominal(cl, dbar, ref.state(0.0), grid, opts.simulation);
  Linearization lin = linearize(cl, nominal, {opts.jacobians});

  auto build = [&](std::span<const Eigen::Index> channels, std::vector<Iqc> iqcs) {
    if (channels.empty()) return make_problem(augment(lin.system, lin.vbar), std::move(iqcs));
    const ChannelSelection sel = select_channels(lin.system, lin.vbar, channels);
    return make_problem(augment(sel.system, sel.vbar), std::move(iqcs));
  };
  auto positive = [](double b) {
    if (!(b > 0.0) || !std::isfinite(b)) throw PreconditionError("robot: uncertainty bounds must be positive");
    return b;
  };
  static constexpr std::array<Eigen::Index, 1> kFirst{0}, kSecond{1};
  AnalysisProblem problem = std::visit(
      [&](const auto& u) -> AnalysisProblem {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, FullBlock>) {
          return build({}, {Iqc::norm_bounded(positive(u.beta), 2, "full")});
        } else if constexpr (std::is_same_v<T, Channel1>) {
          return build(kFirst, {Iqc::norm_bounded(positive(u.beta), 1, "ch1")});
        } else if constexpr (std::is_same_v<T, Channel2>) {
          return build(kSecond, {Iqc::norm_bounded(positive(u.beta), 1, "ch2")});
        } else {
          return build({}, {Iqc::channel_norm_bounded(positive(u.beta1), 2, 0, "ch1"),
                            Iqc::channel_norm_bounded(positive(u.beta2), 2, 1, "ch2")});
        }
      },
      structure);

  return {ref, std::move(lqr), std::move(nominal), std::move(lin), std::move(problem)};
}

AnalysisProblem build_analysis_problem(const UncertaintyStructure& structure, const RobotProblemOptions& opts) {
  return std::move(build_benchmark(structure, opts).problem);
}

}  // namespace ltviqc::robot
