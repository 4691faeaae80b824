#pragma once

#include <string>
#include <variant>

#include "ltviqc/core.hpp"
#include "ltviqc/lintime.hpp"
#include "ltviqc/rde.hpp"
#include "ltviqc/traject.hpp"

namespace ltviqc::robot {

using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;
using Vector4 = Eigen::Vector4d;

/// Planar two-link arm without gravity.
struct RobotParams {
  double m1 = 3.0, m2 = 2.0;     // kg
  double l1 = 0.3, l2 = 0.3;     // m
  double r1 = 0.15, r2 = 0.15;   // m, joint to center of mass
  double I1 = 0.09, I2 = 0.06;   // kg m^2

  double alpha() const { return I1 + I2 + m1 * r1 * r1 + m2 * (l1 * l1 + r2 * r2); }
  double beta() const { return m2 * l1 * r2; }
  double delta() const { return I2 + m2 * r2 * r2; }
};

Matrix2 mass_matrix(const RobotParams& p, double theta2);

/// Velocity-dependent torque C(theta, dtheta) dtheta.
Vector2 coriolis(const RobotParams& p, double theta2, const Vector2& dtheta);

/// Joint accelerations for the applied torque.
Vector2 dynamics(const RobotParams& p, const Vector2& theta, const Vector2& dtheta, const Vector2& tau);

/// Torque producing the given accelerations.
Vector2 inverse_dynamics(const RobotParams& p, const Vector2& theta, const Vector2& dtheta,
                         const Vector2& ddtheta);

struct AccelerationJacobians {
  Eigen::Matrix<double, 2, 4> state;  // d ddtheta / d [theta; dtheta]
  Matrix2 torque;                     // d ddtheta / d tau = M^{-1}
};

AccelerationJacobians acceleration_jacobians(const RobotParams& p, const Vector2& theta,
                                             const Vector2& dtheta, const Vector2& tau);

/// Kinetic energy 0.5 dtheta' M(theta2) dtheta.
double kinetic_energy(const RobotParams& p, const Vector4& eta);

/// Quintic rest-to-rest joint trajectory
///   theta(t) = start + (goal - start) (10 u^3 - 15 u^4 + 6 u^5),  u = t / T.
class ReferenceTrajectory {
 public:
  explicit ReferenceTrajectory(double horizon = 5.0, Vector2 start = Vector2::Zero(),
                               Vector2 goal = Vector2::Constant(EIGEN_PI / 2));

  double horizon() const { return T_; }
  Vector2 position(double t) const;
  Vector2 velocity(double t) const;
  Vector2 acceleration(double t) const;
  /// [theta; dtheta]
  Vector4 state(double t) const;
  /// Largest joint speed, reached at t = T/2: (15/8) |goal - start| / T.
  Vector2 max_speed() const;

 private:
  double T_;
  Vector2 start_, goal_;
};

/// x = [theta; dtheta], w: additive torque, d = tau, v = tau, e = x.
class OpenLoopRobot : public NonlinearModel {
 public:
  explicit OpenLoopRobot(RobotParams p = {}) : p_(p) {}

  ModelDims dims() const override { return {4, 2, 2, 2, 4}; }
  VectorXd f(const VectorXd& x, const VectorXd& w, const VectorXd& d, double t) const override;
  VectorXd g_v(const VectorXd& x, const VectorXd& w, const VectorXd& d, double t) const override;
  VectorXd g_e(const VectorXd& x, const VectorXd& w, const VectorXd& d, double t) const override;
  std::optional<ModelJacobians> jacobians(const VectorXd& x, const VectorXd& w, const VectorXd& d,
                                          double t) const override;

 private:
  RobotParams p_;
};

/// Tracking loop: d = [etabar; taubar], commanded torque v = taubar + K(t)(etabar - x),
/// applied torque v + w, tracking error e = etabar - x.
class ClosedLoopRobot : public NonlinearModel {
 public:
  ClosedLoopRobot(RobotParams p, Schedule gain);

  ModelDims dims() const override { return {4, 2, 6, 2, 4}; }
  VectorXd f(const VectorXd& x, const VectorXd& w, const VectorXd& d, double t) const override;
  VectorXd g_v(const VectorXd& x, const VectorXd& w, const VectorXd& d, double t) const override;
  VectorXd g_e(const VectorXd& x, const VectorXd& w, const VectorXd& d, double t) const override;
  std::optional<ModelJacobians> jacobians(const VectorXd& x, const VectorXd& w, const VectorXd& d,
                                          double t) const override;

  const Schedule& gain() const { return K_; }

 private:
  RobotParams p_;
  Schedule K_;
};

struct FullBlock {
  double beta;
};
struct Channel1 {
  double beta;
};
struct Channel2 {
  double beta;
};
struct Diagonal {
  double beta1;
  double beta2;
};
using UncertaintyStructure = std::variant<FullBlock, Channel1, Channel2, Diagonal>;

std::string describe(const UncertaintyStructure& s);

struct LqrWeights {
  MatrixXd Qw = MatrixXd::Identity(4, 4);
  MatrixXd Rw = MatrixXd::Identity(2, 2);
  MatrixXd PT = MatrixXd::Identity(4, 4);
};

struct RobotProblemOptions {
  RobotParams params;
  double horizon = 5.0;
  std::size_t grid_points = 501;
  LqrWeights lqr;
  RdeOptions rde;
  OdeOptions<double> simulation;
  JacobianMethod jacobians = JacobianMethod::Auto;
};

/// Intermediate products of the benchmark construction.
struct RobotBenchmark {
  ReferenceTrajectory reference;
  LqrDesign lqr;
  Trajectory nominal;        // closed-loop nominal simulation
  Linearization closed_loop; // before channel pruning
  AnalysisProblem problem;
};

RobotBenchmark build_benchmark(const UncertaintyStructure& structure, const RobotProblemOptions& opts = {});

AnalysisProblem build_analysis_problem(const UncertaintyStructure& structure,
                                       const RobotProblemOptions& opts = {});

}  // namespace ltviqc::robot
