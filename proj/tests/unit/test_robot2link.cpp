#include <gtest/gtest.h>

#include <cmath>

#include "ltviqc/ode.hpp"
#include "ltviqc/robot2link.hpp"

using namespace ltviqc;
using namespace ltviqc::robot;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(RobotParams, DerivedConstants) {
  const RobotParams p;
  EXPECT_NEAR(p.alpha(), 0.4425, 1e-12);
  EXPECT_NEAR(p.beta(), 0.09, 1e-12);
  EXPECT_NEAR(p.delta(), 0.105, 1e-12);
}

TEST(MassMatrix, KnownAngles) {
  const RobotParams p;
  const Matrix2 quarter = mass_matrix(p, EIGEN_PI / 2);
  EXPECT_NEAR(quarter(0, 0), 0.4425, 1e-12);
  EXPECT_NEAR(quarter(0, 1), 0.105, 1e-12);
  EXPECT_NEAR(quarter(1, 0), 0.105, 1e-12);
  EXPECT_NEAR(quarter(1, 1), 0.105, 1e-12);
  const Matrix2 zero = mass_matrix(p, 0.0);
  EXPECT_NEAR(zero(0, 0), p.alpha() + 2 * p.beta(), 1e-15);
  EXPECT_NEAR(zero(0, 1), p.delta() + p.beta(), 1e-15);
  // The linearization's torque input matrix is the inverse mass matrix.
  const auto J = acceleration_jacobians(p, Vector2::Zero(), Vector2::Zero(), Vector2::Zero());
  EXPECT_LT((J.torque - zero.inverse()).norm(), 1e-12);
  EXPECT_LT(J.state.norm(), 1e-15);
}

TEST(Dynamics, RestIsEquilibrium) {
  const RobotParams p;
  EXPECT_EQ(dynamics(p, Vector2(0.3, 1.1), Vector2::Zero(), Vector2::Zero()).norm(), 0.0);
  EXPECT_EQ(inverse_dynamics(p, Vector2(0.3, 1.1), Vector2::Zero(), Vector2::Zero()).norm(), 0.0);
}

TEST(Dynamics, InverseRoundTrip) {
  const RobotParams p;
  const ReferenceTrajectory ref;
  for (double t = 0.0; t <= 5.0; t += 0.37) {
    const Vector2 tau = inverse_dynamics(p, ref.position(t), ref.velocity(t), ref.acceleration(t));
    EXPECT_LT((dynamics(p, ref.position(t), ref.velocity(t), tau) - ref.acceleration(t)).norm(), 1e-10);
    EXPECT_TRUE(tau.allFinite());
  }
}

TEST(Dynamics, ConservesKineticEnergyWithoutTorque) {
  const RobotParams p;
  auto rhs = [&p](double, const Vector<double>& x, Vector<double>& dx) {
    dx.resize(4);
    dx << x.tail<2>(), dynamics(p, x.head<2>(), x.tail<2>(), Vector2::Zero());
  };
  Vector<double> x0(4);
  x0 << 0.0, 0.4, 1.5, -2.0;
  const auto r = integrate_dopri5<double>(rhs, 0.0, 5.0, x0, {1e-11, 1e-13});
  ASSERT_EQ(r.status, OdeStatus::Completed);
  const double e0 = kinetic_energy(p, x0);
  for (const auto& x : r.trajectory.values()) EXPECT_NEAR(kinetic_energy(p, x), e0, 1e-6);
}

TEST(Dynamics, JacobiansMatchFiniteDifferences) {
  const RobotParams p;
  const Vector2 th(0.4, 1.2), dth(0.7, -0.3), tau(0.2, 0.05);
  const auto J = acceleration_jacobians(p, th, dth, tau);
  Eigen::Vector4d z;
  z << th, dth;
  for (int j = 0; j < 4; ++j) {
    const double h = 1e-6;
    Eigen::Vector4d up = z, dn = z;
    up(j) += h;
    dn(j) -= h;
    const Vector2 fd = (dynamics(p, up.head<2>(), up.tail<2>(), tau) - dynamics(p, dn.head<2>(), dn.tail<2>(), tau)) / (2 * h);
    EXPECT_LT((J.state.col(j) - fd).norm(), 1e-8) << "column " << j;
  }
}

TEST(ReferenceTrajectory, BoundaryAndMidpoint) {
  const ReferenceTrajectory ref;
  const double q = EIGEN_PI / 2;
  EXPECT_EQ(ref.position(0.0), Vector2::Zero());
  EXPECT_NEAR((ref.position(5.0) - Vector2::Constant(q)).norm(), 0.0, 1e-15);
  EXPECT_EQ(ref.velocity(0.0), Vector2::Zero());
  EXPECT_EQ(ref.velocity(5.0), Vector2::Zero());
  EXPECT_EQ(ref.acceleration(0.0), Vector2::Zero());
  EXPECT_EQ(ref.acceleration(5.0), Vector2::Zero());
  EXPECT_NEAR((ref.position(2.5) - Vector2::Constant(q / 2)).norm(), 0.0, 1e-15);
  const double vmax = 15.0 / 8.0 * q / 5.0;
  EXPECT_NEAR(ref.max_speed()(0), vmax, 1e-15);
  EXPECT_NEAR(ref.velocity(2.5)(1), vmax, 1e-15);
  for (double t = 0.0; t <= 5.0; t += 0.01) EXPECT_LE(ref.velocity(t)(0), vmax + 1e-15);
  EXPECT_THROW(ReferenceTrajectory(0.0), PreconditionError);
}

TEST(ReferenceTrajectory, DerivativesAreConsistent) {
  const ReferenceTrajectory ref;
  const double h = 1e-5;
  for (double t : {0.7, 2.2, 4.3}) {
    EXPECT_NEAR(((ref.position(t + h) - ref.position(t - h)) / (2 * h) - ref.velocity(t)).norm(), 0.0, 1e-8);
    EXPECT_NEAR(((ref.velocity(t + h) - ref.velocity(t - h)) / (2 * h) - ref.acceleration(t)).norm(), 0.0, 1e-8);
  }
}

TEST(Benchmark, NominalTracksReference) {
  const RobotBenchmark b = build_benchmark(FullBlock{0.2});
  const Grid& g = b.nominal.grid;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    worst = std::max(worst, (b.nominal.xbar.sample(i) - MatrixXd(b.reference.state(g[i]))).cwiseAbs().maxCoeff());
    worst = std::max(worst, b.nominal.ebar.sample(i).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-6);
  // With e = 0 the commanded torque is the feedforward.
  const Vector2 tau = inverse_dynamics(RobotParams{}, b.reference.position(1.0), b.reference.velocity(1.0),
                                       b.reference.acceleration(1.0));
  EXPECT_LT((b.nominal.vbar(1.0) - MatrixXd(tau)).norm(), 1e-5);
}

TEST(Benchmark, LqrTerminalGain) {
  const RobotBenchmark b = build_benchmark(FullBlock{0.2});
  // K(T) = Rw^{-1} B(T)' PT with B = [0; M^{-1}] at the goal and PT = I.
  MatrixXd B = MatrixXd::Zero(4, 2);
  B.bottomRows<2>() = mass_matrix(RobotParams{}, EIGEN_PI / 2).inverse();
  EXPECT_LT((b.lqr.gain.sample(b.lqr.gain.size() - 1) - B.transpose()).norm(), 1e-9);
}

TEST(Benchmark, Structures) {
  RobotProblemOptions o;
  o.grid_points = 101;
  const AnalysisProblem full = build_analysis_problem(FullBlock{0.1}, o);
  EXPECT_EQ(full.system.dims().n_w, 2);
  EXPECT_EQ(full.iqcs.size(), 1u);
  EXPECT_EQ(full.system.dims().n_e, 4);
  const AnalysisProblem ch1 = build_analysis_problem(Channel1{0.1}, o);
  EXPECT_EQ(ch1.system.dims().n_w, 1);
  EXPECT_EQ(ch1.system.dims().n_v, 1);
  const AnalysisProblem diag = build_analysis_problem(Diagonal{0.05, 0.8}, o);
  EXPECT_EQ(diag.system.dims().n_w, 2);
  EXPECT_EQ(diag.iqcs.size(), 2u);
  // Dvw and Dew vanish for this loop topology.
  EXPECT_EQ(diag.system.Dvw().sample(10).norm(), 0.0);
  EXPECT_EQ(diag.system.Dew().sample(10).norm(), 0.0);
  EXPECT_THROW(build_analysis_problem(FullBlock{0.0}, o), PreconditionError);
  EXPECT_THROW(build_analysis_problem(Diagonal{0.1, -1.0}, o), PreconditionError);
}

TEST(Describe, Labels) {
  EXPECT_EQ(describe(FullBlock{0.2}), "full beta=0.2");
  EXPECT_EQ(describe(Channel2{0.05}), "ch2 beta=0.05");
  EXPECT_EQ(describe(Diagonal{0.05, 0.8}), "diagonal beta1=0.05 beta2=0.8");
}
