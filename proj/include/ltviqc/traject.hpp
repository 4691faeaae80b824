#pragma once

#include <functional>
#include <optional>

#include "ltviqc/core.hpp"
#include "ltviqc/lintime.hpp"
#include "ltviqc/ode.hpp"

namespace ltviqc {

struct ModelDims {
  Eigen::Index n_x = 0;
  Eigen::Index n_w = 0;
  Eigen::Index n_d = 0;
  Eigen::Index n_v = 0;
  Eigen::Index n_e = 0;
};

/// Partial derivatives of (f, g_v, g_e) with respect to x and w.
struct ModelJacobians {
  MatrixXd A;    // df/dx
  MatrixXd B;    // df/dw
  MatrixXd Cv;   // dg_v/dx
  MatrixXd Dvw;  // dg_v/dw
  MatrixXd Ce;   // dg_e/dx
  MatrixXd Dew;  // dg_e/dw
};

/// Uncertain nonlinear model
///   dx = f(x, w, d, t),  v = g_v(x, w, d, t),  e = g_e(x, w, d, t),  w = Delta(v).
class NonlinearModel {
 public:
  virtual ~NonlinearModel() = default;

  virtual ModelDims dims() const = 0;
  virtual VectorXd f(const VectorXd& x, const VectorXd& w, const VectorXd& d, double t) const = 0;
  virtual VectorXd g_v(const VectorXd& x, const VectorXd& w, const VectorXd& d, double t) const = 0;
  virtual VectorXd g_e(const VectorXd& x, const VectorXd& w, const VectorXd& d, double t) const = 0;

  /// Analytic Jacobians, if the model provides them.
  virtual std::optional<ModelJacobians> jacobians(const VectorXd& x, const VectorXd& w,
                                                  const VectorXd& d, double t) const {
    (void)x, (void)w, (void)d, (void)t;
    return std::nullopt;
  }

  /// False if the evaluators must not be called from several threads at once.
  virtual bool concurrent_safe() const { return true; }
};

using InputSignal = std::function<VectorXd(double)>;

/// Nominal signals (w = 0) sampled on the analysis grid.
struct Trajectory {
  Grid grid;
  Schedule xbar;
  Schedule vbar;
  Schedule ebar;
  Schedule dbar;
  VectorXd x0;
};

/// Integrates dx = f(x, 0, dbar(t), t) from x0 over the grid horizon.
Trajectory simulate_nominal(const NonlinearModel& model, const InputSignal& dbar, const VectorXd& x0,
                            const Grid& grid, const OdeOptions<double>& opts = {});

/// Same, with dbar given as a schedule (linear between samples).
Trajectory simulate_nominal(const NonlinearModel& model, const Schedule& dbar, const VectorXd& x0,
                            const OdeOptions<double>& opts = {});

enum class JacobianMethod { Auto, Analytic, FiniteDifference };

/// Central differences with step 1e-6 (1 + |z_j|) per coordinate.
ModelJacobians finite_difference_jacobians(const NonlinearModel& model, const VectorXd& x,
                                           const VectorXd& w, const VectorXd& d, double t);

ModelJacobians model_jacobians(const NonlinearModel& model, const VectorXd& x, const VectorXd& w,
                               const VectorXd& d, double t,
                               JacobianMethod method = JacobianMethod::Auto);

struct Linearization {
  LtvSystem system;
  Schedule vbar;
};

struct LinearizeOptions {
  JacobianMethod method = JacobianMethod::Auto;
  /// Worker threads for the per-sample Jacobians; ignored for models that
  /// are not concurrent_safe.
  unsigned threads = 1;
};

/// Jacobians of the model along the nominal trajectory, one per grid point.
Linearization linearize(const NonlinearModel& model, const Trajectory& traj,
                        const LinearizeOptions& opts = {});

}  // namespace ltviqc
