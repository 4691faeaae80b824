#include "ltviqc/traject.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

namespace ltviqc {

namespace {

void check_dims(const char* what, const VectorXd& v, Eigen::Index expected, double t) {
  if (v.size() != expected) {
    throw DimensionError(std::string("model ") + what + " returned length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(expected));
  }
  if (!v.allFinite()) {
    throw NumericalError(std::string("model ") + what + " is not finite at t = " + std::to_string(t));
  }
}

void check_jacobians(const ModelJacobians& J, const ModelDims& d, double t) {
  auto check = [t](const MatrixXd& m, Eigen::Index r, Eigen::Index c, const char* name) {
    if (m.rows() != r || m.cols() != c) {
      throw DimensionError(std::string("Jacobian ") + name + " is " + shape_string(m.rows(), m.cols()) +
                           ", expected " + shape_string(r, c));
    }
    if (!m.allFinite()) {
      throw NumericalError(std::string("Jacobian ") + name + " is not finite at t = " + std::to_string(t));
    }
  };
  check(J.A, d.n_x, d.n_x, "A");
  check(J.B, d.n_x, d.n_w, "B");
  check(J.Cv, d.n_v, d.n_x, "Cv");
  check(J.Dvw, d.n_v, d.n_w, "Dvw");
  check(J.Ce, d.n_e, d.n_x, "Ce");
  check(J.Dew, d.n_e, d.n_w, "Dew");
}

}  // namespace

Trajectory simulate_nominal(const NonlinearModel& model, const InputSignal& dbar, const VectorXd& x0,
                            const Grid& grid, const OdeOptions<double>& opts) {
  const ModelDims d = model.dims();
  if (x0.size() != d.n_x) throw DimensionError("simulate_nominal: x0 has wrong length");
  if (!x0.allFinite()) throw PreconditionError("simulate_nominal: x0 is not finite");
  const VectorXd w0 = VectorXd::Zero(d.n_w);

  auto rhs = [&](double t, const VectorXd& x, VectorXd& dx) { dx = model.f(x, w0, dbar(t), t); };
  auto finite = [](double, const VectorXd& x, const VectorXd&) { return x.allFinite(); };
  auto res = integrate_dopri5<double>(rhs, 0.0, grid.horizon(), x0, opts, grid.points(), finite);
  if (res.status != OdeStatus::Completed) {
    throw NumericalError("simulate_nominal: nominal state is not finite beyond t = " +
                         std::to_string(res.t_end));
  }

  std::vector<MatrixXd> xs, vs, es, ds;
  xs.reserve(grid.size());
  vs.reserve(grid.size());
  es.reserve(grid.size());
  ds.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    VectorXd x = i == 0 ? x0 : res.trajectory.value(t);
    VectorXd di = dbar(t);
    check_dims("input", di, d.n_d, t);
    VectorXd v = model.g_v(x, w0, di, t);
    VectorXd e = model.g_e(x, w0, di, t);
    check_dims("g_v", v, d.n_v, t);
    check_dims("g_e", e, d.n_e, t);
    xs.emplace_back(std::move(x));
    vs.emplace_back(std::move(v));
    es.emplace_back(std::move(e));
    ds.emplace_back(std::move(di));
  }
  return {grid,
          Schedule(grid, std::move(xs)),
          Schedule(grid, std::move(vs)),
          Schedule(grid, std::move(es)),
          Schedule(grid, std::move(ds)),
          x0};
}

Trajectory simulate_nominal(const NonlinearModel& model, const Schedule& dbar, const VectorXd& x0,
                            const OdeOptions<double>& opts) {
  if (dbar.cols() != 1) throw DimensionError("simulate_nominal: input schedule must be a column");
  InputSignal signal = [&dbar](double t) -> VectorXd { return dbar(t); };
  return simulate_nominal(model, signal, x0, dbar.grid(), opts);
}

ModelJacobians finite_difference_jacobians(const NonlinearModel& model, const VectorXd& x,
                                           const VectorXd& w, const VectorXd& d, double t) {
  const ModelDims dm = model.dims();
  ModelJacobians J{MatrixXd(dm.n_x, dm.n_x), MatrixXd(dm.n_x, dm.n_w), MatrixXd(dm.n_v, dm.n_x),
                   MatrixXd(dm.n_v, dm.n_w), MatrixXd(dm.n_e, dm.n_x), MatrixXd(dm.n_e, dm.n_w)};
  VectorXd xp = x, wp = w;
  for (Eigen::Index j = 0; j < dm.n_x; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x(j)));
    xp(j) = x(j) + h;
    const VectorXd fp = model.f(xp, w, d, t), vp = model.g_v(xp, w, d, t), ep = model.g_e(xp, w, d, t);
    xp(j) = x(j) - h;
    const VectorXd fm = model.f(xp, w, d, t), vm = model.g_v(xp, w, d, t), em = model.g_e(xp, w, d, t);
    xp(j) = x(j);
    J.A.col(j) = (fp - fm) / (2 * h);
    J.Cv.col(j) = (vp - vm) / (2 * h);
    J.Ce.col(j) = (ep - em) / (2 * h);
  }
  for (Eigen::Index j = 0; j < dm.n_w; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(w(j)));
    wp(j) = w(j) + h;
    const VectorXd fp = model.f(x, wp, d, t), vp = model.g_v(x, wp, d, t), ep = model.g_e(x, wp, d, t);
    wp(j) = w(j) - h;
    const VectorXd fm = model.f(x, wp, d, t), vm = model.g_v(x, wp, d, t), em = model.g_e(x, wp, d, t);
    wp(j) = w(j);
    J.B.col(j) = (fp - fm) / (2 * h);
    J.Dvw.col(j) = (vp - vm) / (2 * h);
    J.Dew.col(j) = (ep - em) / (2 * h);
  }
  return J;
}

ModelJacobians model_jacobians(const NonlinearModel& model, const VectorXd& x, const VectorXd& w,
                               const VectorXd& d, double t, JacobianMethod method) {
  if (method != JacobianMethod::FiniteDifference) {
    if (auto J = model.jacobians(x, w, d, t)) return std::move(*J);
    if (method == JacobianMethod::Analytic) {
      throw PreconditionError("model_jacobians: the model has no analytic Jacobians");
    }
  }
  return finite_difference_jacobians(model, x, w, d, t);
}

Linearization linearize(const NonlinearModel& model, const Trajectory& traj, const LinearizeOptions& opts) {
  const ModelDims dm = model.dims();
  const Grid& grid = traj.grid;
  require_shape(traj.xbar, dm.n_x, 1, "linearize: xbar");
  require_shape(traj.dbar, dm.n_d, 1, "linearize: dbar");
  const std::size_t n = grid.size();
  std::vector<ModelJacobians> jac(n);
  const VectorXd w0 = VectorXd::Zero(dm.n_w);

  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n; i += stride) {
      jac[i] = model_jacobians(model, traj.xbar.sample(i), w0, traj.dbar.sample(i), grid[i], opts.method);
      check_jacobians(jac[i], dm, grid[i]);
    }
  };
  const unsigned threads = model.concurrent_safe() ? std::max(1u, opts.threads) : 1u;
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (unsigned k = 0; k < threads; ++k) {
        pool.emplace_back([&, k] {
          try {
            work(k, threads);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  auto collect = [&](MatrixXd ModelJacobians::*member) {
    std::vector<MatrixXd> s;
    s.reserve(n);
    for (auto& J : jac) s.push_back(std::move(J.*member));
    return Schedule(grid, std::move(s));
  };
  Schedule A = collect(&ModelJacobians::A);
  Schedule B = collect(&ModelJacobians::B);
  Schedule Cv = collect(&ModelJacobians::Cv);
  Schedule Dvw = collect(&ModelJacobians::Dvw);
  Schedule Ce = collect(&ModelJacobians::Ce);
  Schedule Dew = collect(&ModelJacobians::Dew);
  return {LtvSystem(std::move(A), std::move(B), std::move(Cv), std::move(Dvw), std::move(Ce), std::move(Dew)),
          traj.vbar};
}

}  // namespace ltviqc
