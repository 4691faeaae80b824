// Acceptance checks. Usage: ltviqc_acceptance [id ...], ids 1 2 3 4 5a 5b 6 7 8 9
// (all when none given). Prints one line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "ltviqc/ellipsoid.hpp"
#include "ltviqc/lintime.hpp"
#include "ltviqc/rde.hpp"
#include "ltviqc/robot2link.hpp"
#include "ltviqc/worstcase.hpp"
#include "oracles.hpp"

namespace {

using namespace ltviqc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  double limit_seconds;
  std::function<Outcome()> run;
};

template <typename... Args>
std::string cat(const Args&... args) {
  std::ostringstream out;
  out << std::setprecision(6);
  (out << ... << args);
  return out.str();
}

std::string vec(const VectorXd& v) {
  std::ostringstream out;
  out << std::setprecision(6) << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v(i);
  out << ")";
  return out.str();
}

MatrixXd zeros(Eigen::Index n) { return MatrixXd::Zero(n, n); }

double j_at(const AnalysisProblem& p, const VectorXd& lambda, const RdeOptions& opts = {}) {
  return eval_j(solve_rde_backward(p.system, p.qsr, lambda, zeros(p.system.state_size()), std::nullopt, opts));
}

/// Log-uniform multipliers in [lo, hi]^m that pass the feasibility test.
std::vector<VectorXd> feasible_points(std::mt19937& rng, const AnalysisProblem& p, std::size_t count, double lo,
                                      double hi) {
  std::uniform_real_distribution<double> U(std::log10(lo), std::log10(hi));
  const auto m = static_cast<Eigen::Index>(p.iqcs.size());
  std::vector<VectorXd> out;
  for (int attempt = 0; attempt < 400 && out.size() < count; ++attempt) {
    VectorXd lambda = VectorXd::NullaryExpr(m, [&] { return std::pow(10.0, U(rng)); });
    if (fixtures::feasible(p, lambda)) out.push_back(std::move(lambda));
  }
  return out;
}

Outcome scalar_oracle() {
  const double beta = 0.5;
  const AnalysisProblem p = scalar_benchmark(beta);
  std::vector<double> lambdas;
  for (double l : {0.3, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    if (lambdas.size() < 3 && fixtures::feasible(p, VectorXd::Constant(1, l))) lambdas.push_back(l);
  }
  if (lambdas.size() < 3) return {false, "fewer than three feasible multipliers"};
  double worst = 0.0;
  std::string detail;
  for (double l : lambdas) {
    const double J = j_at(p, VectorXd::Constant(1, l));
    const auto d = oracle::scalar_benchmark_data(beta, l);
    const double ref = oracle::zoh_lq_value(d.A(0), d.B(0), d.Q(0), d.S(0), d.R(0), Eigen::Vector2d(0, 1), 1.0, 1e-3);
    const double rel = std::abs(J - ref) / std::abs(ref);
    worst = std::max(worst, rel);
    detail += cat("lambda=", l, " J=", J, " ref=", ref, "; ");
  }
  return {worst <= 1e-3, cat(detail, "max rel err ", worst, " (tol 1e-3)")};
}

Outcome subgradient_inequality() {
  std::mt19937 rng(7);
  int checked = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < 5; ++s) {
    const auto sys = oracle::random_system(rng, {.n_x = 1 + s % 3, .m = 1 + s % 2},
                                           [](const auto& p, const VectorXd& l) { return fixtures::feasible(p, l); });
    const auto pts = feasible_points(rng, sys.problem, 5, 0.1, 1e3);
    if (pts.size() < 5) return {false, cat("system ", s, ": only ", pts.size(), " feasible points")};
    std::vector<CutVector> cuts;
    for (const auto& l : pts) cuts.push_back(evaluate_cut(sys.problem, l));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (i == k) continue;
        const double Ja = cuts[k].J;
        const double slack = Ja - cuts[i].J - cuts[i].g.dot(pts[k] - pts[i]);
        worst = std::max(worst, -slack / (1.0 + std::abs(Ja)));
        ++checked;
      }
    }
  }
  return {checked == 100 && worst <= 1e-6,
          cat(checked, " pairs, max normalized violation ", worst, " (tol 1e-6)")};
}

Outcome monotonicity() {
  std::mt19937 rng(11);
  RdeOptions opts;
  opts.rtol = 1e-10;
  opts.atol = 1e-12;
  double worst = std::numeric_limits<double>::infinity();
  int systems = 0;
  for (int attempt = 0; attempt < 100 && systems < 10; ++attempt) {
    const Eigen::Index n = 1 + systems % 3, m = 1 + systems % 2;
    RiccatiCoefficients c1 = fixtures::random_coefficients(rng, n, m);
    const Grid& g = c1.A.grid();
    MatrixXd W1 = fixtures::random_matrix(rng, n, n, 0.2);
    W1 = 0.5 * (W1 + W1.transpose()).eval();
    const MatrixXd dW = systems == 0 ? zeros(n) : fixtures::random_psd(rng, n, 1 + systems % n, 0.3);
    RiccatiCoefficients c2 = c1;
    c1.W = Schedule::sample(g, [&](double t) -> MatrixXd { return W1 * std::cos(t); });
    c2.W = Schedule::sample(g, [&](double t) -> MatrixXd { return W1 * std::cos(t) + dW * (1.0 + t); });
    MatrixXd Y2T = fixtures::random_matrix(rng, n, n, 0.1);
    Y2T = 0.5 * (Y2T + Y2T.transpose()).eval();
    const MatrixXd Y1T = Y2T + (systems == 1 ? zeros(n) : fixtures::random_psd(rng, n, 1, 0.3));
    const RdeOutcome o1 = integrate_riccati(c1, Y1T, opts), o2 = integrate_riccati(c2, Y2T, opts);
    if (!o1.solved() || !o2.solved()) continue;
    std::vector<double> times = o1.trajectory.times();
    times.insert(times.end(), o2.trajectory.times().begin(), o2.trajectory.times().end());
    for (double t : times) {
      const MatrixXd E = o1.Y(t) - o2.Y(t);
      worst = std::min(worst, Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (E + E.transpose())).eigenvalues()(0));
    }
    ++systems;
  }
  return {systems == 10 && worst >= -1e-7, cat(systems, " systems, min eig(Y1 - Y2) = ", worst, " (tol -1e-7)")};
}

Outcome continuity() {
  RdeOptions opts;
  opts.rtol = 1e-11;
  opts.atol = 1e-13;
  const double eps1 = 1e-2;
  const std::vector<int> ks{1, 2, 4, 8};
  std::vector<std::function<MatrixXd(double)>> solvers;

  const AnalysisProblem scalar = scalar_benchmark(0.5);
  const VectorXd lambda = VectorXd::Constant(1, 1.0);
  solvers.emplace_back([&](double eps) {
    const Schedule W = Schedule::constant(scalar.qsr.grid(), -eps * MatrixXd::Identity(2, 2));
    const auto o = solve_rde_backward(scalar.system, scalar.qsr, lambda, zeros(2), W, opts);
    if (!o.solved()) throw NumericalError("unexpected escape");
    return o.Y(0.0);
  });
  std::mt19937 rng(5);
  std::vector<RiccatiCoefficients> coeffs;
  for (int s = 0; s < 4; ++s) coeffs.push_back(fixtures::random_coefficients(rng, 1 + s % 3, 1 + s % 2));
  for (const auto& c : coeffs) {
    solvers.emplace_back([&c, &opts](double eps) {
      RiccatiCoefficients ce = c;
      const Eigen::Index n = c.A.rows();
      ce.W = Schedule::constant(c.A.grid(), -eps * MatrixXd::Identity(n, n));
      const auto o = integrate_riccati(ce, zeros(n), opts);
      if (!o.solved()) throw NumericalError("unexpected escape");
      return o.Y(0.0);
    });
  }

  bool ok = true;
  double worst_ratio = 0.0;
  for (const auto& solve : solvers) {
    const MatrixXd Y0 = solve(0.0);
    std::vector<double> err;
    for (int k : ks) err.push_back((solve(eps1 / k) - Y0).norm());
    for (std::size_t i = 1; i < err.size(); ++i) ok = ok && err[i] < err[i - 1];
    worst_ratio = std::max(worst_ratio, err[3] / err[2]);
  }
  ok = ok && worst_ratio <= 0.6;
  return {ok, cat(solvers.size(), " systems, errors strictly decreasing: ", ok ? "yes" : "no",
                  ", max err(k=8)/err(k=4) = ", worst_ratio, " (limit 0.6)")};
}

Outcome volume_ratio() {
  std::mt19937 rng(3);
  double worst = 0.0;
  std::string detail;
  for (Eigen::Index m = 2; m <= 5; ++m) {
    Ellipsoid<double> e{fixtures::random_matrix(rng, m, 1, 1.0),
                        fixtures::random_psd(rng, m, m, 1.0) + 0.1 * MatrixXd::Identity(m, m)};
    const VectorXd g = fixtures::random_matrix(rng, m, 1, 1.0);
    const double measured = std::exp(step(e, g).log_volume() - e.log_volume());
    const double claimed = std::exp(-1.0 / (2.0 * static_cast<double>(m)));
    worst = std::max(worst, std::abs(measured - claimed));
    detail += cat("m=", m, " ratio=", measured, " exp(-1/2m)=", claimed, "; ");
  }
  return {worst <= 1e-10, cat(detail, "max |diff| ", worst, " (tol 1e-10)")};
}

Outcome quadratic_minimization() {
  Eigen::Matrix2d H;
  H << 2.0, 0.5, 0.5, 1.0;
  const Eigen::Vector2d c(3.0, 1.5);
  const double J_opt = 1.0;
  CutOracle f = [&](const VectorXd& l) {
    if ((l.array() < 0.0).any()) return nonneg_cut(l);
    const VectorXd d = l - c;
    return CutVector{2.0 * H * d, CutKind::Subgradient, J_opt + d.dot(H * d), std::nullopt};
  };
  const MinimizeResult r = minimize(f, 2, {.radius = 20.0, .gap_tol = 1e-4, .relative_gap = false});
  const bool ok = r.converged() && r.gap <= 1e-4 && r.J - J_opt <= r.gap && r.J >= J_opt;
  return {ok, cat(to_string(r.status), " after ", r.iterations, " iterations, gap ", r.gap, ", J - J* = ", r.J - J_opt,
                  ", lambda ", vec(r.lambda))};
}

Outcome escape_cut_validity() {
  const double beta = 0.5;
  const AnalysisProblem p = scalar_benchmark(beta);
  auto ok_at = [&](double l) { return fixtures::feasible(p, VectorXd::Constant(1, l)); };
  double lo = 1e-3, hi = 1.0;
  if (ok_at(lo) || !ok_at(hi)) return {false, "feasibility boundary not bracketed"};
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok_at(mid) ? hi : lo) = mid;
  }
  const double boundary = hi;

  // Feasibility of the comparison points is checked with the fixed-step oracle.
  auto oracle_feasible = [&](double a) {
    const long steps = 20000;
    return static_cast<long>(oracle::rk4_riccati(oracle::scalar_benchmark_data(beta, a), zeros(2), 1.0, steps, 1e9)
                                 .size()) == steps + 1;
  };
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> U(-3.0, 1.0);
  int checked = 0, violations = 0;
  for (double delta : {1e-4, 5e-4, 1e-3, 5e-3, 1e-2}) {
    const VectorXd lambda = VectorXd::Constant(1, boundary - delta);
    const CutVector cut = evaluate_cut(p, lambda);
    if (cut.kind != CutKind::EscapeCut) return {false, cat("lambda=", lambda(0), " gave a ", to_string(cut.kind))};
    int found = 0;
    for (int attempt = 0; attempt < 100 && found < 10; ++attempt) {
      const double a = boundary + std::pow(10.0, U(rng));
      if (!oracle_feasible(a)) continue;
      ++found;
      ++checked;
      if (!(cut.g(0) * (a - lambda(0)) < 0.0)) ++violations;
    }
  }
  return {checked == 50 && violations == 0,
          cat("boundary lambda=", boundary, ", ", checked, " (lambda, alpha) pairs, ", violations, " violations")};
}

Outcome robot_sweep() {
  std::vector<double> full, ch1, ch2;
  std::string detail;
  bool finite = true;
  for (int i = 1; i <= 8; ++i) {
    const double beta = 0.05 * i;
    auto sqrt_j = [&](const robot::UncertaintyStructure& s) {
      const MinimizeResult r = optimize_multipliers(robot::build_analysis_problem(s));
      finite = finite && r.converged() && std::isfinite(r.J);
      return std::sqrt(r.J);
    };
    full.push_back(sqrt_j(robot::FullBlock{beta}));
    ch1.push_back(sqrt_j(robot::Channel1{beta}));
    ch2.push_back(sqrt_j(robot::Channel2{beta}));
    detail += cat("beta=", beta, " full=", full.back(), " ch1=", ch1.back(), " ch2=", ch2.back(), "; ");
  }
  bool monotone = true, close = true, smaller = true;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (i > 0) monotone = monotone && full[i] >= full[i - 1];
    close = close && std::abs(ch1[i] - full[i]) <= 0.25 * full[i];
    smaller = smaller && ch2[i] <= 0.5 * full[i];
  }
  return {finite && monotone && close && smaller,
          cat(detail, "finite=", finite, " nondecreasing=", monotone, " ch1 within 25%=", close,
              " ch2 <= half=", smaller)};
}

Outcome robot_diagonal() {
  AnalysisOptions opts;
  opts.ellipsoid = {.radius = 20.0, .gap_tol = 0.01, .relative_gap = true};
  const MinimizeResult r = optimize_multipliers(robot::build_analysis_problem(robot::Diagonal{0.05, 0.8}), opts);
  const bool ok = r.converged() && r.iterations <= 120 && std::isfinite(r.J) && r.lambda.size() == 2 &&
                  (r.lambda.array() > 0.0).all();
  return {ok, cat(to_string(r.status), " after ", r.iterations, " iterations, lambda ", vec(r.lambda), ", sqrt J ",
                  std::sqrt(r.J), ", gap ", r.gap)};
}

Outcome trivial_forcing() {
  std::vector<AnalysisProblem> problems;
  {
    const Grid g = Grid::uniform(1.0, 101);
    auto k = [&g](double v) { return Schedule::constant(g, MatrixXd::Constant(1, 1, v)); };
    const LtvSystem sys(k(-1), k(1), k(1), k(0), k(1), k(0));
    problems.push_back(make_problem(augment(sys, k(0)), {Iqc::norm_bounded(0.5, 1)}));
  }
  std::mt19937 rng(17);
  for (int s = 0; s < 5; ++s) {
    problems.push_back(oracle::random_system(rng, {.n_x = 1 + s % 3, .m = 1 + s % 2, .zero_forcing = true},
                                             [](const auto& p, const VectorXd& l) {
                                               return fixtures::feasible(p, l);
                                             }).problem);
  }
  double worst = 0.0;
  int checked = 0;
  for (const auto& p : problems) {
    for (const auto& l : feasible_points(rng, p, 4, 0.1, 1e3)) {
      worst = std::max(worst, j_at(p, l));
      ++checked;
    }
  }
  return {checked >= 20 && worst <= 1e-8, cat(checked, " (system, lambda) pairs, max J ", worst, " (tol 1e-8)")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"1", 10, scalar_oracle},        {"2", 60, subgradient_inequality},  {"3", 30, monotonicity},
      {"4", 30, continuity},           {"5a", 5, volume_ratio},            {"5b", 5, quadratic_minimization},
      {"6", 60, escape_cut_validity},  {"7", 900, robot_sweep},            {"8", 600, robot_diagonal},
      {"9", 5, trivial_forcing},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0, ran = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << " " << o.detail << " [" << std::fixed
              << std::setprecision(2) << secs << " s, limit " << std::setprecision(0) << c.limit_seconds << " s"
              << (in_time ? "" : ", over time limit") << "]" << std::defaultfloat << std::endl;
  }
  if (ran == 0) {
    std::cerr << "no matching criterion\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
