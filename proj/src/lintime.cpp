#include "ltviqc/lintime.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <utility>

namespace ltviqc {

namespace {

void require_grid(const Schedule& ref, const Schedule& s, const char* name) {
  require_same_grid(ref, s, std::string("schedule ") + name);
}

bool all_zero(const Schedule& s, auto&& block) {
  for (const auto& m : s.samples()) {
    if ((block(m).array() != 0.0).any()) return false;
  }
  return true;
}

}  // namespace

LtvSystem::LtvSystem(Schedule A, Schedule B, Schedule Cv, Schedule Dvw, Schedule Ce, Schedule Dew)
    : A_(std::move(A)),
      B_(std::move(B)),
      Cv_(std::move(Cv)),
      Dvw_(std::move(Dvw)),
      Ce_(std::move(Ce)),
      Dew_(std::move(Dew)) {
  dims_ = {A_.rows(), B_.cols(), Cv_.rows(), Ce_.rows()};
  const auto [nx, nw, nv, ne] = dims_;
  require_shape(A_, nx, nx, "A");
  require_shape(B_, nx, nw, "B");
  require_shape(Cv_, nv, nx, "Cv");
  require_shape(Dvw_, nv, nw, "Dvw");
  require_shape(Ce_, ne, nx, "Ce");
  require_shape(Dew_, ne, nw, "Dew");
  require_grid(A_, B_, "B");
  require_grid(A_, Cv_, "Cv");
  require_grid(A_, Dvw_, "Dvw");
  require_grid(A_, Ce_, "Ce");
  require_grid(A_, Dew_, "Dew");
}

AugmentedLtv::AugmentedLtv(Schedule Aa, Schedule Ba, Schedule Cva, Schedule Cea, Schedule Dvw,
                           Schedule Dew)
    : Aa_(std::move(Aa)),
      Ba_(std::move(Ba)),
      Cva_(std::move(Cva)),
      Cea_(std::move(Cea)),
      Dvw_(std::move(Dvw)),
      Dew_(std::move(Dew)) {
  const Eigen::Index na = Aa_.rows();
  if (na < 1) throw DimensionError("AugmentedLtv: empty state");
  dims_ = {na - 1, Ba_.cols(), Cva_.rows(), Cea_.rows()};
  const auto [nx, nw, nv, ne] = dims_;
  require_shape(Aa_, na, na, "Aa");
  require_shape(Ba_, na, nw, "Ba");
  require_shape(Cva_, nv, na, "Cva");
  require_shape(Cea_, ne, na, "Cea");
  require_shape(Dvw_, nv, nw, "Dvw");
  require_shape(Dew_, ne, nw, "Dew");
  require_grid(Aa_, Ba_, "Ba");
  require_grid(Aa_, Cva_, "Cva");
  require_grid(Aa_, Cea_, "Cea");
  require_grid(Aa_, Dvw_, "Dvw");
  require_grid(Aa_, Dew_, "Dew");

  if (!all_zero(Aa_, [&](const MatrixXd& m) { return m.row(nx); }) ||
      !all_zero(Aa_, [&](const MatrixXd& m) { return m.col(nx); })) {
    throw PreconditionError("AugmentedLtv: last row and column of Aa must be zero");
  }
  if (!all_zero(Ba_, [&](const MatrixXd& m) { return m.row(nx); })) {
    throw PreconditionError("AugmentedLtv: last row of Ba must be zero");
  }
  if (!all_zero(Cea_, [&](const MatrixXd& m) { return m.col(nx); })) {
    throw PreconditionError("AugmentedLtv: last column of Cea must be zero");
  }
}

VectorXd AugmentedLtv::initial_state() const {
  VectorXd x0 = VectorXd::Zero(state_size());
  x0(dims_.n_x) = 1.0;
  return x0;
}

Schedule AugmentedLtv::nominal_forcing() const {
  const Eigen::Index nx = dims_.n_x;
  return Cva_.map([nx](const MatrixXd& m, double) -> MatrixXd { return m.col(nx); });
}

Iqc::Iqc(MatrixXd M, Eigen::Index n_v, Eigen::Index n_w, std::string label)
    : M_(std::move(M)), n_v_(n_v), n_w_(n_w), label_(std::move(label)) {
  if (n_v_ < 1 || n_w_ < 1) throw DimensionError("Iqc: channel dimensions must be positive");
  if (M_.rows() != n_v_ + n_w_ || M_.cols() != n_v_ + n_w_) {
    throw DimensionError("Iqc: M is " + shape_string(M_.rows(), M_.cols()) + ", expected " +
                         shape_string(n_v_ + n_w_, n_v_ + n_w_));
  }
  if (!M_.allFinite()) throw PreconditionError("Iqc: M has non-finite entries");
  symmetrize(M_);
}

Iqc Iqc::norm_bounded(double beta, Eigen::Index n, std::string label) {
  if (!(beta > 0.0)) throw PreconditionError("Iqc::norm_bounded: beta must be positive");
  MatrixXd M = MatrixXd::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n).diagonal().setConstant(beta * beta);
  M.bottomRightCorner(n, n).diagonal().setConstant(-1.0);
  return Iqc(std::move(M), n, n, std::move(label));
}

Iqc Iqc::channel_norm_bounded(double beta, Eigen::Index n, Eigen::Index channel,
                              std::string label) {
  if (!(beta > 0.0)) throw PreconditionError("Iqc::channel_norm_bounded: beta must be positive");
  if (channel < 0 || channel >= n) throw DimensionError("Iqc::channel_norm_bounded: bad channel");
  MatrixXd M = MatrixXd::Zero(2 * n, 2 * n);
  M(channel, channel) = beta * beta;
  M(n + channel, n + channel) = -1.0;
  return Iqc(std::move(M), n, n, std::move(label));
}

Iqc Iqc::sector(double alpha, double beta, std::string label) {
  if (!(alpha <= beta)) throw PreconditionError("Iqc::sector: need alpha <= beta");
  MatrixXd M(2, 2);
  M << -2.0 * alpha * beta, alpha + beta, alpha + beta, -2.0;
  return Iqc(std::move(M), 1, 1, std::move(label));
}

AugmentedLtv augment(const LtvSystem& sys, const Schedule& vbar) {
  const auto [nx, nw, nv, ne] = sys.dims();
  require_same_grid(sys.A(), vbar, "augment: vbar");
  require_shape(vbar, nv, 1, "augment: vbar");
  const std::size_t N = sys.grid().size();
  std::vector<MatrixXd> Aa(N), Ba(N), Cva(N), Cea(N);
  for (std::size_t k = 0; k < N; ++k) {
    Aa[k] = MatrixXd::Zero(nx + 1, nx + 1);
    Aa[k].topLeftCorner(nx, nx) = sys.A().sample(k);
    Ba[k] = MatrixXd::Zero(nx + 1, nw);
    Ba[k].topRows(nx) = sys.B().sample(k);
    Cva[k].resize(nv, nx + 1);
    Cva[k] << sys.Cv().sample(k), vbar.sample(k);
    Cea[k] = MatrixXd::Zero(ne, nx + 1);
    Cea[k].leftCols(nx) = sys.Ce().sample(k);
  }
  const Grid& g = sys.grid();
  return AugmentedLtv(Schedule(g, std::move(Aa)), Schedule(g, std::move(Ba)),
                      Schedule(g, std::move(Cva)), Schedule(g, std::move(Cea)), sys.Dvw(),
                      sys.Dew());
}

namespace {

struct Partitioned {
  std::vector<MatrixXd> Q, S, R;
};

void push_partition(Partitioned& p, const MatrixXd& G, Eigen::Index n, Eigen::Index nw) {
  p.Q.push_back(symmetrized(G.topLeftCorner(n, n)));
  p.S.push_back(0.5 * (G.topRightCorner(n, nw) + G.bottomLeftCorner(nw, n).transpose()));
  p.R.push_back(symmetrized(G.bottomRightCorner(nw, nw)));
}

QsrBlock to_block(const Grid& g, Partitioned&& p) {
  return {Schedule(g, std::move(p.Q)), Schedule(g, std::move(p.S)), Schedule(g, std::move(p.R))};
}

}  // namespace

QsrData assemble_qsr(const AugmentedLtv& ga, std::span<const Iqc> iqcs) {
  const auto& d = ga.dims();
  const Eigen::Index n = ga.state_size();
  const Eigen::Index nw = d.n_w;
  for (const Iqc& iqc : iqcs) {
    if (iqc.n_v() != d.n_v || iqc.n_w() != d.n_w) {
      throw DimensionError("assemble_qsr: IQC '" + iqc.label() + "' has channels (" +
                           std::to_string(iqc.n_v()) + ", " + std::to_string(iqc.n_w()) +
                           "), system has (" + std::to_string(d.n_v) + ", " +
                           std::to_string(d.n_w) + ")");
    }
  }
  const Grid& g = ga.grid();
  const std::size_t N = g.size();
  Partitioned perf;
  std::vector<Partitioned> blocks(iqcs.size());
  MatrixXd Fe(d.n_e, n + nw);
  MatrixXd Fv = MatrixXd::Zero(d.n_v + nw, n + nw);
  Fv.bottomRightCorner(nw, nw).setIdentity();
  for (std::size_t k = 0; k < N; ++k) {
    Fe << ga.Cea().sample(k), ga.Dew().sample(k);
    push_partition(perf, Fe.transpose() * Fe, n, nw);
    Fv.topLeftCorner(d.n_v, n) = ga.Cva().sample(k);
    Fv.topRightCorner(d.n_v, nw) = ga.Dvw().sample(k);
    for (std::size_t i = 0; i < iqcs.size(); ++i) {
      push_partition(blocks[i], Fv.transpose() * iqcs[i].M() * Fv, n, nw);
    }
  }
  QsrData out{to_block(g, std::move(perf)), {}};
  out.iqc.reserve(blocks.size());
  for (auto& b : blocks) out.iqc.push_back(to_block(g, std::move(b)));
  return out;
}

AnalysisProblem make_problem(AugmentedLtv ga, std::vector<Iqc> iqcs) {
  QsrData qsr = assemble_qsr(ga, iqcs);
  return {std::move(ga), std::move(iqcs), std::move(qsr)};
}

namespace {

void require_multipliers(const QsrData& qsr, const VectorXd& lambda, const char* who) {
  if (static_cast<std::size_t>(lambda.size()) != qsr.multiplier_count()) {
    throw DimensionError(std::string(who) + ": lambda has " + std::to_string(lambda.size()) +
                         " entries, expected " + std::to_string(qsr.multiplier_count()));
  }
}

}  // namespace

QsrAt combine(const QsrData& qsr, const VectorXd& lambda, double t) {
  require_multipliers(qsr, lambda, "combine");
  QsrAt out{qsr.performance.Q(t), qsr.performance.S(t), qsr.performance.R(t)};
  for (std::size_t i = 0; i < qsr.iqc.size(); ++i) {
    const double li = lambda(static_cast<Eigen::Index>(i));
    if (li == 0.0) continue;
    out.Q += li * qsr.iqc[i].Q(t);
    out.S += li * qsr.iqc[i].S(t);
    out.R += li * qsr.iqc[i].R(t);
  }
  return out;
}

QsrBlock combined_block(const QsrData& qsr, const VectorXd& lambda) {
  require_multipliers(qsr, lambda, "combined_block");
  const std::size_t N = qsr.grid().size();
  std::vector<MatrixXd> Q(N), S(N), R(N);
  for (std::size_t k = 0; k < N; ++k) {
    Q[k] = qsr.performance.Q.sample(k);
    S[k] = qsr.performance.S.sample(k);
    R[k] = qsr.performance.R.sample(k);
    for (std::size_t i = 0; i < qsr.iqc.size(); ++i) {
      const double li = lambda(static_cast<Eigen::Index>(i));
      Q[k] += li * qsr.iqc[i].Q.sample(k);
      S[k] += li * qsr.iqc[i].S.sample(k);
      R[k] += li * qsr.iqc[i].R.sample(k);
    }
  }
  const Grid& g = qsr.grid();
  return {Schedule(g, std::move(Q)), Schedule(g, std::move(S)), Schedule(g, std::move(R))};
}

std::optional<RViolation> check_r_negdef(const QsrData& qsr, const VectorXd& lambda,
                                         double tolerance) {
  require_multipliers(qsr, lambda, "check_r_negdef");
  const Grid& g = qsr.grid();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig;
  MatrixXd R;
  for (std::size_t k = 0; k < g.size(); ++k) {
    R = qsr.performance.R.sample(k);
    for (std::size_t i = 0; i < qsr.iqc.size(); ++i) {
      R += lambda(static_cast<Eigen::Index>(i)) * qsr.iqc[i].R.sample(k);
    }
    eig.compute(R);
    const Eigen::Index top = R.rows() - 1;
    const double max_eig = eig.eigenvalues()(top);
    if (!(max_eig < -tolerance)) {
      return RViolation{g[k], k, eig.eigenvectors().col(top), max_eig};
    }
  }
  return std::nullopt;
}

ChannelSelection select_channels(const LtvSystem& sys, const Schedule& vbar,
                                 std::span<const Eigen::Index> channels) {
  const auto& d = sys.dims();
  if (channels.empty()) throw DimensionError("select_channels: no channels selected");
  for (Eigen::Index c : channels) {
    if (c < 0 || c >= d.n_v || c >= d.n_w) {
      throw DimensionError("select_channels: channel " + std::to_string(c) + " out of range");
    }
  }
  const std::vector<Eigen::Index> idx(channels.begin(), channels.end());
  auto rows = [&](const Schedule& s) {
    return s.map([&](const MatrixXd& m, double) -> MatrixXd { return m(idx, Eigen::all); });
  };
  auto cols = [&](const Schedule& s) {
    return s.map([&](const MatrixXd& m, double) -> MatrixXd { return m(Eigen::all, idx); });
  };
  auto both = [&](const Schedule& s) {
    return s.map([&](const MatrixXd& m, double) -> MatrixXd { return m(idx, idx); });
  };
  return {LtvSystem(sys.A(), cols(sys.B()), rows(sys.Cv()), both(sys.Dvw()), sys.Ce(),
                    cols(sys.Dew())),
          rows(vbar)};
}

AnalysisProblem scalar_benchmark(double beta, std::size_t grid_points) {
  const Grid g = Grid::uniform(1.0, grid_points);
  auto c = [&g](double v) { return Schedule::constant(g, MatrixXd::Constant(1, 1, v)); };
  LtvSystem sys(c(-1.0), c(1.0), c(1.0), c(0.0), c(1.0), c(0.0));
  return make_problem(augment(sys, c(1.0)), {Iqc::norm_bounded(beta, 1, "norm")});
}

}  // namespace ltviqc
