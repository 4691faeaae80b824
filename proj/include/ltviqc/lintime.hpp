#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltviqc/core.hpp"
#include "ltviqc/matrix_schedule.hpp"
#include "ltviqc/time_grid.hpp"

namespace ltviqc {

using Grid = TimeGrid<double>;

/// Absolute eigenvalue margin for the R(t, lambda) < 0 test.
inline constexpr double kRNegDefTolerance = 1e-9;

struct LtvDims {
  Eigen::Index n_x = 0;
  Eigen::Index n_w = 0;
  Eigen::Index n_v = 0;
  Eigen::Index n_e = 0;
};

/// Uncertain LTV system in perturbation coordinates:
///   dx = A x + B w,  v = Cv x + Dvw w,  e = Ce x + Dew w.
class LtvSystem {
 public:
  LtvSystem(Schedule A, Schedule B, Schedule Cv, Schedule Dvw, Schedule Ce, Schedule Dew);

  const Schedule& A() const { return A_; }
  const Schedule& B() const { return B_; }
  const Schedule& Cv() const { return Cv_; }
  const Schedule& Dvw() const { return Dvw_; }
  const Schedule& Ce() const { return Ce_; }
  const Schedule& Dew() const { return Dew_; }
  const Grid& grid() const { return A_.grid(); }
  const LtvDims& dims() const { return dims_; }

 private:
  Schedule A_, B_, Cv_, Dvw_, Ce_, Dew_;
  LtvDims dims_;
};

/// The LTV system extended by one constant state that carries the nominal
/// uncertainty input vbar(t) into the v channel. Its initial state is
/// [0; ...; 0; 1] and the last state stays equal to 1.
class AugmentedLtv {
 public:
  /// Validates the structural zero pattern exactly (no tolerance).
  AugmentedLtv(Schedule Aa, Schedule Ba, Schedule Cva, Schedule Cea, Schedule Dvw, Schedule Dew);

  const Schedule& Aa() const { return Aa_; }
  const Schedule& Ba() const { return Ba_; }
  const Schedule& Cva() const { return Cva_; }
  const Schedule& Cea() const { return Cea_; }
  const Schedule& Dvw() const { return Dvw_; }
  const Schedule& Dew() const { return Dew_; }
  const Grid& grid() const { return Aa_.grid(); }
  /// Dimensions of the underlying (non-augmented) system.
  const LtvDims& dims() const { return dims_; }
  Eigen::Index state_size() const { return dims_.n_x + 1; }
  VectorXd initial_state() const;
  /// The last column of Cva, i.e. vbar(t).
  Schedule nominal_forcing() const;

 private:
  Schedule Aa_, Ba_, Cva_, Cea_, Dvw_, Dew_;
  LtvDims dims_;
};

/// Time-domain IQC multiplier: integral of [v; w]' M [v; w] >= 0.
class Iqc {
 public:
  Iqc(MatrixXd M, Eigen::Index n_v, Eigen::Index n_w, std::string label = {});

  /// ||Delta|| <= beta on n channels: M = [beta^2 I, 0; 0, -I].
  static Iqc norm_bounded(double beta, Eigen::Index n, std::string label = {});
  /// Same bound restricted to one channel of an n-channel block:
  /// M = [beta^2 E_k, 0; 0, -E_k] with E_k = e_k e_k'.
  static Iqc channel_norm_bounded(double beta, Eigen::Index n, Eigen::Index channel,
                                  std::string label = {});
  /// Scalar memoryless nonlinearity in the sector [alpha, beta].
  static Iqc sector(double alpha, double beta, std::string label = {});

  const MatrixXd& M() const { return M_; }
  Eigen::Index n_v() const { return n_v_; }
  Eigen::Index n_w() const { return n_w_; }
  const std::string& label() const { return label_; }

 private:
  MatrixXd M_;
  Eigen::Index n_v_;
  Eigen::Index n_w_;
  std::string label_;
};

/// One quadratic block [Q S; S' R] sampled on the analysis grid.
struct QsrBlock {
  Schedule Q;
  Schedule S;
  Schedule R;
};

/// Cost data of the LQ problem: a lambda-independent performance block and
/// one block per IQC.
struct QsrData {
  QsrBlock performance;
  std::vector<QsrBlock> iqc;

  std::size_t multiplier_count() const { return iqc.size(); }
  Eigen::Index state_size() const { return performance.Q.rows(); }
  Eigen::Index disturbance_size() const { return performance.R.rows(); }
  const Grid& grid() const { return performance.Q.grid(); }
};

/// Q(t, lambda), S(t, lambda), R(t, lambda) at one time.
struct QsrAt {
  MatrixXd Q;
  MatrixXd S;
  MatrixXd R;
};

struct RViolation {
  double time = 0.0;
  std::size_t grid_index = 0;
  VectorXd direction;  // unit eigenvector of the largest eigenvalue of R
  double max_eigenvalue = 0.0;
};

/// Augmented system, its IQCs, and the assembled cost data.
struct AnalysisProblem {
  AugmentedLtv system;
  std::vector<Iqc> iqcs;
  QsrData qsr;
};

AugmentedLtv augment(const LtvSystem& sys, const Schedule& vbar);

QsrData assemble_qsr(const AugmentedLtv& ga, std::span<const Iqc> iqcs);

AnalysisProblem make_problem(AugmentedLtv ga, std::vector<Iqc> iqcs);

QsrAt combine(const QsrData& qsr, const VectorXd& lambda, double t);

/// Q, S, R for a fixed lambda as schedules on the analysis grid.
QsrBlock combined_block(const QsrData& qsr, const VectorXd& lambda);

/// First grid point at which R(t, lambda) has an eigenvalue >= -tolerance.
/// Between grid points R is a convex combination of its samples, so the
/// grid scan certifies the whole horizon.
std::optional<RViolation> check_r_negdef(const QsrData& qsr, const VectorXd& lambda,
                                         double tolerance = kRNegDefTolerance);

/// Keeps only the listed uncertainty channels (same indices for v and w).
struct ChannelSelection {
  LtvSystem system;
  Schedule vbar;
};
ChannelSelection select_channels(const LtvSystem& sys, const Schedule& vbar,
                                 std::span<const Eigen::Index> channels);

/// dx = -x + w, v = x, e = x, vbar = 1 on [0, 1] with one norm-bounded IQC.
AnalysisProblem scalar_benchmark(double beta = 0.5, std::size_t grid_points = 101);

}  // namespace ltviqc
