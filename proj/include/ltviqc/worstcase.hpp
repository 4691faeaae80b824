#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "ltviqc/core.hpp"
#include "ltviqc/lintime.hpp"
#include "ltviqc/rde.hpp"

namespace ltviqc {

enum class CutKind { Subgradient, NonnegCut, EscapeCut, RIndefCut };

std::string_view to_string(CutKind kind);

/// Sampled pair (xa, w) driving the LQ cost, plus the integrals of every
/// quadratic block along it.
struct Witness {
  std::vector<double> times;
  std::vector<VectorXd> state;        // xa(t)
  std::vector<VectorXd> disturbance;  // w(t)
  /// Integral of [xa; w]' [Qk Sk; Sk' Rk] [xa; w] over the witness interval,
  /// accumulated by the integrator alongside the state. Entry 0 is the
  /// performance block, entry i >= 1 the i-th IQC block.
  VectorXd block_integrals;

  /// Cost of the pair under Q(t, lambda), S(t, lambda), R(t, lambda).
  double lq_cost(const VectorXd& lambda) const;
  /// Sum over samples of ||xa||^2 + ||w||^2 weighted by the trapezoid rule.
  double energy() const;
};

struct CutVector {
  VectorXd g;
  CutKind kind = CutKind::Subgradient;
  double J = 0.0;  // +inf for every kind except Subgradient
  std::optional<Witness> witness;
};

/// Thrown when the Riccati solution escapes before any usable probe point
/// exists (escape within the first accepted step from T).
class EscapeAtHorizonError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Forward sweep of the closed-loop optimal disturbance from xa(0) = [0; 1].
Witness optimal_disturbance(const AugmentedLtv& ga, const QsrData& qsr, const VectorXd& lambda,
                            const RdeOutcome& solved, const RdeOptions& opts = {});

/// Subgradient of J at lambda: g_i = integral of the i-th IQC block along the witness.
CutVector subgradient(const QsrData& qsr, const Witness& witness, double J);

/// Separating hyperplane at an infeasible lambda whose Riccati solution escaped.
CutVector escape_cut(const AugmentedLtv& ga, const QsrData& qsr, const VectorXd& lambda,
                     const RdeOutcome& escaped, const RdeOptions& opts = {});

/// Separating hyperplane from a direction in which R(t*, lambda) is not negative.
CutVector r_indef_cut(const QsrData& qsr, const VectorXd& lambda, const RViolation& violation);

/// -e_i for the most negative entry of lambda.
CutVector nonneg_cut(const VectorXd& lambda);

/// Cost value and cut at lambda: nonnegativity, R-definiteness scan,
/// Riccati solve with subgradient, or escape cut, in that order.
CutVector evaluate_cut(const AnalysisProblem& problem, const VectorXd& lambda,
                       const RdeOptions& opts = {});

/// Trapezoid-rule integral of block `k` (0 = performance, i >= 1 = IQC i)
/// over the witness samples. Independent of the integrator-accumulated values.
double trapezoid_block_integral(const QsrData& qsr, std::size_t k, const Witness& witness);

}  // namespace ltviqc
