#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ltviqc {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Thrown when operands have incompatible shapes or grids.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a documented precondition of an operation does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure cannot produce a meaningful result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Derived>
auto symmetrized(const Eigen::MatrixBase<Derived>& x) {
  return (0.5 * (x + x.transpose())).eval();
}

template <typename Derived>
void symmetrize(Eigen::MatrixBase<Derived>& x) {
  x = (0.5 * (x + x.transpose())).eval();
}

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace ltviqc
