#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ltviqc/core.hpp"
#include "ltviqc/time_grid.hpp"

namespace ltviqc {

/// Matrix-valued function of time, stored as one sample per grid point and
/// evaluated by piecewise-linear interpolation.
template <typename Scalar>
class MatrixSchedule {
 public:
  using MatrixType = Matrix<Scalar>;

  MatrixSchedule(TimeGrid<Scalar> grid, std::vector<MatrixType> samples)
      : grid_(std::move(grid)), samples_(std::move(samples)) {
    if (samples_.size() != grid_.size()) {
      throw DimensionError("MatrixSchedule: " + std::to_string(samples_.size()) +
                           " samples for a grid of " + std::to_string(grid_.size()) + " points");
    }
    rows_ = samples_.front().rows();
    cols_ = samples_.front().cols();
    for (std::size_t i = 1; i < samples_.size(); ++i) {
      if (samples_[i].rows() != rows_ || samples_[i].cols() != cols_) {
        throw DimensionError("MatrixSchedule: sample " + std::to_string(i) + " is " +
                             shape_string(samples_[i].rows(), samples_[i].cols()) +
                             ", expected " + shape_string(rows_, cols_));
      }
    }
  }

  static MatrixSchedule constant(const TimeGrid<Scalar>& grid, const MatrixType& value) {
    return MatrixSchedule(grid, std::vector<MatrixType>(grid.size(), value));
  }

  /// Samples `fn(t)` at every grid point.
  template <typename Fn>
  static MatrixSchedule sample(const TimeGrid<Scalar>& grid, Fn&& fn) {
    std::vector<MatrixType> samples;
    samples.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) samples.emplace_back(fn(grid[i]));
    return MatrixSchedule(grid, std::move(samples));
  }

  const TimeGrid<Scalar>& grid() const { return grid_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  std::size_t size() const { return samples_.size(); }
  const MatrixType& sample(std::size_t i) const { return samples_[i]; }
  const std::vector<MatrixType>& samples() const { return samples_; }

  MatrixType operator()(Scalar t) const {
    MatrixType out(rows_, cols_);
    evaluate(t, out);
    return out;
  }

  /// Allocation-free evaluation into a preallocated matrix of matching shape.
  void evaluate(Scalar t, MatrixType& out) const {
    const auto loc = grid_.locate(t);
    const MatrixType& a = samples_[loc.index];
    const MatrixType& b = samples_[loc.index + 1];
    out.noalias() = a + loc.fraction * (b - a);
  }

  /// Applies `fn` sample-wise; the result shares this schedule's grid.
  template <typename Fn>
  MatrixSchedule map(Fn&& fn) const {
    std::vector<MatrixType> out;
    out.reserve(samples_.size());
    for (std::size_t i = 0; i < samples_.size(); ++i) out.emplace_back(fn(samples_[i], grid_[i]));
    return MatrixSchedule(grid_, std::move(out));
  }

 private:
  TimeGrid<Scalar> grid_;
  std::vector<MatrixType> samples_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
};

using Schedule = MatrixSchedule<double>;

template <typename Scalar>
void require_same_grid(const MatrixSchedule<Scalar>& a, const MatrixSchedule<Scalar>& b,
                       const std::string& what) {
  if (!(a.grid() == b.grid())) throw DimensionError(what + ": schedules are on different grids");
}

template <typename Scalar>
void require_shape(const MatrixSchedule<Scalar>& s, Eigen::Index rows, Eigen::Index cols,
                   const std::string& what) {
  if (s.rows() != rows || s.cols() != cols) {
    throw DimensionError(what + " is " + shape_string(s.rows(), s.cols()) + ", expected " +
                         shape_string(rows, cols));
  }
}

}  // namespace ltviqc
