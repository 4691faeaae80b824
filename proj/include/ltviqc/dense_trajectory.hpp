#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltviqc/core.hpp"

namespace ltviqc {

/// Accepted integrator steps (time, state, state derivative) with cubic
/// Hermite interpolation between them. Times are kept in ascending order.
template <typename Scalar>
class DenseTrajectory {
 public:
  using VectorType = Vector<Scalar>;

  DenseTrajectory() = default;

  void push_back(Scalar t, VectorType y, VectorType dy) {
    times_.push_back(t);
    values_.push_back(std::move(y));
    slopes_.push_back(std::move(dy));
  }

  /// Restores ascending time order after a backward-in-time integration.
  void make_ascending() {
    if (times_.size() > 1 && times_.front() > times_.back()) {
      std::reverse(times_.begin(), times_.end());
      std::reverse(values_.begin(), values_.end());
      std::reverse(slopes_.begin(), slopes_.end());
    }
  }

  /// Drops samples with time below `t` (keeps the ascending suffix).
  void drop_before(Scalar t) {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    const auto n = it - times_.begin();
    times_.erase(times_.begin(), it);
    values_.erase(values_.begin(), values_.begin() + n);
    slopes_.erase(slopes_.begin(), slopes_.begin() + n);
  }

  bool empty() const { return times_.empty(); }
  std::size_t size() const { return times_.size(); }
  Scalar front_time() const { return times_.front(); }
  Scalar back_time() const { return times_.back(); }
  const std::vector<Scalar>& times() const { return times_; }
  const std::vector<VectorType>& values() const { return values_; }
  const std::vector<VectorType>& slopes() const { return slopes_; }
  Eigen::Index dimension() const { return values_.empty() ? 0 : values_.front().size(); }

  VectorType value(Scalar t) const {
    VectorType out(dimension());
    evaluate(t, out, nullptr);
    return out;
  }

  VectorType derivative(Scalar t) const {
    VectorType y(dimension()), dy(dimension());
    evaluate(t, y, &dy);
    return dy;
  }

  /// Hermite interpolation; `dy` is filled when non-null.
  void evaluate(Scalar t, VectorType& y, VectorType* dy) const {
    if (times_.empty()) throw std::logic_error("DenseTrajectory: empty");
    if (times_.size() == 1) {
      y = values_.front();
      if (dy) *dy = slopes_.front();
      return;
    }
    const Scalar span = times_.back() - times_.front();
    const Scalar slack = Scalar(1e-12) * std::max(span, Scalar(1));
    if (t < times_.front() - slack || t > times_.back() + slack) {
      throw std::out_of_range("DenseTrajectory: t = " + std::to_string(static_cast<double>(t)) +
                              " outside [" + std::to_string(static_cast<double>(times_.front())) +
                              ", " + std::to_string(static_cast<double>(times_.back())) + "]");
    }
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - times_.begin());
    if (hi >= times_.size()) hi = times_.size() - 1;
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const Scalar h = times_[hi] - times_[lo];
    const Scalar s = std::clamp((t - times_[lo]) / h, Scalar(0), Scalar(1));
    const Scalar s2 = s * s;
    const Scalar s3 = s2 * s;
    const Scalar h00 = 2 * s3 - 3 * s2 + 1;
    const Scalar h10 = s3 - 2 * s2 + s;
    const Scalar h01 = -2 * s3 + 3 * s2;
    const Scalar h11 = s3 - s2;
    y.noalias() = h00 * values_[lo] + (h10 * h) * slopes_[lo] + h01 * values_[hi] +
                  (h11 * h) * slopes_[hi];
    if (dy) {
      const Scalar d00 = (6 * s2 - 6 * s) / h;
      const Scalar d10 = 3 * s2 - 4 * s + 1;
      const Scalar d01 = (-6 * s2 + 6 * s) / h;
      const Scalar d11 = 3 * s2 - 2 * s;
      dy->noalias() = d00 * values_[lo] + d10 * slopes_[lo] + d01 * values_[hi] + d11 * slopes_[hi];
    }
  }

 private:
  std::vector<Scalar> times_;
  std::vector<VectorType> values_;
  std::vector<VectorType> slopes_;
};

}  // namespace ltviqc
