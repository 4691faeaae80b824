#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltviqc/core.hpp"

namespace ltviqc {

/// Strictly increasing sample times spanning [0, T].
template <typename Scalar>
class TimeGrid {
 public:
  /// Position of a query time relative to the grid: t lies in
  /// [points[index], points[index + 1]] at relative offset `fraction`.
  struct Location {
    std::size_t index;
    Scalar fraction;
  };

  explicit TimeGrid(std::vector<Scalar> points) : points_(std::move(points)) {
    if (points_.size() < 2) {
      throw std::invalid_argument("TimeGrid: need at least 2 points");
    }
    if (points_.front() != Scalar(0)) {
      throw std::invalid_argument("TimeGrid: first point must be 0");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!std::isfinite(static_cast<double>(points_[i]))) {
        throw std::invalid_argument("TimeGrid: non-finite point at index " + std::to_string(i));
      }
      if (i > 0 && !(points_[i] > points_[i - 1])) {
        throw std::invalid_argument("TimeGrid: points must be strictly increasing (index " +
                                    std::to_string(i) + ")");
      }
    }
  }

  static TimeGrid uniform(Scalar horizon, std::size_t count) {
    if (!(horizon > Scalar(0))) throw std::invalid_argument("TimeGrid: horizon must be positive");
    if (count < 2) throw std::invalid_argument("TimeGrid: need at least 2 points");
    std::vector<Scalar> pts(count);
    for (std::size_t i = 0; i < count; ++i) {
      pts[i] = horizon * Scalar(i) / Scalar(count - 1);
    }
    pts.back() = horizon;
    return TimeGrid(std::move(pts));
  }

  std::size_t size() const { return points_.size(); }
  Scalar horizon() const { return points_.back(); }
  Scalar operator[](std::size_t i) const { return points_[i]; }
  std::span<const Scalar> points() const { return points_; }

  bool contains(Scalar t) const { return t >= -slack() && t <= horizon() + slack(); }

  /// Throws std::out_of_range when t is outside [0, T] by more than a
  /// rounding-level slack; times inside the slack are clamped.
  Location locate(Scalar t) const {
    if (!contains(t)) {
      throw std::out_of_range("TimeGrid: t = " + std::to_string(static_cast<double>(t)) +
                              " outside [0, " + std::to_string(static_cast<double>(horizon())) +
                              "]");
    }
    t = std::clamp(t, Scalar(0), horizon());
    auto it = std::upper_bound(points_.begin(), points_.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - points_.begin());
    if (hi >= points_.size()) hi = points_.size() - 1;
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const Scalar frac = (t - points_[lo]) / (points_[hi] - points_[lo]);
    return {lo, frac};
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) { return a.points_ == b.points_; }

 private:
  Scalar slack() const { return Scalar(1e-12) * horizon(); }

  std::vector<Scalar> points_;
};

}  // namespace ltviqc
