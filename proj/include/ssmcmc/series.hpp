#ifndef SSMCMC_SERIES_HPP
#define SSMCMC_SERIES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ssmcmc/errors.hpp"

namespace ssmcmc {

// Strictly increasing observation times. Gaps are derived, gap(t) = T_t - T_{t-1}
// for t >= 1 (0-based), so there are n-1 gaps for n timestamps.
class TimeGrid {
 public:
  TimeGrid() = default;

  explicit TimeGrid(std::vector<double> timestamps)
      : ts_(std::move(timestamps)) {
    validate();
  }

  static TimeGrid regular(std::size_t n, double dt, double t0 = 0.0) {
    if (dt <= 0.0) throw NonPositiveGap("regular grid requires dt > 0");
    std::vector<double> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = t0 + dt * static_cast<double>(i);
    return TimeGrid(std::move(ts));
  }

  std::size_t size() const { return ts_.size(); }
  double timestamp(std::size_t t) const { return ts_[t]; }
  const std::vector<double>& timestamps() const { return ts_; }

  double gap(std::size_t t) const { return ts_[t] - ts_[t - 1]; }

  std::vector<double> gaps() const {
    std::vector<double> g;
    g.reserve(ts_.size() > 0 ? ts_.size() - 1 : 0);
    for (std::size_t t = 1; t < ts_.size(); ++t) g.push_back(gap(t));
    return g;
  }

 private:
  void validate() const {
    for (std::size_t t = 1; t < ts_.size(); ++t) {
      if (ts_[t] == ts_[t - 1])
        throw DuplicateTimestamp("duplicate timestamp at index " + std::to_string(t) +
                                 " (t=" + std::to_string(ts_[t]) + ")");
      if (ts_[t] < ts_[t - 1])
        throw NonMonotoneTime("timestamps not increasing at index " + std::to_string(t));
    }
    for (double v : ts_)
      if (!std::isfinite(v)) throw ParseError("non-finite timestamp");
  }

  std::vector<double> ts_;
};

// Timestamped observation stream. One row per timestamp; 1 column for the
// scalar models, 2 columns (position, velocity) for one axis of the 2-D model,
// 4 columns (x, y, vx, vy) for a raw two-axis file.
struct ObservationSeries {
  TimeGrid grid;
  Eigen::MatrixXd values;  // size() x dim
  std::string units_meta;

  std::size_t size() const { return grid.size(); }
  Eigen::Index dim() const { return values.cols(); }

  void validate() const {
    if (static_cast<std::size_t>(values.rows()) != grid.size())
      throw DataError("observation count does not match timestamp count");
    if (!values.allFinite()) throw DataError("non-finite observation value");
  }

  // One axis of a two-axis (x, y, vx, vy) file as a (position, velocity) series.
  ObservationSeries axis(int which) const {
    if (dim() != 4) throw DataError("axis extraction requires a 4-column series");
    ObservationSeries out;
    out.grid = grid;
    out.units_meta = units_meta;
    out.values.resize(values.rows(), 2);
    out.values.col(0) = values.col(which);       // x or y
    out.values.col(1) = values.col(2 + which);   // vx or vy
    return out;
  }

  ObservationSeries window(std::size_t first, std::size_t count) const {
    ObservationSeries out;
    std::vector<double> ts(grid.timestamps().begin() + static_cast<std::ptrdiff_t>(first),
                           grid.timestamps().begin() + static_cast<std::ptrdiff_t>(first + count));
    out.grid = TimeGrid(std::move(ts));
    out.values = values.middleRows(static_cast<Eigen::Index>(first),
                                   static_cast<Eigen::Index>(count));
    out.units_meta = units_meta;
    return out;
  }
};

}  // namespace ssmcmc

#endif
