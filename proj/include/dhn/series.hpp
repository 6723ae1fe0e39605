//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <vector>

namespace dhn {

/// Knots (t_i, v_i) with strictly increasing times, evaluated by linear
/// interpolation. Evaluation outside [t_front, t_back] throws InputError.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(std::vector<double> times_s, std::vector<double> values);

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }

  bool covers(double t0, double t1) const;
  double operator()(double t) const;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Uniformly sampled power series (W).
struct LoadSeries {
  double start_s = 0.0;
  double interval_s = 900.0;
  std::vector<double> values_w;

  std::size_t size() const { return values_w.size(); }
  double time(std::size_t i) const {
    return start_s + static_cast<double>(i) * interval_s;
  }
  double mean() const;
  TimeSeries as_time_series() const;
  /// Throws InputError unless interval > 0, values finite and >= 0.
  void validate() const;
};

}  // namespace dhn
