//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "dhn/series.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dhn/csv.hpp"
#include "dhn/error.hpp"

namespace dhn {

TimeSeries::TimeSeries(std::vector<double> times_s, std::vector<double> values)
    : times_(std::move(times_s)), values_(std::move(values)) {
  if (times_.size() != values_.size())
    throw InputError("time series: times and values differ in length");
  if (times_.empty())
    throw InputError("time series is empty");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !std::isfinite(values_[i]))
      throw InputError("time series: non-finite entry at index " + std::to_string(i));
    if (i > 0 && !(times_[i] > times_[i - 1]))
      throw InputError("time series: times must be strictly increasing (t="
                       + csv::format_double(times_[i]) + ")");
  }
}

bool TimeSeries::covers(double t0, double t1) const {
  return !times_.empty() && times_.front() <= t0 && t1 <= times_.back();
}

double TimeSeries::operator()(double t) const {
  if (!covers(t, t))
    throw InputError("time " + csv::format_double(t)
                     + " s lies outside the series span");
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  const auto hi = static_cast<std::size_t>(it - times_.begin());
  if (times_[hi] == t)
    return values_[hi];
  const std::size_t lo = hi - 1;
  const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

double LoadSeries::mean() const {
  double sum = 0.0;
  for (double v : values_w)
    sum += v;
  return values_w.empty() ? 0.0 : sum / static_cast<double>(values_w.size());
}

TimeSeries LoadSeries::as_time_series() const {
  std::vector<double> t(values_w.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = time(i);
  return TimeSeries(std::move(t), values_w);
}

void LoadSeries::validate() const {
  if (!(std::isfinite(interval_s) && interval_s > 0))
    throw InputError("load series: sample interval must be > 0");
  for (std::size_t i = 0; i < values_w.size(); ++i)
    if (!std::isfinite(values_w[i]) || values_w[i] < 0)
      throw InputError("load series: value at index " + std::to_string(i)
                       + " must be finite and >= 0");
}

}  // namespace dhn
