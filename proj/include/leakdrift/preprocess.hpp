#pragma once

// Handling of the periodic structure of pressure streams: the standard-week
// template, last-week differencing, week-aligned window pairs, and lag
// features for forecasting.

#include "leakdrift/core.hpp"

#include <algorithm>
#include <set>

namespace leakdrift {

struct StandardWeek {
  Matrix mean;  // kWeek x n
  Matrix std;   // kWeek x n, population std
};

struct LagSpec {
  std::vector<std::size_t> lags{1, kDay, kWeek, 2 * kWeek};

  static LagSpec range(std::size_t first, std::size_t last) {
    LagSpec s;
    s.lags.clear();
    for (std::size_t l = first; l <= last; ++l) s.lags.push_back(l);
    return s;
  }

  std::size_t max_lag() const { return *std::max_element(lags.begin(), lags.end()); }

  void validate() const {
    if (lags.empty()) throw ValueError("lag spec is empty");
    std::set<std::size_t> seen;
    for (auto l : lags) {
      if (l == 0) throw ValueError("lags must be positive");
      if (!seen.insert(l).second) throw ValueError("duplicate lag " + std::to_string(l));
    }
  }

  friend bool operator==(const LagSpec&, const LagSpec&) = default;
};

/// Phase-wise mean and population std over all full weeks. Phase is taken
/// from the absolute sample index, so streams not starting on a week boundary
/// still fold consistently.
inline StandardWeek standard_week(const SensorStream& stream) {
  const auto weeks = week_count(stream);
  if (weeks == 0) throw SizeError("standard week needs at least one full week of samples");
  const auto n = static_cast<Eigen::Index>(stream.width());
  StandardWeek out{Matrix::Zero(kWeek, n), Matrix::Zero(kWeek, n)};
  const auto used = weeks * kWeek;
  for (std::size_t i = 0; i < used; ++i) {
    const auto k = static_cast<Eigen::Index>(static_cast<std::size_t>(stream.first_index() + i) % kWeek);
    out.mean.row(k) += stream.values().row(static_cast<Eigen::Index>(i));
  }
  out.mean /= static_cast<double>(weeks);
  for (std::size_t i = 0; i < used; ++i) {
    const auto k = static_cast<Eigen::Index>(static_cast<std::size_t>(stream.first_index() + i) % kWeek);
    out.std.row(k) += (stream.values().row(static_cast<Eigen::Index>(i)) - out.mean.row(k)).cwiseAbs2();
  }
  out.std = (out.std / static_cast<double>(weeks)).cwiseSqrt();
  return out;
}

inline SensorStream subtract_standard_week(const SensorStream& stream, const StandardWeek& tmpl) {
  if (tmpl.mean.cols() != static_cast<Eigen::Index>(stream.width()) || tmpl.mean.rows() != kWeek)
    throw ShapeError("standard week template does not match stream width");
  Matrix r = stream.values();
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(static_cast<std::size_t>(stream.first_index() + i) % kWeek);
    r.row(static_cast<Eigen::Index>(i)) -= tmpl.mean.row(k);
  }
  return SensorStream(stream.sensor_ids(), std::move(r), stream.first_index(), stream.sample_interval_minutes());
}

/// d(t) = x(t) - x(t - 672); the output starts at the stream's second week.
inline SensorStream week_difference(const SensorStream& stream) {
  if (stream.size() <= kWeek) throw SizeError("week difference needs more than one week of samples");
  const auto rows = static_cast<Eigen::Index>(stream.size() - kWeek);
  Matrix d = stream.values().bottomRows(rows) - stream.values().topRows(rows);
  return SensorStream(stream.sensor_ids(), std::move(d), stream.first_index() + static_cast<std::int64_t>(kWeek),
                      stream.sample_interval_minutes());
}

/// Reference window [split - len, split) and test window [split, split + len).
inline std::pair<Window, Window> window_pair(const SensorStream& stream, std::size_t split,
                                             std::size_t window_len = kWeek) {
  if (window_len == 0 || split < window_len || split + window_len > stream.size())
    throw RangeError("window pair around split " + std::to_string(split) + " with length " +
                     std::to_string(window_len) + " does not fit a stream of " + std::to_string(stream.size()));
  return {Window(stream, split - window_len, window_len), Window(stream, split, window_len)};
}

struct Design {
  Matrix X;
  Vector y;
  std::vector<std::size_t> rows;  // stream row of each design row
};

/// Autoregressive design for one sensor: features x(t - lag) for each lag,
/// target x(t), for every t with a full lag history.
inline Design lag_matrix(const SensorStream& stream, const LagSpec& spec, std::size_t sensor) {
  spec.validate();
  if (sensor >= stream.width()) throw RangeError("sensor index out of range");
  const auto max_lag = spec.max_lag();
  if (stream.size() <= max_lag) throw SizeError("stream too short for the largest lag");
  const auto m = stream.size() - max_lag;
  Design d{Matrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(spec.lags.size())),
           Vector(static_cast<Eigen::Index>(m)), std::vector<std::size_t>(m)};
  const auto col = stream.values().col(static_cast<Eigen::Index>(sensor));
  for (std::size_t r = 0; r < m; ++r) {
    const auto t = r + max_lag;
    for (std::size_t c = 0; c < spec.lags.size(); ++c)
      d.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = col(static_cast<Eigen::Index>(t - spec.lags[c]));
    d.y(static_cast<Eigen::Index>(r)) = col(static_cast<Eigen::Index>(t));
    d.rows[r] = t;
  }
  return d;
}

}  // namespace leakdrift
