#pragma once

// Leak localization: the sensor whose KS p-value is smallest is taken as the
// sensor nearest the leak, and the choice is graded by graph distances.

#include "leakdrift/core.hpp"
#include "leakdrift/distdetect.hpp"
#include "leakdrift/paths.hpp"

namespace leakdrift {

/// Raw (uncorrected) per-sensor KS p-values between two windows.
inline std::vector<double> pvalue_map(const Window& ref, const Window& test) {
  if (ref.width() != test.width()) throw ShapeError("pvalue_map: window widths differ");
  std::vector<double> p(ref.width());
  for (std::size_t j = 0; j < ref.width(); ++j)
    p[j] = ks_p_value(ks_statistic(ref.column(j), test.column(j)), ref.size(), test.size());
  return p;
}

/// Position of the smallest p-value; ties go to the lowest position.
inline std::size_t select_sensor(const std::vector<double>& pmap) {
  if (pmap.empty()) throw SizeError("select_sensor: empty p-value map");
  std::size_t best = 0;
  for (std::size_t j = 1; j < pmap.size(); ++j)
    if (pmap[j] < pmap[best]) best = j;
  return best;
}

struct LocalizationResult {
  std::size_t selected = 0;  // node index of s*
  std::size_t leak = 0;      // node index of v
  double dist = 0.0;
  std::size_t n_closer = 0;
  double rel_dist = 1.0;
  bool degenerate = false;   // some sensor sits exactly on v
};

/// Dist. = d(s*, v), #Cls. = |{s : d(s, v) < d(s*, v)}|,
/// rel.D. = d(s*, v) / min_s d(s, v).
inline LocalizationResult localization_metrics(const WdnGraph& graph, std::size_t selected, std::size_t leak,
                                               const DistanceTable* from_leak = nullptr) {
  const auto& sensors = graph.sensors();
  if (std::find(sensors.begin(), sensors.end(), selected) == sensors.end())
    throw ContractError("selected node is not a sensor");
  if (leak >= graph.node_count()) throw ReferenceError("unknown leak node");
  DistanceTable own;
  if (!from_leak) {
    own = shortest_paths(graph, leak);
    from_leak = &own;
  }
  LocalizationResult r;
  r.selected = selected;
  r.leak = leak;
  r.dist = (*from_leak)[selected];
  double best = std::numeric_limits<double>::infinity();
  for (auto s : sensors) {
    const double d = (*from_leak)[s];
    best = std::min(best, d);
    if (d < r.dist) ++r.n_closer;
  }
  if (best > 0.0) {
    r.rel_dist = r.dist / best;
  } else {
    r.degenerate = true;
    r.rel_dist = r.dist == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return r;
}

}  // namespace leakdrift
