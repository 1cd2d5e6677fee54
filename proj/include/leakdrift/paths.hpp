#pragma once

// Single-source shortest paths over the pipe network (Dijkstra).

#include "leakdrift/core.hpp"

#include <functional>
#include <limits>
#include <queue>

namespace leakdrift {

struct DistanceTable {
  std::size_t source = 0;
  std::vector<double> distance;  // meters, indexed by node

  double operator[](std::size_t node) const { return distance.at(node); }
};

inline DistanceTable shortest_paths(const WdnGraph& graph, std::size_t source) {
  if (source >= graph.node_count()) throw ReferenceError("unknown source node");
  constexpr double inf = std::numeric_limits<double>::infinity();
  DistanceTable table{source, std::vector<double>(graph.node_count(), inf)};
  auto& dist = table.distance;

  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (auto e : graph.incident(v)) {
      const auto& edge = graph.edge(e);
      const auto u = edge.a == v ? edge.b : edge.a;
      const double nd = d + edge.length;
      if (nd < dist[u]) {
        dist[u] = nd;
        queue.emplace(nd, u);
      }
    }
  }
  for (double d : dist)
    if (d == inf) throw ConnectivityError("graph is not connected");
  return table;
}

inline DistanceTable shortest_paths(const WdnGraph& graph, const std::string& source) {
  auto idx = graph.find_node(source);
  if (!idx) throw ReferenceError("unknown source node '" + source + "'");
  return shortest_paths(graph, *idx);
}

}  // namespace leakdrift
