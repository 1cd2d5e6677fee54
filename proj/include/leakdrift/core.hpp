#pragma once

// Domain types shared by every module: sensor streams and windows over them,
// the pipe network graph, leak scenarios and labeled detection scores.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace leakdrift {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Samples per day and per week at 15-minute sampling.
inline constexpr std::size_t kDay = 96;
inline constexpr std::size_t kWeek = 7 * kDay;
inline constexpr std::size_t kYear = 52 * kWeek;

// ---------------------------------------------------------------------------
// Errors. Each failure class named by the operations gets its own type so
// callers (and the CLI) can dispatch on it.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RangeError : Error { using Error::Error; };
struct SizeError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct ReferenceError : Error { using Error::Error; };
struct ValueError : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };
struct CapacityError : Error { using Error::Error; };
struct ConnectivityError : Error { using Error::Error; };
struct ContractError : Error { using Error::Error; };
struct UndefinedMetricError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// ---------------------------------------------------------------------------

struct SensorFrame {
  std::int64_t t = 0;
  std::vector<double> values;
};

/// Uniformly sampled multivariate pressure series. Row i of `values()` is the
/// frame with sample index `first_index() + i`. Immutable once built.
class SensorStream {
 public:
  SensorStream() = default;

  SensorStream(std::vector<std::string> sensor_ids, Matrix values, std::int64_t first_index = 0,
               double sample_interval_minutes = 15.0)
      : ids_(std::move(sensor_ids)),
        values_(std::move(values)),
        first_(first_index),
        interval_(sample_interval_minutes) {
    if (static_cast<std::size_t>(values_.cols()) != ids_.size())
      throw ShapeError("sensor stream: " + std::to_string(values_.cols()) + " columns but " +
                       std::to_string(ids_.size()) + " sensor ids");
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_)
      if (!seen.insert(id).second) throw ValueError("sensor stream: duplicate sensor id '" + id + "'");
    if (!values_.allFinite()) throw ValueError("sensor stream: non-finite value");
  }

  static SensorStream from_frames(std::vector<std::string> sensor_ids,
                                  const std::vector<SensorFrame>& frames,
                                  double sample_interval_minutes = 15.0) {
    Matrix m(static_cast<Eigen::Index>(frames.size()), static_cast<Eigen::Index>(sensor_ids.size()));
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (frames[i].values.size() != sensor_ids.size())
        throw ShapeError("frame " + std::to_string(i) + " has wrong width");
      if (i > 0 && frames[i].t != frames[i - 1].t + 1)
        throw FormatError("frame indices must increase by exactly one");
      for (std::size_t j = 0; j < sensor_ids.size(); ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = frames[i].values[j];
    }
    return SensorStream(std::move(sensor_ids), std::move(m), frames.empty() ? 0 : frames.front().t,
                        sample_interval_minutes);
  }

  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t width() const { return ids_.size(); }
  std::int64_t first_index() const { return first_; }
  double sample_interval_minutes() const { return interval_; }
  const std::vector<std::string>& sensor_ids() const { return ids_; }
  const Matrix& values() const { return values_; }
  double operator()(std::size_t row, std::size_t sensor) const {
    return values_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(sensor));
  }

  SensorFrame frame(std::size_t row) const {
    SensorFrame f;
    f.t = first_ + static_cast<std::int64_t>(row);
    f.values.assign(values_.row(static_cast<Eigen::Index>(row)).begin(),
                    values_.row(static_cast<Eigen::Index>(row)).end());
    return f;
  }

  friend bool operator==(const SensorStream& a, const SensorStream& b) {
    return a.ids_ == b.ids_ && a.first_ == b.first_ && a.interval_ == b.interval_ &&
           a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           a.values_ == b.values_;
  }

 private:
  std::vector<std::string> ids_;
  Matrix values_;
  std::int64_t first_ = 0;
  double interval_ = 15.0;
};

/// Non-owning view over `len` consecutive frames of a stream. The stream must
/// outlive the window.
class Window {
 public:
  Window(const SensorStream& stream, std::size_t start, std::size_t len)
      : stream_(&stream), start_(start), len_(len) {}

  std::size_t start() const { return start_; }
  std::size_t size() const { return len_; }
  std::size_t width() const { return stream_->width(); }
  const SensorStream& stream() const { return *stream_; }

  auto data() const {
    return stream_->values().middleRows(static_cast<Eigen::Index>(start_),
                                        static_cast<Eigen::Index>(len_));
  }
  Matrix to_matrix() const { return data(); }

  /// Values of one sensor over the window.
  std::vector<double> column(std::size_t sensor) const {
    std::vector<double> out(len_);
    for (std::size_t i = 0; i < len_; ++i) out[i] = (*stream_)(start_ + i, sensor);
    return out;
  }

 private:
  const SensorStream* stream_;
  std::size_t start_;
  std::size_t len_;
};

inline Window slice(const SensorStream& stream, std::size_t start, std::size_t len) {
  if (len < 1 || start >= stream.size() || len > stream.size() - start)
    throw RangeError("slice [" + std::to_string(start) + ", +" + std::to_string(len) +
                     ") outside stream of length " + std::to_string(stream.size()));
  return Window(stream, start, len);
}

inline std::size_t week_count(const SensorStream& stream) { return stream.size() / kWeek; }

/// Copies a window back into a standalone stream (frame indices preserved).
inline SensorStream materialize(const Window& w) {
  return SensorStream(w.stream().sensor_ids(), w.to_matrix(),
                      w.stream().first_index() + static_cast<std::int64_t>(w.start()),
                      w.stream().sample_interval_minutes());
}

// ---------------------------------------------------------------------------

struct Edge {
  std::string id;
  std::size_t a = 0;
  std::size_t b = 0;
  double length = 0.0;
};

/// Undirected pipe network. Nodes are addressed by dense index; string ids are
/// kept for I/O. Parallel edges are allowed.
class WdnGraph {
 public:
  std::size_t add_node(const std::string& id) {
    if (index_.count(id)) throw ValueError("duplicate node id '" + id + "'");
    index_.emplace(id, nodes_.size());
    nodes_.push_back(id);
    adjacency_.emplace_back();
    return nodes_.size() - 1;
  }

  std::size_t add_edge(const std::string& id, const std::string& a, const std::string& b, double length) {
    const auto ia = find_node(a);
    const auto ib = find_node(b);
    if (!ia) throw ReferenceError("pipe '" + id + "' references undeclared node '" + a + "'");
    if (!ib) throw ReferenceError("pipe '" + id + "' references undeclared node '" + b + "'");
    return add_edge(id, *ia, *ib, length);
  }

  std::size_t add_edge(const std::string& id, std::size_t a, std::size_t b, double length) {
    if (!(length > 0.0) || !std::isfinite(length))
      throw ValueError("pipe '" + id + "' has non-positive length");
    if (a >= nodes_.size() || b >= nodes_.size()) throw ReferenceError("edge endpoint out of range");
    edges_.push_back({id, a, b, length});
    adjacency_[a].push_back(edges_.size() - 1);
    if (b != a) adjacency_[b].push_back(edges_.size() - 1);
    return edges_.size() - 1;
  }

  std::optional<std::size_t> find_node(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t node(const std::string& id) const {
    auto found = find_node(id);
    if (!found) throw ReferenceError("unknown node '" + id + "'");
    return *found;
  }
  std::optional<std::size_t> find_edge(const std::string& id) const {
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (edges_[e].id == id) return e;
    return std::nullopt;
  }

  void set_sensors(std::vector<std::size_t> sensors) {
    for (auto s : sensors)
      if (s >= nodes_.size()) throw ReferenceError("sensor index out of range");
    sensors_ = std::move(sensors);
  }
  void set_sensors_by_id(const std::vector<std::string>& ids) {
    std::vector<std::size_t> s;
    for (const auto& id : ids) s.push_back(node(id));
    set_sensors(std::move(s));
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::string& node_id(std::size_t i) const { return nodes_.at(i); }
  const std::vector<std::string>& node_ids() const { return nodes_; }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& incident(std::size_t node) const { return adjacency_.at(node); }
  const std::vector<std::size_t>& sensors() const { return sensors_; }

  std::vector<std::string> sensor_ids() const {
    std::vector<std::string> out;
    for (auto s : sensors_) out.push_back(nodes_[s]);
    return out;
  }

  double total_length() const {
    double sum = 0.0;
    for (const auto& e : edges_) sum += e.length;
    return sum;
  }

  bool connected() const {
    if (nodes_.empty()) return true;
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (auto e : adjacency_[v]) {
        auto u = edges_[e].a == v ? edges_[e].b : edges_[e].a;
        if (!seen[u]) {
          seen[u] = 1;
          ++count;
          stack.push_back(u);
        }
      }
    }
    return count == nodes_.size();
  }

 private:
  std::vector<std::string> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<std::size_t> sensors_;
};

// ---------------------------------------------------------------------------

struct LeakScenario {
  std::string leak_node;  // virtual midpoint node of the leaking pipe
  std::string leak_edge;  // original pipe id
  double diameter_mm = 0.0;
  std::size_t onset = 0;
  std::uint64_t seed = 0;
  SensorStream stream;
  std::string baseline_id;
};

struct LabeledScore {
  int label = 0;  // 0 = no leak, 1 = leak
  double score = 0.0;
};

// ---------------------------------------------------------------------------
// Seeding. Every random draw in the library goes through a seed derived with
// `derive_seed`, so work items can be evaluated in any order.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t master, const std::string& tag) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return derive_seed(master, h);
}

}  // namespace leakdrift
