#pragma once

// Network topology ingestion (EPANET INP subset), surrogate pressure-scenario
// generation with leak injection, and scenario persistence (CSV + JSON).

#include "leakdrift/core.hpp"
#include "leakdrift/paths.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string_view>

namespace leakdrift {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// INP parsing

/// Reads node and pipe topology from EPANET INP text. Only [JUNCTIONS],
/// [RESERVOIRS], [TANKS] and [PIPES] are interpreted; everything else is skipped.
inline WdnGraph parse_inp(std::string_view text) {
  struct PipeRow {
    std::string id, a, b;
    double length;
    std::size_t line;
  };
  std::vector<std::string> nodes;
  std::vector<PipeRow> pipes;
  bool saw_pipes = false;
  std::string section;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto c = line.find(';'); c != std::string_view::npos) line = line.substr(0, c);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      auto close = line.find(']');
      if (close == std::string_view::npos)
        throw FormatError("line " + std::to_string(line_no) + ": unterminated section header");
      section = detail::upper(detail::trim(line.substr(1, close - 1)));
      if (section == "PIPES") saw_pipes = true;
      continue;
    }
    const auto cols = detail::split_ws(line);
    if (section == "JUNCTIONS" || section == "RESERVOIRS" || section == "TANKS") {
      nodes.emplace_back(cols[0]);
    } else if (section == "PIPES") {
      if (cols.size() < 4)
        throw FormatError("line " + std::to_string(line_no) + ": pipe row needs id, node1, node2, length");
      auto len = detail::parse_double(cols[3]);
      if (!len) throw FormatError("line " + std::to_string(line_no) + ": non-numeric pipe length");
      pipes.push_back({std::string(cols[0]), std::string(cols[1]), std::string(cols[2]), *len, line_no});
    }
    if (nl == text.size()) break;
  }
  if (!saw_pipes) throw FormatError("INP text has no [PIPES] section");

  WdnGraph g;
  for (const auto& n : nodes) g.add_node(n);
  for (const auto& p : pipes) {
    if (!(p.length > 0.0))
      throw ValueError("line " + std::to_string(p.line) + ": pipe '" + p.id + "' has non-positive length");
    g.add_edge(p.id, p.a, p.b, p.length);
  }
  return g;
}

inline WdnGraph read_inp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open INP file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_inp(ss.str());
}

/// Replaces `edge` by two half-length pipes joined at a fresh virtual node.
/// Returns the new graph and the virtual node's index.
inline std::pair<WdnGraph, std::size_t> split_pipe(const WdnGraph& graph, std::size_t edge) {
  if (edge >= graph.edge_count()) throw ReferenceError("unknown edge index " + std::to_string(edge));
  const auto& target = graph.edge(edge);
  WdnGraph out;
  for (const auto& id : graph.node_ids()) out.add_node(id);
  std::string mid_id = target.id + "#mid";
  while (out.find_node(mid_id)) mid_id += "'";
  const auto mid = out.add_node(mid_id);
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const auto& ed = graph.edge(e);
    if (e == edge) {
      out.add_edge(ed.id + "#a", ed.a, mid, ed.length / 2);
      out.add_edge(ed.id + "#b", mid, ed.b, ed.length / 2);
    } else {
      out.add_edge(ed.id, ed.a, ed.b, ed.length);
    }
  }
  out.set_sensors(graph.sensors());
  return {std::move(out), mid};
}

inline std::pair<WdnGraph, std::size_t> split_pipe(const WdnGraph& graph, const std::string& edge_id) {
  auto e = graph.find_edge(edge_id);
  if (!e) throw ReferenceError("unknown pipe '" + edge_id + "'");
  return split_pipe(graph, *e);
}

// ---------------------------------------------------------------------------
// Built-in topology for desk-scale runs

/// rows x cols street grid with pipe lengths drawn uniformly from
/// [min_len, max_len] and a few diagonal cross-connections.
inline WdnGraph synthetic_grid(std::size_t rows, std::size_t cols, std::uint64_t seed,
                               double min_len = 40.0, double max_len = 160.0) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw ValueError("grid needs at least two nodes");
  std::mt19937_64 rng(derive_seed(seed, "grid"));
  std::uniform_real_distribution<double> len(min_len, max_len);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  WdnGraph g;
  auto id = [](std::size_t r, std::size_t c) { return "N" + std::to_string(r) + "_" + std::to_string(c); };
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) g.add_node(id(r, c));
  std::size_t pipe = 0;
  auto add = [&](std::size_t a, std::size_t b, double l) { g.add_edge("P" + std::to_string(pipe++), a, b, l); };
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const auto v = r * cols + c;
      if (c + 1 < cols) add(v, v + 1, len(rng));
      if (r + 1 < rows) add(v, v + cols, len(rng));
      if (r + 1 < rows && c + 1 < cols && coin(rng) < 0.1) add(v, v + cols + 1, 1.4 * len(rng));
    }
  return g;
}

/// Greedy farthest-point sensor placement starting from a seeded node.
inline std::vector<std::size_t> place_sensors(const WdnGraph& graph, std::size_t count, std::uint64_t seed) {
  if (count == 0 || count > graph.node_count()) throw ValueError("sensor count out of range");
  std::mt19937_64 rng(derive_seed(seed, "sensors"));
  std::vector<std::size_t> chosen{std::uniform_int_distribution<std::size_t>(0, graph.node_count() - 1)(rng)};
  std::vector<double> nearest = shortest_paths(graph, chosen[0]).distance;
  while (chosen.size() < count) {
    std::size_t best = 0;
    for (std::size_t v = 1; v < nearest.size(); ++v)
      if (nearest[v] > nearest[best]) best = v;
    chosen.push_back(best);
    const auto d = shortest_paths(graph, best).distance;
    for (std::size_t v = 0; v < nearest.size(); ++v) nearest[v] = std::min(nearest[v], d[v]);
  }
  return chosen;
}

// ---------------------------------------------------------------------------
// Generator

struct GeneratorConfig {
  std::size_t n_sensors = 29;
  std::size_t days = 364;
  std::vector<double> base_pressure;  // per sensor; empty draws 40..60 m from the seed
  double daily_amplitude = 5.0;
  double weekend_attenuation = 0.6;
  double seasonal_amplitude = 1.0;
  double noise_std = 0.5;
  double leak_magnitude_per_mm = 0.05;
  double attenuation_length = 0.0;  // <= 0: median sensor-to-sensor distance
  std::size_t ramp_samples = kDay;
  std::uint64_t master_seed = 0;

  void validate() const {
    if (days == 0) throw ConfigError("generator.days must be positive");
    if (n_sensors == 0) throw ConfigError("generator.n_sensors must be positive");
    if (daily_amplitude < 0 || seasonal_amplitude < 0 || leak_magnitude_per_mm < 0)
      throw ConfigError("generator amplitudes must be >= 0");
    if (!(weekend_attenuation > 0 && weekend_attenuation <= 1))
      throw ConfigError("generator.weekend_attenuation must lie in (0, 1]");
    if (!(noise_std > 0)) throw ConfigError("generator.noise_std must be > 0");
    for (double b : base_pressure)
      if (!std::isfinite(b)) throw ConfigError("generator.base_pressure must be finite");
  }
};

struct LeakSpec {
  std::size_t edge = 0;
  double diameter_mm = 0.0;
  std::size_t onset = 0;
};

/// Median pairwise shortest-path distance between sensors.
inline double median_sensor_distance(const WdnGraph& graph) {
  const auto& s = graph.sensors();
  if (s.size() < 2) throw ValueError("need at least two sensors for a median distance");
  std::vector<double> d;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto table = shortest_paths(graph, s[i]);
    for (std::size_t j = i + 1; j < s.size(); ++j) d.push_back(table[s[j]]);
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(d.begin(), mid);
  return 0.5 * (lo + hi);
}

inline bool is_weekend(std::size_t t) { return (t / kDay) % 7 >= 5; }

/// Per-sensor spatial leak response exp(-d(v, s_j) / lambda) for a leak on `edge`.
/// Returns the virtual node id alongside.
inline std::pair<std::string, std::vector<double>> leak_response(const WdnGraph& graph, std::size_t edge,
                                                                 double attenuation_length) {
  const double lambda = attenuation_length > 0 ? attenuation_length : median_sensor_distance(graph);
  auto [split, mid] = split_pipe(graph, edge);
  const auto table = shortest_paths(split, mid);
  std::vector<double> response;
  for (auto s : split.sensors()) response.push_back(std::exp(-table[s] / lambda));
  return {split.node_id(mid), response};
}

/// Generates one pressure stream over the graph's sensors. The noise and
/// per-sensor phases depend only on `seed`, so a leak scenario and the
/// leak-free stream from the same seed agree exactly before onset.
inline LeakScenario generate_scenario(const WdnGraph& graph, const GeneratorConfig& cfg,
                                      const std::optional<LeakSpec>& leak, std::uint64_t seed) {
  cfg.validate();
  const auto& sensors = graph.sensors();
  if (sensors.empty()) throw ValueError("graph has no sensors");
  if (!cfg.base_pressure.empty() && cfg.base_pressure.size() != sensors.size())
    throw ConfigError("generator.base_pressure length does not match sensor count");
  const std::size_t n = sensors.size();
  const std::size_t len = cfg.days * kDay;
  if (leak && leak->onset >= len)
    throw RangeError("leak onset " + std::to_string(leak->onset) + " outside stream of length " +
                     std::to_string(len));
  if (leak && leak->edge >= graph.edge_count()) throw ReferenceError("unknown leak edge");

  std::vector<double> base(n), phase(n);
  {
    std::mt19937_64 rng(derive_seed(seed, "base"));
    std::uniform_real_distribution<double> u(40.0, 60.0);
    for (std::size_t j = 0; j < n; ++j) base[j] = cfg.base_pressure.empty() ? u(rng) : cfg.base_pressure[j];
  }
  {
    std::mt19937_64 rng(derive_seed(seed, "phase"));
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (auto& p : phase) p = u(rng);
  }

  constexpr double two_pi = 2.0 * std::numbers::pi;
  Matrix values(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(n));
  std::mt19937_64 noise_rng(derive_seed(seed, "noise"));
  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  for (std::size_t t = 0; t < len; ++t) {
    const double day_scale = is_weekend(t) ? cfg.weekend_attenuation : 1.0;
    const double seasonal = cfg.seasonal_amplitude * std::cos(two_pi * static_cast<double>(t) / kYear);
    for (std::size_t j = 0; j < n; ++j) {
      const double daily = cfg.daily_amplitude * std::sin(two_pi * static_cast<double>(t) / kDay + phase[j]);
      values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
          base[j] + daily * day_scale + seasonal + noise(noise_rng);
    }
  }

  LeakScenario out;
  out.seed = seed;
  out.baseline_id = "baseline-" + std::to_string(seed);
  if (leak) {
    auto [node, response] = leak_response(graph, leak->edge, cfg.attenuation_length);
    out.leak_node = node;
    out.leak_edge = graph.edge(leak->edge).id;
    out.diameter_mm = leak->diameter_mm;
    out.onset = leak->onset;
    const double magnitude = leak->diameter_mm * cfg.leak_magnitude_per_mm;
    for (std::size_t t = leak->onset; t < len; ++t) {
      const double ramp =
          cfg.ramp_samples == 0
              ? 1.0
              : std::min(1.0, static_cast<double>(t - leak->onset) / static_cast<double>(cfg.ramp_samples));
      for (std::size_t j = 0; j < n; ++j)
        values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) -= magnitude * response[j] * ramp;
    }
  }
  out.stream = SensorStream(graph.sensor_ids(), std::move(values));
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline std::string to_csv(const SensorStream& stream) {
  std::string out = "t";
  for (const auto& id : stream.sensor_ids()) out += "," + id;
  out += "\n";
  for (std::size_t i = 0; i < stream.size(); ++i) {
    out += std::to_string(stream.first_index() + static_cast<std::int64_t>(i));
    for (std::size_t j = 0; j < stream.width(); ++j) {
      out += ',';
      out += detail::format_double(stream(i, j));
    }
    out += '\n';
  }
  return out;
}

inline SensorStream from_csv(std::string_view text) {
  std::vector<std::string> ids;
  std::vector<double> flat;
  std::int64_t first = 0, expected = 0;
  std::size_t rows = 0, line_no = 0, pos = 0;
  bool header = true;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (header) {
      if (detail::trim(cells[0]) != "t") throw FormatError("CSV header must start with 't'");
      for (std::size_t c = 1; c < cells.size(); ++c) ids.emplace_back(detail::trim(cells[c]));
      if (ids.empty()) throw FormatError("CSV header has no sensor columns");
      header = false;
      continue;
    }
    if (cells.size() != ids.size() + 1)
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(ids.size() + 1) +
                        " cells, got " + std::to_string(cells.size()));
    auto t = detail::parse_int(cells[0]);
    if (!t) throw FormatError("line " + std::to_string(line_no) + ": non-integer sample index");
    if (rows == 0) {
      first = *t;
    } else if (*t != expected) {
      throw FormatError("line " + std::to_string(line_no) + ": sample index " + std::to_string(*t) +
                        " breaks contiguity (expected " + std::to_string(expected) + ")");
    }
    expected = *t + 1;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      auto v = detail::parse_double(cells[c]);
      if (!v || !std::isfinite(*v)) throw FormatError("line " + std::to_string(line_no) + ": non-numeric cell");
      flat.push_back(*v);
    }
    ++rows;
  }
  if (header) throw FormatError("CSV has no header");
  Matrix m = Eigen::Map<Matrix>(flat.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(ids.size()));
  return SensorStream(std::move(ids), std::move(m), first);
}

inline void write_csv(const SensorStream& stream, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << to_csv(stream);
  if (!out) throw Error("write failed for '" + path + "'");
}

inline SensorStream read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_csv(ss.str());
}

inline nlohmann::json scenario_metadata(const LeakScenario& s, const std::string& baseline_path) {
  return {{"leak_node", s.leak_node},
          {"diameter_mm", s.diameter_mm},
          {"onset", s.onset},
          {"seed", s.seed},
          {"baseline_path", baseline_path}};
}

}  // namespace leakdrift
