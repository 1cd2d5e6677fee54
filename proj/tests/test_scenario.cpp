#include <catch_amalgamated.hpp>

#include "oracles.hpp"

#include <filesystem>
#include <fstream>

using namespace leakdrift;
using Catch::Approx;

namespace {

constexpr const char* kMinimalInp = R"([JUNCTIONS]
;ID  Elev  Demand
 J1  10    0
 J2  12    0

[PIPES]
;ID  Node1  Node2  Length  Diameter
 P1  J1     J2     100     300
)";

WdnGraph five_node_graph() {
  WdnGraph g;
  for (auto id : {"A", "B", "C", "D", "E"}) g.add_node(id);
  g.add_edge("ab", "A", "B", 100.0);
  g.add_edge("bc", "B", "C", 40.0);
  g.add_edge("cd", "C", "D", 70.0);
  g.add_edge("ae", "A", "E", 30.0);
  g.add_edge("ed", "E", "D", 90.0);
  return g;
}

/// Small network with sensors, used by the generator tests.
WdnGraph small_network() {
  auto g = synthetic_grid(4, 4, 3);
  g.set_sensors(place_sensors(g, 5, 3));
  return g;
}

}  // namespace

TEST_CASE("parse_inp reads junctions, reservoirs, tanks and pipes", "[scenario][inp]") {
  auto g = parse_inp(kMinimalInp);
  CHECK(g.node_count() == 2);
  REQUIRE(g.edge_count() == 1);
  CHECK(g.edge(0).length == 100.0);
  CHECK(g.sensors().empty());

  const std::string mixed = std::string("[TITLE]\nsome net\n[RESERVOIRS]\n R1 50\n[tanks]\n T1 10 1 0 5 20 0\n") +
                            kMinimalInp + "[PIPES]\n P2 R1 T1 250.5 200\n[CURVES]\n 1 2 3\n";
  auto h = parse_inp(mixed);
  CHECK(h.node_count() == 4);
  CHECK(h.edge_count() == 2);
  CHECK(h.edge(*h.find_edge("P2")).length == 250.5);
}

TEST_CASE("parse_inp error cases", "[scenario][inp]") {
  CHECK_THROWS_AS(parse_inp("[JUNCTIONS]\n J1 0 0\n"), FormatError);
  CHECK_THROWS_AS(parse_inp("[JUNCTIONS]\n J1 0\n[PIPES]\n P1 J1 J9 100 300\n"), ReferenceError);
  CHECK_THROWS_AS(parse_inp("[JUNCTIONS]\n J1\n J2\n[PIPES]\n P1 J1 J2 0 300\n"), ValueError);
  CHECK_THROWS_AS(parse_inp("[JUNCTIONS]\n J1\n J2\n[PIPES]\n P1 J1 J2 abc 300\n"), FormatError);
  CHECK_THROWS_AS(parse_inp("[JUNCTIONS]\n J1\n J2\n[PIPES]\n P1 J1 J2\n"), FormatError);
}

TEST_CASE("read_inp loads a network from disk", "[scenario][inp]") {
  const auto path = std::filesystem::temp_directory_path() / "leakdrift_minimal.inp";
  {
    std::ofstream out(path);
    out << kMinimalInp;
  }
  auto g = read_inp(path.string());
  std::filesystem::remove(path);
  CHECK(g.node_count() == 2);
  CHECK(g.connected());
  CHECK_THROWS_AS(read_inp("/nonexistent/net.inp"), FormatError);
}

TEST_CASE("split_pipe halves the edge and preserves distances", "[scenario]") {
  auto g = five_node_graph();
  g.set_sensors_by_id({"A", "D"});
  auto [split, mid] = split_pipe(g, "ab");
  CHECK(split.node_count() == g.node_count() + 1);
  CHECK(split.edge_count() == g.edge_count() + 1);
  CHECK(split.incident(mid).size() == 2);
  for (auto e : split.incident(mid)) CHECK(split.edge(e).length == 50.0);
  CHECK(split.total_length() == Approx(g.total_length()).epsilon(1e-15));
  CHECK(split.sensors() == g.sensors());
  CHECK(split.node_id(mid) == "ab#mid");

  for (auto s : {"A", "B", "C", "D", "E"}) {
    const auto before = shortest_paths(g, s);
    const auto after = shortest_paths(split, s);
    for (std::size_t v = 0; v < g.node_count(); ++v) CHECK(after[v] == Approx(before[v]));
  }
  CHECK_THROWS_AS(split_pipe(g, "zz"), ReferenceError);
  CHECK_THROWS_AS(split_pipe(g, 99), ReferenceError);
}

TEST_CASE("synthetic grid and sensor placement", "[scenario]") {
  auto g = synthetic_grid(5, 6, 9);
  CHECK(g.node_count() == 30);
  CHECK(g.connected());
  CHECK(g.edge_count() >= 5 * 5 + 4 * 6);
  auto s = place_sensors(g, 8, 9);
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 8);
  CHECK(place_sensors(g, 8, 9) == s);
  CHECK_THROWS_AS(place_sensors(g, 31, 9), ValueError);
}

TEST_CASE("generator is deterministic and leak-free before onset", "[scenario][generator]") {
  auto g = small_network();
  GeneratorConfig cfg;
  cfg.days = 21;
  auto a = generate_scenario(g, cfg, std::nullopt, 77);
  auto b = generate_scenario(g, cfg, std::nullopt, 77);
  CHECK(a.stream == b.stream);
  CHECK_FALSE(generate_scenario(g, cfg, std::nullopt, 78).stream == a.stream);

  auto zero = generate_scenario(g, cfg, LeakSpec{3, 0.0, 500}, 77);
  CHECK(zero.stream.values() == a.stream.values());

  auto leak = generate_scenario(g, cfg, LeakSpec{3, 15.0, 900}, 77);
  CHECK(leak.stream.values().topRows(900) == a.stream.values().topRows(900));
  CHECK((leak.stream.values().bottomRows(100).array() < a.stream.values().bottomRows(100).array()).all());
  CHECK(leak.leak_edge == g.edge(3).id);
  CHECK(leak.diameter_mm == 15.0);

  CHECK_THROWS_AS(generate_scenario(g, cfg, LeakSpec{3, 7.0, 21 * kDay}, 1), RangeError);
  cfg.noise_std = 0.0;
  CHECK_THROWS_AS(generate_scenario(g, cfg, std::nullopt, 1), ConfigError);
}

TEST_CASE("weekend days have attenuated daily swings", "[scenario][generator]") {
  auto g = small_network();
  GeneratorConfig cfg;
  cfg.days = 7;
  cfg.noise_std = 1e-9;
  cfg.seasonal_amplitude = 0.0;
  auto s = generate_scenario(g, cfg, std::nullopt, 4).stream;
  auto range_of_day = [&](std::size_t day) {
    const auto block = s.values().col(0).segment(static_cast<Eigen::Index>(day * kDay), kDay);
    return block.maxCoeff() - block.minCoeff();
  };
  CHECK(range_of_day(5) / range_of_day(2) == Approx(cfg.weekend_attenuation).epsilon(1e-3));
  CHECK(range_of_day(6) / range_of_day(0) == Approx(cfg.weekend_attenuation).epsilon(1e-3));
}

TEST_CASE("leak drop at the nearest sensor matches the attenuation law", "[scenario][generator]") {
  auto g = small_network();
  GeneratorConfig cfg;
  cfg.days = 28;
  const std::size_t edge = 7, onset = 7 * kDay;
  const double diameter = 19.0;
  auto base = generate_scenario(g, cfg, std::nullopt, 5);
  auto leak = generate_scenario(g, cfg, LeakSpec{edge, diameter, onset}, 5);

  // independent evaluation of exp(-d / lambda) at the sensor nearest the leak
  auto [split, mid] = split_pipe(g, edge);
  const auto d = oracle::bellman_ford(split, mid);
  std::size_t nearest = 0;
  for (std::size_t j = 1; j < g.sensors().size(); ++j)
    if (d[g.sensors()[j]] < d[g.sensors()[nearest]]) nearest = j;
  const double lambda = median_sensor_distance(g);
  const double expected = diameter * cfg.leak_magnitude_per_mm * std::exp(-d[g.sensors()[nearest]] / lambda);

  const auto post = static_cast<Eigen::Index>(onset + cfg.ramp_samples);
  const auto n = base.stream.values().rows() - post;
  const double drop = (base.stream.values().col(static_cast<Eigen::Index>(nearest)).tail(n) -
                       leak.stream.values().col(static_cast<Eigen::Index>(nearest)).tail(n))
                          .mean();
  CHECK(std::abs(drop - expected) <= 3.0 * cfg.noise_std / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("CSV round trip and format errors", "[scenario][csv]") {
  Matrix m(10, 3);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(50.0, 7.0);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = n(rng);
  SensorStream s({"a", "b", "c"}, m, 40);
  const auto text = to_csv(s);
  CHECK(text.rfind("t,a,b,c\n40,", 0) == 0);
  CHECK(from_csv(text) == s);

  const auto path = std::filesystem::temp_directory_path() / "leakdrift_roundtrip.csv";
  write_csv(s, path.string());
  CHECK(read_csv(path.string()) == s);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(from_csv("t,a,b\n0,1,2\n1,3\n"), FormatError);
  CHECK_THROWS_AS(from_csv("t,a\n0,1\n1,2\n3,4\n"), FormatError);
  CHECK_THROWS_AS(from_csv("t,a\n0,1\n1,x\n"), FormatError);
  CHECK_THROWS_AS(from_csv("time,a\n0,1\n"), FormatError);
  CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), FormatError);
}

TEST_CASE("scenario metadata records the leak", "[scenario]") {
  auto g = small_network();
  GeneratorConfig cfg;
  cfg.days = 7;
  auto leak = generate_scenario(g, cfg, LeakSpec{2, 11.0, 100}, 9);
  auto j = scenario_metadata(leak, "baseline_0.csv");
  CHECK(j["leak_node"] == g.edge(2).id + "#mid");
  CHECK(j["diameter_mm"] == 11.0);
  CHECK(j["onset"] == 100);
  CHECK(j["seed"] == 9);
  CHECK(j["baseline_path"] == "baseline_0.csv");
}
