#pragma once

// Experiment driver: scenario planning, the model-loss, distribution-detector,
// localization and shape studies, and their CSV/JSON outputs.

#include "leakdrift/core.hpp"
#include "leakdrift/distdetect.hpp"
#include "leakdrift/localize.hpp"
#include "leakdrift/modelloss.hpp"
#include "leakdrift/preprocess.hpp"
#include "leakdrift/scenario.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <set>
#include <thread>

namespace leakdrift {

inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

struct ShapeConfig {
  std::vector<double> window_days{1, 7, 14};
  double size_mm = 11.0;
  std::size_t scenario = 0;
  std::optional<double> onset_day;  // overrides the planned onset
  std::size_t steps_per_window = 12;
  std::size_t half_width = 12;
  std::size_t max_window_rows = 1344;
  // Phase-aligned neighbouring windows push the unbiased MMD^2 below zero on
  // periodic streams, so a clip at 0 can flatten the whole curve.
  bool clip_magnitude = false;
};

struct ExperimentConfig {
  std::string graph = "grid:12x12";
  std::vector<std::string> sensors;  // node ids; empty places generator.n_sensors automatically
  GeneratorConfig generator;
  std::vector<double> sizes{7, 11, 15, 19};
  std::size_t random_leaks = 20;       // "random:k"
  std::vector<std::string> leak_edges; // explicit pipe ids, one scenario each
  std::vector<std::size_t> displacements{0, 1, 2, 3, 4, 5, 6};
  std::vector<std::string> detectors{"ks", "mmd", "d3_linear", "d3_knn", "dawidd"};
  std::vector<std::string> models{"knn", "ridge", "poly_ridge"};
  std::vector<std::string> tasks{"forecast", "interpolate"};
  std::size_t folds = 10;
  std::size_t eval_stride = 1;
  ModelParams model_params;
  std::size_t n_perm = 200;
  std::size_t subsample = 1;
  std::size_t d3_folds = 5;
  double d3_threshold = 0.7;
  std::size_t d3_k = 10;
  ShapeConfig shape;
  std::uint64_t master_seed = 0;
  std::string out = "out";
  std::size_t jobs = 1;

  std::size_t scenario_count() const { return leak_edges.empty() ? random_leaks : leak_edges.size(); }
};

namespace detail {

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "config must be a JSON object" : path + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown config key '" + (path.empty() ? key : path + "." + key) + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  const std::string full = path.empty() ? key : path + "." + key;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.at(key).is_boolean()) throw ConfigError(full + " must be true or false");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!j.at(key).is_number_integer() || j.at(key).get<long long>() < 0)
        throw ConfigError(full + " must be a non-negative integer");
    }
    if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      for (const auto& v : j.at(key))
        if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(full + " entries must be non-negative integers");
    }
    out = j.at(key).get<T>();
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(full + ": " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  using detail::read_field;
  detail::reject_unknown(j, "", {"graph", "sensors", "generator", "sizes", "leak_edges", "displacements", "detectors",
                                 "models", "tasks", "folds", "eval_stride", "model_params", "n_perm", "subsample",
                                 "d3", "shape", "master_seed", "out", "jobs"});
  ExperimentConfig c;
  read_field(j, "graph", "", c.graph);
  read_field(j, "sensors", "", c.sensors);
  if (j.contains("generator")) {
    const auto& g = j["generator"];
    detail::reject_unknown(g, "generator",
                           {"n_sensors", "days", "base_pressure", "daily_amplitude", "weekend_attenuation",
                            "seasonal_amplitude", "noise_std", "leak_magnitude_per_mm", "attenuation_length",
                            "ramp_samples", "master_seed"});
    auto& G = c.generator;
    read_field(g, "n_sensors", "generator", G.n_sensors);
    read_field(g, "days", "generator", G.days);
    read_field(g, "base_pressure", "generator", G.base_pressure);
    read_field(g, "daily_amplitude", "generator", G.daily_amplitude);
    read_field(g, "weekend_attenuation", "generator", G.weekend_attenuation);
    read_field(g, "seasonal_amplitude", "generator", G.seasonal_amplitude);
    read_field(g, "noise_std", "generator", G.noise_std);
    read_field(g, "leak_magnitude_per_mm", "generator", G.leak_magnitude_per_mm);
    read_field(g, "attenuation_length", "generator", G.attenuation_length);
    read_field(g, "ramp_samples", "generator", G.ramp_samples);
    read_field(g, "master_seed", "generator", G.master_seed);
  }
  read_field(j, "sizes", "", c.sizes);
  if (j.contains("leak_edges")) {
    const auto& le = j["leak_edges"];
    if (le.is_string()) {
      const auto s = le.get<std::string>();
      if (s.rfind("random:", 0) != 0) throw ConfigError("leak_edges must be \"random:<k>\" or a list of pipe ids");
      auto k = detail::parse_int(s.substr(7));
      if (!k || *k < 1) throw ConfigError("leak_edges: random count must be a positive integer");
      c.random_leaks = static_cast<std::size_t>(*k);
      c.leak_edges.clear();
    } else {
      read_field(j, "leak_edges", "", c.leak_edges);
    }
  }
  read_field(j, "displacements", "", c.displacements);
  read_field(j, "detectors", "", c.detectors);
  read_field(j, "models", "", c.models);
  read_field(j, "tasks", "", c.tasks);
  read_field(j, "folds", "", c.folds);
  read_field(j, "eval_stride", "", c.eval_stride);
  if (j.contains("model_params")) {
    const auto& m = j["model_params"];
    detail::reject_unknown(m, "model_params",
                           {"k", "ridge_lambda", "degree", "alpha", "l1_ratio", "max_iter", "tol", "max_poly_features"});
    auto& P = c.model_params;
    read_field(m, "k", "model_params", P.k);
    read_field(m, "ridge_lambda", "model_params", P.ridge_lambda);
    read_field(m, "degree", "model_params", P.degree);
    read_field(m, "alpha", "model_params", P.alpha);
    read_field(m, "l1_ratio", "model_params", P.l1_ratio);
    read_field(m, "max_iter", "model_params", P.max_iter);
    read_field(m, "tol", "model_params", P.tol);
    read_field(m, "max_poly_features", "model_params", P.max_poly_features);
  }
  read_field(j, "n_perm", "", c.n_perm);
  read_field(j, "subsample", "", c.subsample);
  if (j.contains("d3")) {
    const auto& d = j["d3"];
    detail::reject_unknown(d, "d3", {"folds", "threshold", "k"});
    read_field(d, "folds", "d3", c.d3_folds);
    read_field(d, "threshold", "d3", c.d3_threshold);
    read_field(d, "k", "d3", c.d3_k);
  }
  if (j.contains("shape")) {
    const auto& s = j["shape"];
    detail::reject_unknown(s, "shape",
                           {"window_days", "size_mm", "scenario", "onset_day", "steps_per_window", "half_width",
                            "max_window_rows", "clip_magnitude"});
    read_field(s, "window_days", "shape", c.shape.window_days);
    read_field(s, "size_mm", "shape", c.shape.size_mm);
    read_field(s, "scenario", "shape", c.shape.scenario);
    if (s.contains("onset_day") && !s["onset_day"].is_null()) {
      double d = 0;
      read_field(s, "onset_day", "shape", d);
      c.shape.onset_day = d;
    }
    read_field(s, "steps_per_window", "shape", c.shape.steps_per_window);
    read_field(s, "half_width", "shape", c.shape.half_width);
    read_field(s, "max_window_rows", "shape", c.shape.max_window_rows);
    read_field(s, "clip_magnitude", "shape", c.shape.clip_magnitude);
  }
  read_field(j, "master_seed", "", c.master_seed);
  read_field(j, "out", "", c.out);
  read_field(j, "jobs", "", c.jobs);
  return c;
}

/// Canonical form of everything that influences results (excludes out/jobs).
inline json config_to_json(const ExperimentConfig& c) {
  const auto& G = c.generator;
  const auto& P = c.model_params;
  json leak_edges = c.leak_edges.empty() ? json("random:" + std::to_string(c.random_leaks)) : json(c.leak_edges);
  return {
      {"graph", c.graph},
      {"sensors", c.sensors},
      {"generator",
       {{"n_sensors", G.n_sensors},
        {"days", G.days},
        {"base_pressure", G.base_pressure},
        {"daily_amplitude", G.daily_amplitude},
        {"weekend_attenuation", G.weekend_attenuation},
        {"seasonal_amplitude", G.seasonal_amplitude},
        {"noise_std", G.noise_std},
        {"leak_magnitude_per_mm", G.leak_magnitude_per_mm},
        {"attenuation_length", G.attenuation_length},
        {"ramp_samples", G.ramp_samples},
        {"master_seed", G.master_seed}}},
      {"sizes", c.sizes},
      {"leak_edges", leak_edges},
      {"displacements", c.displacements},
      {"detectors", c.detectors},
      {"models", c.models},
      {"tasks", c.tasks},
      {"folds", c.folds},
      {"eval_stride", c.eval_stride},
      {"model_params",
       {{"k", P.k},
        {"ridge_lambda", P.ridge_lambda},
        {"degree", P.degree},
        {"alpha", P.alpha},
        {"l1_ratio", P.l1_ratio},
        {"max_iter", P.max_iter},
        {"tol", P.tol},
        {"max_poly_features", P.max_poly_features}}},
      {"n_perm", c.n_perm},
      {"subsample", c.subsample},
      {"d3", {{"folds", c.d3_folds}, {"threshold", c.d3_threshold}, {"k", c.d3_k}}},
      {"shape",
       {{"window_days", c.shape.window_days},
        {"size_mm", c.shape.size_mm},
        {"scenario", c.shape.scenario},
        {"onset_day", c.shape.onset_day ? json(*c.shape.onset_day) : json(nullptr)},
        {"steps_per_window", c.shape.steps_per_window},
        {"half_width", c.shape.half_width},
        {"max_window_rows", c.shape.max_window_rows},
        {"clip_magnitude", c.shape.clip_magnitude}}},
      {"master_seed", c.master_seed},
  };
}

inline std::uint64_t config_hash(const ExperimentConfig& c) {
  const auto text = config_to_json(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline const std::set<std::string>& known_detectors() {
  static const std::set<std::string> k{"ks", "mmd", "d3_linear", "d3_knn", "dawidd"};
  return k;
}

inline void validate(const ExperimentConfig& c) {
  try {
    c.generator.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(e.what());
  }
  if (c.scenario_count() == 0) throw ConfigError("leak_edges: at least one scenario required");
  if (c.sizes.empty()) throw ConfigError("sizes: at least one leak size required");
  for (double s : c.sizes)
    if (!(s >= 0) || !std::isfinite(s)) throw ConfigError("sizes: leak sizes must be >= 0");
  if (c.displacements.empty()) throw ConfigError("displacements: at least one value required");
  for (const auto& d : c.detectors)
    if (!known_detectors().count(d)) throw ConfigError("detectors: unknown detector '" + d + "'");
  for (const auto& m : c.models) {
    try {
      parse_model_kind(m);
    } catch (const ConfigError&) {
      throw ConfigError("models: unknown model '" + m + "'");
    }
  }
  for (const auto& t : c.tasks) {
    try {
      parse_task(t);
    } catch (const ConfigError&) {
      throw ConfigError("tasks: unknown task '" + t + "'");
    }
  }
  if (c.folds == 0) throw ConfigError("folds must be positive");
  if (c.eval_stride == 0) throw ConfigError("eval_stride must be positive");
  if (c.n_perm == 0) throw ConfigError("n_perm must be positive");
  if (c.subsample == 0) throw ConfigError("subsample must be positive");
  if (c.d3_folds < 2) throw ConfigError("d3.folds must be >= 2");
  if (c.model_params.k == 0) throw ConfigError("model_params.k must be positive");
  if (c.model_params.degree < 1) throw ConfigError("model_params.degree must be >= 1");
  if (c.shape.window_days.empty()) throw ConfigError("shape.window_days: at least one window required");
  for (double d : c.shape.window_days)
    if (!(d > 0)) throw ConfigError("shape.window_days must be positive");
  if (c.shape.half_width == 0 || c.shape.steps_per_window == 0) throw ConfigError("shape: step settings must be positive");
  if (c.jobs == 0) throw ConfigError("jobs must be positive");
}

// ---------------------------------------------------------------------------
// Work distribution

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be written
/// to per-index slots so ordering never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Setup and scenario planning

struct Setup {
  WdnGraph graph;
  GeneratorConfig generator;  // attenuation_length resolved
};

inline Setup make_setup(const ExperimentConfig& c) {
  validate(c);
  Setup s;
  if (c.graph.rfind("grid:", 0) == 0) {
    const auto spec = c.graph.substr(5);
    const auto x = spec.find('x');
    auto r = x == std::string::npos ? std::nullopt : detail::parse_int(spec.substr(0, x));
    auto k = x == std::string::npos ? std::nullopt : detail::parse_int(spec.substr(x + 1));
    if (!r || !k || *r < 1 || *k < 1) throw ConfigError("graph: expected grid:<rows>x<cols>");
    s.graph = synthetic_grid(static_cast<std::size_t>(*r), static_cast<std::size_t>(*k), c.master_seed);
  } else {
    try {
      s.graph = read_inp(c.graph);
    } catch (const Error& e) {
      throw ConfigError(std::string("graph: ") + e.what());
    }
  }
  if (!s.graph.connected()) throw ConfigError("graph: network is not connected");
  if (c.sensors.empty()) {
    if (c.generator.n_sensors > s.graph.node_count())
      throw ConfigError("generator.n_sensors exceeds the number of network nodes");
    s.graph.set_sensors(place_sensors(s.graph, c.generator.n_sensors, c.master_seed));
  } else {
    try {
      s.graph.set_sensors_by_id(c.sensors);
    } catch (const Error& e) {
      throw ConfigError(std::string("sensors: ") + e.what());
    }
  }
  s.generator = c.generator;
  if (!(s.generator.attenuation_length > 0)) s.generator.attenuation_length = median_sensor_distance(s.graph);
  for (const auto& id : c.leak_edges)
    if (!s.graph.find_edge(id)) throw ConfigError("leak_edges: unknown pipe '" + id + "'");
  return s;
}

struct ScenarioPlan {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::size_t edge = 0;
  std::size_t onset = 0;
};

/// Scenario i depends only on (master_seed, i): its noise seed, leak pipe and
/// onset. Onsets leave room for a reference week before and the largest
/// displacement plus a test week after.
inline std::vector<ScenarioPlan> plan_scenarios(const Setup& s, const ExperimentConfig& c) {
  const auto len = c.generator.days * kDay;
  const auto max_disp = *std::max_element(c.displacements.begin(), c.displacements.end());
  const auto reserve = kWeek + max_disp * kDay;
  if (len < kWeek + reserve + 1)
    throw ConfigError("generator.days too small for a reference week, displacements and a test week");
  const auto lo = kWeek;
  const auto hi = len - reserve;
  std::vector<ScenarioPlan> plans;
  for (std::size_t i = 0; i < c.scenario_count(); ++i) {
    ScenarioPlan p;
    p.index = i;
    p.seed = derive_seed(c.master_seed, i);
    std::mt19937_64 rng(derive_seed(p.seed, "plan"));
    p.edge = c.leak_edges.empty() ? std::uniform_int_distribution<std::size_t>(0, s.graph.edge_count() - 1)(rng)
                                  : *s.graph.find_edge(c.leak_edges[i]);
    p.onset = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    plans.push_back(p);
  }
  return plans;
}

inline LeakScenario make_baseline(const Setup& s, const ScenarioPlan& p) {
  return generate_scenario(s.graph, s.generator, std::nullopt, p.seed);
}

inline LeakScenario make_leak(const Setup& s, const ScenarioPlan& p, double size_mm) {
  return generate_scenario(s.graph, s.generator, LeakSpec{p.edge, size_mm, p.onset}, p.seed);
}

// ---------------------------------------------------------------------------
// Aggregation helpers

struct Summary {
  double mean = 0.0, std = 0.0, median = 0.0;
  std::size_t n = 0;
};

/// Mean, population std and median.
inline Summary summarize(std::vector<double> v) {
  Summary s;
  s.n = v.size();
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
  std::sort(v.begin(), v.end());
  const auto h = v.size() / 2;
  s.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  return s;
}

inline std::string fmt(double v) { return detail::format_double(v); }

// ---------------------------------------------------------------------------
// Model-loss study

struct ModelLossRecord {
  std::size_t scenario = 0;
  std::size_t fold = 0;
  std::string model;
  std::string task;
  double size_mm = 0.0;
  double auc = 0.0;
  double mse = 0.0;
  double baseline_mse = 0.0;
  double training_mse = 0.0;
};

struct SweepRow {
  std::string group;    // detector or model/task
  double size_mm = 0.0;
  double axis = 0.0;    // displacement in days (dist) or 0
  Summary auc;
  Summary mse;          // model-loss only
  Summary baseline_mse; // model-loss only
};

struct ModelLossResult {
  std::vector<ModelLossRecord> records;
  std::vector<SweepRow> sweep;
};

/// Training blocks: non-overlapping two-week blocks starting after two weeks
/// of history so the longest default lag is available.
inline std::vector<std::size_t> fold_starts(const ExperimentConfig& c) {
  const auto len = c.generator.days * kDay;
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < c.folds; ++f) {
    const auto start = 2 * kWeek + f * 2 * kWeek;
    if (start + 2 * kWeek > len) break;
    out.push_back(start);
  }
  if (out.empty()) throw ConfigError("generator.days too small for a single training fold");
  return out;
}

inline ModelLossResult run_modelloss(const ExperimentConfig& c) {
  const auto setup = make_setup(c);
  const auto plans = plan_scenarios(setup, c);
  const auto folds = fold_starts(c);
  FoldOptions opt;
  opt.params = c.model_params;
  opt.eval_stride = c.eval_stride;

  std::vector<std::vector<ModelLossRecord>> per_scenario(plans.size());
  parallel_for(plans.size(), c.jobs, [&](std::size_t i) {
    const auto& plan = plans[i];
    const auto baseline = make_baseline(setup, plan);
    std::vector<LeakScenario> leaks;
    for (double size : c.sizes) leaks.push_back(make_leak(setup, plan, size));
    std::vector<const LeakScenario*> ptrs;
    for (const auto& l : leaks) ptrs.push_back(&l);
    for (auto fold : folds)
      for (const auto& m : c.models)
        for (const auto& t : c.tasks) {
          const auto r = evaluate_fold(baseline.stream, ptrs, parse_model_kind(m), parse_task(t), fold, opt);
          for (double size : c.sizes)
            per_scenario[i].push_back(
                {plan.index, fold, m, t, size, r.auc.at(size), r.mse.at(size), r.baseline_mse, r.training_mse});
        }
  });

  ModelLossResult out;
  for (auto& v : per_scenario) out.records.insert(out.records.end(), v.begin(), v.end());
  for (const auto& m : c.models)
    for (const auto& t : c.tasks)
      for (double size : c.sizes) {
        std::vector<double> auc, mse, base;
        for (const auto& r : out.records)
          if (r.model == m && r.task == t && r.size_mm == size) {
            auc.push_back(r.auc);
            mse.push_back(r.mse);
            base.push_back(r.baseline_mse);
          }
        out.sweep.push_back({m + "/" + t, size, 0.0, summarize(auc), summarize(mse), summarize(base)});
      }
  return out;
}

// ---------------------------------------------------------------------------
// Distribution-detector study

struct DetectorOutcome {
  double statistic = 0.0;
  std::optional<double> p_value;
  std::vector<std::pair<double, double>> per_feature;
  double score = 0.0;  // larger = more drift
};

/// Continuous drift score per detector: 1 - p for the tests, the
/// cross-validated AUC for D3.
inline DetectorOutcome run_detector(const std::string& name, const Window& ref, const Window& test,
                                    const ExperimentConfig& c, std::uint64_t seed) {
  DetectorOutcome o;
  if (name == "ks") {
    auto r = ks_feature_wise(ref, test);
    o.statistic = r.statistic;
    o.p_value = r.p_value;
    o.per_feature = std::move(r.per_feature);
    o.score = 1.0 - *o.p_value;
    return o;
  }
  const Matrix a = subsample_rows(ref.to_matrix(), c.subsample);
  const Matrix b = subsample_rows(test.to_matrix(), c.subsample);
  if (name == "mmd" || name == "dawidd") {
    auto r = name == "mmd" ? mmd_test(a, b, c.n_perm, seed) : dawidd(a, b, c.n_perm, seed);
    o.statistic = r.statistic;
    o.p_value = r.p_value;
    o.score = 1.0 - *o.p_value;
    return o;
  }
  D3Options d3;
  d3.classifier = name == "d3_linear" ? D3Classifier::linear : D3Classifier::knn;
  d3.folds = c.d3_folds;
  d3.threshold = c.d3_threshold;
  d3.k = c.d3_k;
  d3.seed = seed;
  const auto r = d3_score(ref.to_matrix(), test.to_matrix(), d3);
  o.statistic = r.result.statistic;
  o.score = o.statistic;
  return o;
}

struct DistRecord {
  std::size_t scenario = 0;
  std::string detector;
  double size_mm = 0.0;  // 0 marks the leak-free negative
  std::size_t displacement_days = 0;
  std::size_t split = 0;
  DetectorOutcome outcome;
  double auc = 0.0;      // per-scenario AUC against all negatives (positives only)
};

struct DistResult {
  std::vector<DistRecord> records;
  std::vector<SweepRow> sweep;
  std::vector<std::string> warnings;
};

inline DistResult run_distribution(const ExperimentConfig& c) {
  const auto setup = make_setup(c);
  const auto plans = plan_scenarios(setup, c);
  const auto len = c.generator.days * kDay;

  std::vector<std::vector<DistRecord>> per_scenario(plans.size());
  std::vector<std::vector<std::string>> warn(plans.size());
  parallel_for(plans.size(), c.jobs, [&](std::size_t i) {
    const auto& plan = plans[i];
    const auto baseline = make_baseline(setup, plan);
    std::vector<LeakScenario> leaks;
    for (double size : c.sizes) leaks.push_back(make_leak(setup, plan, size));
    for (auto disp : c.displacements) {
      const auto split = plan.onset + disp * kDay;
      if (split < kWeek || split + kWeek > len) {
        warn[i].push_back("scenario " + std::to_string(plan.index) + ": split " + std::to_string(split) +
                          " out of bounds, skipped");
        continue;
      }
      for (std::size_t d = 0; d < c.detectors.size(); ++d) {
        const auto& det = c.detectors[d];
        const auto seed = derive_seed(derive_seed(plan.seed, det), disp);
        auto [r0, t0] = window_pair(baseline.stream, split);
        per_scenario[i].push_back({plan.index, det, 0.0, disp, split, run_detector(det, r0, t0, c, seed), 0.0});
        for (std::size_t s = 0; s < c.sizes.size(); ++s) {
          auto [r1, t1] = window_pair(leaks[s].stream, split);
          per_scenario[i].push_back(
              {plan.index, det, c.sizes[s], disp, split, run_detector(det, r1, t1, c, seed), 0.0});
        }
      }
    }
  });

  DistResult out;
  for (auto& v : per_scenario) out.records.insert(out.records.end(), v.begin(), v.end());
  for (auto& w : warn) out.warnings.insert(out.warnings.end(), w.begin(), w.end());

  for (const auto& det : c.detectors)
    for (auto disp : c.displacements) {
      std::vector<double> negatives;
      for (const auto& r : out.records)
        if (r.detector == det && r.displacement_days == disp && r.size_mm == 0.0) negatives.push_back(r.outcome.score);
      for (double size : c.sizes) {
        std::vector<double> aucs;
        for (auto& r : out.records)
          if (r.detector == det && r.displacement_days == disp && r.size_mm == size && !negatives.empty()) {
            r.auc = roc_auc(negatives, {r.outcome.score});
            aucs.push_back(r.auc);
          }
        out.sweep.push_back({det, size, static_cast<double>(disp), summarize(aucs), {}, {}});
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Localization study

struct LocalizationRecord {
  std::size_t scenario = 0;
  double size_mm = 0.0;
  std::string s_star;
  std::string v;
  double dist = 0.0;
  std::size_t n_closer = 0;
  double rel_dist = 0.0;
};

struct LocalizationRow {
  double size_mm = 0.0;
  Summary dist, rel_dist, n_closer;
};

struct LocalizationResultTable {
  std::vector<LocalizationRecord> records;
  std::vector<LocalizationRow> table;
};

inline LocalizationResultTable run_localization(const ExperimentConfig& c) {
  if (std::find(c.detectors.begin(), c.detectors.end(), "ks") == c.detectors.end())
    throw ConfigError("detectors: localization requires the ks detector");
  const auto setup = make_setup(c);
  const auto plans = plan_scenarios(setup, c);
  std::vector<std::vector<LocalizationRecord>> per_scenario(plans.size());
  parallel_for(plans.size(), c.jobs, [&](std::size_t i) {
    const auto& plan = plans[i];
    auto [split_graph, mid] = split_pipe(setup.graph, plan.edge);
    const auto from_leak = shortest_paths(split_graph, mid);
    for (double size : c.sizes) {
      const auto leak = make_leak(setup, plan, size);
      auto [ref, test] = window_pair(leak.stream, plan.onset);
      const auto pmap = pvalue_map(ref, test);
      const auto s_star = split_graph.sensors()[select_sensor(pmap)];
      const auto m = localization_metrics(split_graph, s_star, mid, &from_leak);
      per_scenario[i].push_back({plan.index, size, split_graph.node_id(s_star), split_graph.node_id(mid), m.dist,
                                 m.n_closer, m.rel_dist});
    }
  });
  LocalizationResultTable out;
  for (auto& v : per_scenario) out.records.insert(out.records.end(), v.begin(), v.end());
  for (double size : c.sizes) {
    std::vector<double> d, rd, nc;
    for (const auto& r : out.records)
      if (r.size_mm == size) {
        d.push_back(r.dist);
        rd.push_back(r.rel_dist);
        nc.push_back(static_cast<double>(r.n_closer));
      }
    out.table.push_back({size, summarize(d), summarize(rd), summarize(nc)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shape study

struct ShapeRun {
  double window_days = 0.0;
  std::size_t window_len = 0;
  std::size_t step = 0;
  std::size_t onset = 0;
  MagnitudeCurve curve;
  ShapeCurve shape;

  /// Stream index of a candidate.
  std::size_t candidate_t(const ShapeCandidate& c) const { return curve.t.at(c.index); }

  std::optional<ShapeCandidate> strongest() const {
    if (shape.candidates.empty()) return std::nullopt;
    return *std::max_element(shape.candidates.begin(), shape.candidates.end(),
                             [](const auto& a, const auto& b) { return a.magnitude < b.magnitude; });
  }
};

inline std::vector<ShapeRun> run_shape_analysis(const ExperimentConfig& c) {
  const auto setup = make_setup(c);
  const auto plans = plan_scenarios(setup, c);
  if (c.shape.scenario >= plans.size()) throw ConfigError("shape.scenario out of range");
  auto plan = plans[c.shape.scenario];
  const auto len = c.generator.days * kDay;
  if (c.shape.onset_day) {
    const double t = *c.shape.onset_day * static_cast<double>(kDay);
    if (!(t >= 0 && t < static_cast<double>(len))) throw ConfigError("shape.onset_day outside the stream");
    plan.onset = static_cast<std::size_t>(std::llround(t));
  }
  const auto leak = make_leak(setup, plan, c.shape.size_mm);

  std::vector<ShapeRun> runs(c.shape.window_days.size());
  parallel_for(runs.size(), c.jobs, [&](std::size_t k) {
    auto& run = runs[k];
    run.window_days = c.shape.window_days[k];
    run.window_len = static_cast<std::size_t>(std::llround(run.window_days * kDay));
    if (2 * run.window_len > len) throw ConfigError("shape.window_days: window longer than half the stream");
    run.step = std::max<std::size_t>(1, run.window_len / c.shape.steps_per_window);
    run.onset = plan.onset;
    const auto sub = std::max<std::size_t>(1, (run.window_len + c.shape.max_window_rows - 1) / c.shape.max_window_rows);
    run.curve = mmd_curve(leak.stream, run.window_len, run.step, sub, c.shape.clip_magnitude);
    run.shape = shape_curve(run.curve.m, c.shape.half_width);
  });
  return runs;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + p.string() + "'");
}

inline json per_feature_json(const std::vector<std::pair<double, double>>& pf) {
  json a = json::array();
  for (const auto& [s, p] : pf) a.push_back({{"statistic", s}, {"p_value", p}});
  return a;
}

}  // namespace detail

inline void write_modelloss(const ModelLossResult& r, const std::filesystem::path& dir) {
  std::string csv = "model,task,size_mm,auc_mean,auc_std,auc_median,mse_mean,mse_std,mse_median,baseline_mse_mean,n\n";
  for (const auto& row : r.sweep) {
    const auto slash = row.group.find('/');
    csv += row.group.substr(0, slash) + "," + row.group.substr(slash + 1) + "," + fmt(row.size_mm) + "," +
           fmt(row.auc.mean) + "," + fmt(row.auc.std) + "," + fmt(row.auc.median) + "," + fmt(row.mse.mean) + "," +
           fmt(row.mse.std) + "," + fmt(row.mse.median) + "," + fmt(row.baseline_mse.mean) + "," +
           std::to_string(row.auc.n) + "\n";
  }
  detail::write_text(dir / "sweep_modelloss.csv", csv);
  json rec = json::array();
  for (const auto& x : r.records)
    rec.push_back({{"scenario", x.scenario}, {"fold", x.fold}, {"model", x.model}, {"task", x.task},
                   {"size_mm", x.size_mm}, {"auc", x.auc}, {"mse", x.mse}, {"baseline_mse", x.baseline_mse},
                   {"training_mse", x.training_mse}});
  detail::write_text(dir / "records_modelloss.json", rec.dump(1) + "\n");
}

inline void write_distribution(const DistResult& r, const std::filesystem::path& dir) {
  std::string csv = "detector,size_mm,displacement_days,auc_mean,auc_std,auc_median,n\n";
  for (const auto& row : r.sweep)
    csv += row.group + "," + fmt(row.size_mm) + "," + fmt(row.axis) + "," + fmt(row.auc.mean) + "," +
           fmt(row.auc.std) + "," + fmt(row.auc.median) + "," + std::to_string(row.auc.n) + "\n";
  detail::write_text(dir / "sweep_dist.csv", csv);
  json rec = json::array();
  for (const auto& x : r.records) {
    json j{{"scenario", x.scenario},
           {"detector", x.detector},
           {"size_mm", x.size_mm},
           {"displacement_days", x.displacement_days},
           {"split", x.split},
           {"statistic", x.outcome.statistic},
           {"p_value", x.outcome.p_value ? json(*x.outcome.p_value) : json(nullptr)},
           {"score", x.outcome.score}};
    if (!x.outcome.per_feature.empty()) j["per_feature"] = detail::per_feature_json(x.outcome.per_feature);
    if (x.size_mm > 0.0) j["auc"] = x.auc;
    rec.push_back(std::move(j));
  }
  detail::write_text(dir / "records_dist.json", rec.dump(1) + "\n");
  json w = r.warnings;
  detail::write_text(dir / "warnings_dist.json", w.dump(1) + "\n");
}

inline void write_localization(const LocalizationResultTable& r, const std::filesystem::path& dir) {
  std::string csv = "size_mm,dist_mean,dist_std,rel_dist_mean,rel_dist_std,n_closer_mean,n_closer_std,n\n";
  for (const auto& row : r.table)
    csv += fmt(row.size_mm) + "," + fmt(row.dist.mean) + "," + fmt(row.dist.std) + "," + fmt(row.rel_dist.mean) + "," +
           fmt(row.rel_dist.std) + "," + fmt(row.n_closer.mean) + "," + fmt(row.n_closer.std) + "," +
           std::to_string(row.dist.n) + "\n";
  detail::write_text(dir / "sweep_localize.csv", csv);
  json rec = json::array();
  for (const auto& x : r.records)
    rec.push_back({{"scenario_id", x.scenario}, {"size_mm", x.size_mm}, {"s_star", x.s_star}, {"v", x.v},
                   {"dist_m", x.dist}, {"n_closer", x.n_closer}, {"rel_dist", x.rel_dist}});
  detail::write_text(dir / "records_localize.json", rec.dump(1) + "\n");
}

inline void write_shape(const std::vector<ShapeRun>& runs, const std::filesystem::path& dir) {
  json rec = json::array();
  for (const auto& run : runs) {
    std::set<std::size_t> cand;
    for (const auto& c : run.shape.candidates) cand.insert(c.index);
    std::string csv = "t,magnitude,shape,candidate\n";
    for (std::size_t i = 0; i < run.curve.t.size(); ++i)
      csv += std::to_string(run.curve.t[i]) + "," + fmt(run.shape.magnitude[i]) + "," + fmt(run.shape.shape[i]) + "," +
             (cand.count(i) ? "1" : "0") + "\n";
    detail::write_text(dir / ("shape_" + fmt(run.window_days) + "d.csv"), csv);
    json cj = json::array();
    for (const auto& c : run.shape.candidates) cj.push_back({{"t", run.candidate_t(c)}, {"magnitude", c.magnitude}});
    rec.push_back({{"window_days", run.window_days}, {"window_len", run.window_len}, {"step", run.step},
                   {"onset", run.onset}, {"candidates", cj}});
  }
  detail::write_text(dir / "records_shape.json", rec.dump(1) + "\n");
}

/// Recomputes every sweep aggregate from the per-record data.
inline void check_consistency(const ModelLossResult& r) {
  for (const auto& row : r.sweep) {
    const auto slash = row.group.find('/');
    std::vector<double> auc;
    for (const auto& x : r.records)
      if (x.model == row.group.substr(0, slash) && x.task == row.group.substr(slash + 1) && x.size_mm == row.size_mm)
        auc.push_back(x.auc);
    const auto s = summarize(auc);
    if (s.n != row.auc.n || std::abs(s.mean - row.auc.mean) > 1e-12 || std::abs(s.median - row.auc.median) > 1e-12)
      throw Error("model-loss aggregates disagree with records");
  }
}

inline void check_consistency(const DistResult& r) {
  for (const auto& row : r.sweep) {
    std::vector<double> auc;
    for (const auto& x : r.records)
      if (x.detector == row.group && x.size_mm == row.size_mm && static_cast<double>(x.displacement_days) == row.axis)
        auc.push_back(x.auc);
    const auto s = summarize(auc);
    if (s.n != row.auc.n || std::abs(s.mean - row.auc.mean) > 1e-12 || std::abs(s.median - row.auc.median) > 1e-12)
      throw Error("distribution aggregates disagree with records");
  }
}

inline void check_consistency(const LocalizationResultTable& r) {
  for (const auto& row : r.table) {
    std::vector<double> rd;
    for (const auto& x : r.records)
      if (x.size_mm == row.size_mm) rd.push_back(x.rel_dist);
    const auto s = summarize(rd);
    if (s.n != row.rel_dist.n || std::abs(s.mean - row.rel_dist.mean) > 1e-12)
      throw Error("localization aggregates disagree with records");
  }
}

/// Writes one CSV per baseline and leak stream plus scenario metadata JSON.
inline void write_scenarios(const ExperimentConfig& c, const std::filesystem::path& dir) {
  const auto setup = make_setup(c);
  const auto plans = plan_scenarios(setup, c);
  std::vector<json> meta(plans.size());
  parallel_for(plans.size(), c.jobs, [&](std::size_t i) {
    const auto& plan = plans[i];
    const auto base_name = "baseline_" + std::to_string(plan.index) + ".csv";
    write_csv(make_baseline(setup, plan).stream, (dir / base_name).string());
    json list = json::array();
    for (double size : c.sizes) {
      const auto leak = make_leak(setup, plan, size);
      const auto stem = "scenario_" + std::to_string(plan.index) + "_" + fmt(size) + "mm";
      write_csv(leak.stream, (dir / (stem + ".csv")).string());
      auto m = scenario_metadata(leak, base_name);
      detail::write_text(dir / (stem + ".json"), m.dump(1) + "\n");
      list.push_back(m);
    }
    meta[i] = std::move(list);
  });
  json index = json::array();
  for (auto& m : meta)
    for (auto& x : m) index.push_back(x);
  detail::write_text(dir / "scenarios.json", index.dump(1) + "\n");
}

inline void write_manifest(const ExperimentConfig& c, const std::string& command, double wall_seconds,
                           const std::filesystem::path& dir) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(c);
  json m{{"tool", "leakdrift"},
         {"version", kToolVersion},
         {"command", command},
         {"config_hash", hash.str()},
         {"master_seed", c.master_seed},
         {"config", config_to_json(c)},
         {"wall_time_s", wall_seconds}};
  detail::write_text(dir / "manifest.json", m.dump(1) + "\n");
}

}  // namespace leakdrift
