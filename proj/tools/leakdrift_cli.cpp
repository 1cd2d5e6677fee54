#include "leakdrift/leakdrift.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace leakdrift;
namespace fs = std::filesystem;

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    if constexpr (std::is_floating_point_v<T>) {
      auto v = detail::parse_double(item);
      if (!v) throw ConfigError(std::string(flag) + ": '" + item + "' is not a number");
      out.push_back(*v);
    } else {
      auto v = detail::parse_int(item);
      if (!v || *v < 0) throw ConfigError(std::string(flag) + ": '" + item + "' is not a non-negative integer");
      out.push_back(static_cast<T>(*v));
    }
  }
  if (out.empty()) throw ConfigError(std::string(flag) + ": empty list");
  return out;
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
  std::optional<std::string> sizes;
  std::optional<std::string> displacements;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig c;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ConfigError("cannot open config '" + o.config + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    c = config_from_json(j);
  }
  if (o.seed) c.master_seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.sizes) c.sizes = parse_list<double>(*o.sizes, "--sizes");
  if (o.displacements) c.displacements = parse_list<std::size_t>(*o.displacements, "--displacements");
  validate(c);
  return c;
}

void run(const std::string& command, const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = c.out;
  fs::create_directories(dir);
  const bool all = command == "all";
  if (command == "generate") write_scenarios(c, dir);
  if (all || command == "modelloss") {
    auto r = run_modelloss(c);
    check_consistency(r);
    write_modelloss(r, dir);
  }
  if (all || command == "dist") {
    auto r = run_distribution(c);
    check_consistency(r);
    write_distribution(r, dir);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  }
  if (all || command == "localize") {
    auto r = run_localization(c);
    check_consistency(r);
    write_localization(r, dir);
  }
  if (all || command == "shape") write_shape(run_shape_analysis(c), dir);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(c, command, wall, dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leak detection as concept drift: scenario generator and experiment runner"};
  app.require_subcommand(1, 1);
  Options o;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"generate", "write baseline and leak scenario CSVs with metadata"},
      {"modelloss", "model-loss detection sweep"},
      {"dist", "distribution-detector sweep over sizes and displacements"},
      {"localize", "KS-based leak localization table"},
      {"shape", "ShapeDD window-length study"},
      {"all", "modelloss, dist, localize and shape"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "experiment config JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--sizes", o.sizes, "comma-separated leak diameters in mm");
    sub->add_option("--displacements", o.displacements, "comma-separated split displacements in days");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  const auto command = app.get_subcommands().front()->get_name();
  ExperimentConfig cfg;
  try {
    cfg = load(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  try {
    run(command, cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
