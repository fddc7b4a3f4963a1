// d2dsim command-line runner.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "d2dsim/connectivity.hpp"
#include "d2dsim/event_engine.hpp"
#include "d2dsim/experiment.hpp"
#include "d2dsim/graph_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw d2d::ConfigError({{"<file>", "cannot read " + path.string(), 0}});
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parses and validates; prints every problem and returns nothing on failure.
std::optional<d2d::ExperimentConfig> checked_config(const fs::path& path) {
  const std::string file = path.string();
  try {
    const std::string text = slurp(path);
    d2d::ExperimentConfig cfg = d2d::parse_config(text);
    const auto violations = d2d::validate_config(cfg, &text);
    for (const auto& v : violations) std::cerr << d2d::format_violation(file, v) << '\n';
    if (!violations.empty()) return std::nullopt;
    return cfg;
  } catch (const d2d::ConfigError& ex) {
    for (const auto& v : ex.violations()) std::cerr << d2d::format_violation(file, v) << '\n';
    return std::nullopt;
  }
}

int cmd_validate(const fs::path& config) {
  if (!checked_config(config)) return kConfigError;
  std::cout << config.string() << ": ok\n";
  return kOk;
}

int cmd_run(const fs::path& config, std::uint64_t seed_offset, unsigned jobs, const fs::path& out_dir) {
  auto cfg = checked_config(config);
  if (!cfg) return kConfigError;
  fs::create_directories(out_dir);
  d2d::RunOptions opts;
  opts.seed_offset = seed_offset;
  opts.jobs = jobs;
  opts.out_dir = out_dir;
  const auto rows = d2d::run_experiment(*cfg, opts);
  const fs::path csv = out_dir / cfg->outputs.csv_path;
  if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
  std::ofstream out(csv, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + csv.string());
  d2d::write_sweep_csv(out, rows);
  std::cerr << fmt::format("wrote {} rows to {}\n", rows.size(), csv.string());
  return kOk;
}

int cmd_gen_streets(const fs::path& config, std::uint64_t seed_offset, const fs::path& out_path) {
  auto cfg = checked_config(config);
  if (!cfg) return kConfigError;
  const d2d::StreetGraph g = d2d::generate_streets(*cfg, cfg->seeds.front() + seed_offset);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());
  out << d2d::graph_to_json(g).dump(1) << '\n';
  std::cerr << fmt::format("{} crossings, {} streets, {:.1f} m total\n", g.vertex_count(),
                           g.street_count(), d2d::total_street_length(g));
  return kOk;
}

int cmd_thin(double a, double b, const fs::path& graph_path) {
  d2d::StreetGraph g(1.0);
  try {
    g = d2d::graph_from_json(nlohmann::json::parse(slurp(graph_path)));
  } catch (const nlohmann::json::parse_error& ex) {
    std::cerr << graph_path.string() << ": " << ex.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& ex) {
    std::cerr << graph_path.string() << ": " << ex.what() << '\n';
    return kConfigError;
  }
  const d2d::AuxGraph aux = d2d::long_edge_percolation_graph(g, a, b);
  const d2d::AuxSummary summary = d2d::aux_largest_component(aux);
  std::cout << "component,vertices,long_streets,long_length_m,fraction,wraps\n";
  for (std::size_t i = 0; i < summary.components.size(); ++i) {
    const auto& c = summary.components[i];
    std::cout << i << ',' << c.vertices << ',' << c.long_streets << ',' << d2d::format_double(c.long_length)
              << ',' << d2d::format_double(c.fraction) << ',' << (c.wraps ? 1 : 0) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-driven D2D connectivity simulator on Poisson-Voronoi street systems"};
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed_offset = 0;
  unsigned jobs = 1;
  std::string out_dir = ".";
  auto* run = app.add_subcommand("run", "Run an experiment and write its CSV");
  run->add_option("config", config, "Experiment configuration (JSON)")->required();
  run->add_option("--seed-offset", seed_offset, "Added to every configured seed");
  run->add_option("--jobs", jobs, "Seeds run concurrently")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory");

  auto* validate = app.add_subcommand("validate", "Check a configuration");
  validate->add_option("config", config, "Experiment configuration (JSON)")->required();

  std::string graph_out;
  auto* gen = app.add_subcommand("gen-streets", "Generate the street system of the first seed");
  gen->add_option("config", config, "Experiment configuration (JSON)")->required();
  gen->add_option("--out", graph_out, "Graph JSON to write")->required();
  gen->add_option("--seed-offset", seed_offset, "Added to the seed");

  double a = 0.0, b = 0.0;
  std::string graph_in;
  auto* thin = app.add_subcommand("thin", "Component census of the long-street graph S^{a,b}");
  thin->add_option("--a", a, "Minimum street length (m)")->required()->check(CLI::NonNegativeNumber);
  thin->add_option("--b", b, "Maximum link distance (m)")->required()->check(CLI::NonNegativeNumber);
  thin->add_option("graph", graph_in, "Graph JSON from gen-streets")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config, seed_offset, jobs, out_dir);
    if (*validate) return cmd_validate(config);
    if (*gen) return cmd_gen_streets(config, seed_offset, graph_out);
    if (*thin) return cmd_thin(a, b, graph_in);
  } catch (const d2d::ConfigError& ex) {
    std::cerr << ex.what() << '\n';
    return kConfigError;
  } catch (const std::exception& ex) {
    std::cerr << "runtime failure: " << ex.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
