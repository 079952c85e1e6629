#pragma once

#include <filesystem>
#include <json.hpp>

#include "roaforge/bench.hpp"

namespace roaforge {

enum class StepKind { Linear, Nonlinear };

// Fully resolved run configuration. Every field has a default except the
// benchmark name; absent keys are recorded in defaults_applied.
struct RunConfig {
  std::string benchmark;
  double tau = 0.01;
  int grid_points = 250;
  CandidateKind candidate = CandidateKind::Quadratic;
  StepKind step_map = StepKind::Linear;
  double exemption_factor = 10.0;

  int num_particles = 20;
  int max_iter = 15000;
  int stall_window = 100;
  std::string parameter_pair = "auto";  // auto | a (0.7, 1.6) | b (0.33, 2.35)
  std::uint64_t seed = 0;
  double w1 = 1.0;
  double w2 = 1.0;
  int run_count = 5;
  std::string output_dir = "out";

  std::vector<int> particle_counts{10, 15, 20, 25, 30};
  std::vector<double> masses{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  std::vector<int> grid_sweep_points{51, 101, 151, 201};
  std::vector<double> angles;  // default {pi/6, 5 pi/12}
  double sim_duration = 50.0;
  std::vector<double> gain;    // roa: row-major K, empty = K_LQR

  // Plant overrides; unset keeps the benchmark default.
  std::optional<double> mass, length, friction, u_max;
  std::vector<double> roa_lower, roa_upper;
  std::vector<double> gain_lower, gain_upper;

  NeuralOptions neural;

  std::vector<std::string> defaults_applied;

  RunConfig();

  // Canonical echo; parse_config(to_json()) reproduces it.
  nlohmann::ordered_json to_json() const;
};

// Strict schema: unknown keys, wrong types and invariant violations raise
// ConfigError naming the field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

BenchmarkSpec build_benchmark(const RunConfig& cfg);
ExperimentSettings build_settings(const RunConfig& cfg);

}  // namespace roaforge
