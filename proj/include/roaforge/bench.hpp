#pragma once

#include <string>

#include "roaforge/synthesis.hpp"

namespace roaforge {

inline constexpr double kGravity = 9.81;

struct PendulumParams {
  double mass = 0.15;     // kg
  double length = 0.5;    // m
  double friction = 0.05; // N m s
  double u_max = 1.0;     // N m
};

struct BenchmarkSpec {
  std::string name;
  NonlinearSystem plant;
  CostWeights cost;
  Vec gain_lower;  // row-major K
  Vec gain_upper;
  Vec roa_lower;
  Vec roa_upper;
  int default_grid_points = 250;
  std::optional<PendulumParams> pendulum;
};

// phi'' = (g/l) sin(phi) - (mu/I) phi' + u/I, I = m l^2, phi measured from
// upright. Gain bounds and name are filled in by pendulum_a / pendulum_b.
BenchmarkSpec pendulum(const PendulumParams& p);
BenchmarkSpec pendulum_a(double mass = 0.15);
BenchmarkSpec pendulum_b();

// Kinematic bicycle about straight-line driving, states (y, theta), input
// steering angle delta:
//   y' = v0 sin(alpha(delta) + theta), theta' = (v0/b) tan(delta),
//   alpha(delta) = atan((a/b) tan(delta)).
struct SteeringParams {
  double speed = 5.0;      // v0, m/s
  double wheelbase = 2.0;  // b, m
  double cg_offset = 1.0;  // a, rear axle to centre of mass, m
  double u_max = 0.5;      // rad
};
BenchmarkSpec vehicle_steering(const SteeringParams& p = {});

// Longitudinal pitch dynamics at steady cruise, states (angle of attack,
// pitch rate, pitch angle), elevator input. Linear about trim.
struct AircraftParams {
  double a11 = -0.313, a12 = 56.7, a21 = -0.0139, a22 = -0.426, a32 = 56.7;
  double b1 = 0.232, b2 = 0.0203;
  double u_max = 0.4363;  // rad, 25 deg
};
BenchmarkSpec aircraft_pitch(const AircraftParams& p = {});

// pendulum_a | pendulum_b | vehicle_steering | aircraft_pitch
BenchmarkSpec benchmark_by_name(const std::string& name);
const std::vector<std::string>& benchmark_names();

StateGrid benchmark_grid(const BenchmarkSpec& spec, int points_per_dim);

PlantContext make_context(const BenchmarkSpec& spec, double tau, int points_per_dim,
                          CandidateKind candidate = CandidateKind::Quadratic, const NeuralOptions& neural = {},
                          double exemption_factor = 10.0);

struct ExperimentSettings {
  double tau = 0.01;
  int grid_points = 250;
  CandidateKind candidate = CandidateKind::Quadratic;
  NeuralOptions neural;
  double exemption_factor = 10.0;
  int max_iter = 15000;
  int stall_window = 100;
  double w1 = 1.0;
  double w2 = 1.0;
  int run_count = 5;
  std::uint64_t seed = 0;
  std::optional<ParameterPair> pair;  // empty: chosen per run seed
};

struct RunRecord {
  std::uint64_t seed = 0;
  SynthesisResult result;
};

PsoParams make_pso_params(const BenchmarkSpec& spec, const ExperimentSettings& settings, int particles,
                          std::uint64_t run_seed);

// One synthesis with explicit weights on a prepared context.
RunRecord run_synthesis(const BenchmarkSpec& spec, const PlantContext& ctx, const ExperimentSettings& settings,
                        int particles, double w1, double w2, std::uint64_t run_seed);

// Seed of run r of a sweep. Runs with the same r share a seed across
// settings.
inline std::uint64_t run_seed(const ExperimentSettings& s, int r) { return derive_seed(s.seed, r); }

struct CompareRow {
  int particles = 0;
  std::string controller;  // K_LQR | K_O | K_max
  double pct_cost_increase = 0.0;
  double pct_roa_increase = 0.0;
  std::vector<RunRecord> runs;
};

struct CompareTable {
  double lqr_cost = 0.0;
  double lqr_roa = 0.0;
  std::vector<CompareRow> rows;
};

// Per particle count: K_max (w1 = 0, w2 = 1) and K_O (settings' weights),
// percentages against K_LQR averaged over run_count seeds.
CompareTable experiment_compare(const BenchmarkSpec& spec, const ExperimentSettings& settings,
                                const std::vector<int>& particle_counts);

struct MassRow {
  double mass = 0.0;
  double roa_cells = 0.0;  // mean over runs
  std::vector<RunRecord> runs;
};

// K_O per mass on the pendulum family of `base`, length and limits fixed.
std::vector<MassRow> experiment_mass_sweep(const BenchmarkSpec& base, const ExperimentSettings& settings,
                                           const std::vector<double>& masses, int particles);

struct GridRow {
  int points_per_dim = 0;
  std::size_t roa_cells = 0;
  double seconds = 0.0;
};

// Certification of the fixed K_LQR at several resolutions, wall-clock timed.
std::vector<GridRow> experiment_grid_sweep(const BenchmarkSpec& spec, const ExperimentSettings& settings,
                                           const std::vector<int>& points_per_dim);

struct SimulationRun {
  std::string controller;
  double start_angle = 0.0;
  Trajectory trajectory;
  bool stabilized = false;  // not diverged and |x_0(T)| < kStabilizedAngle
};

inline constexpr double kStabilizedAngle = 1e-2;

// Nonlinear sampled-data runs from x0 = (angle, 0, ...), saturated input.
std::vector<SimulationRun> experiment_simulate(const BenchmarkSpec& spec, double tau,
                                               const std::vector<std::pair<std::string, Controller>>& controllers,
                                               const std::vector<double>& angles, double duration);

// Smallest angle on an ascending scan of [lo, hi] where `good` stabilizes
// and `baseline` does not.
std::optional<double> find_recovery_angle(const BenchmarkSpec& spec, double tau, const Controller& good,
                                          const Controller& baseline, double lo, double hi, int samples,
                                          double duration);

}  // namespace roaforge
