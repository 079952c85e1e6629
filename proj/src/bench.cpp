#include "roaforge/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numbers>

namespace roaforge {

namespace {

Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

double percent_increase(double value, double base) { return 100.0 * (value - base) / base; }

}  // namespace

BenchmarkSpec pendulum(const PendulumParams& p) {
  if (!(p.mass > 0.0) || !(p.length > 0.0)) throw ConfigError("pendulum mass and length must be > 0");
  if (!(p.friction >= 0.0)) throw ConfigError("pendulum friction must be >= 0");
  const double inertia = p.mass * p.length * p.length;
  const double g_l = kGravity / p.length;
  const double mu_i = p.friction / inertia;

  BenchmarkSpec spec;
  spec.name = "pendulum";
  spec.pendulum = p;
  auto& sys = spec.plant;
  sys.state_dim = 2;
  sys.input_dim = 1;
  sys.vector_field = [=](const Vec& x, const Vec& u) {
    return vec({x(1), g_l * std::sin(x(0)) - mu_i * x(1) + u(0) / inertia});
  };
  sys.jacobian = [=](const Vec& x, const Vec&) {
    Mat A(2, 2), B(2, 1);
    A << 0.0, 1.0, g_l * std::cos(x(0)), -mu_i;
    B << 0.0, 1.0 / inertia;
    return std::make_pair(A, B);
  };
  sys.equilibrium_state = Vec::Zero(2);
  sys.equilibrium_input = Vec::Zero(1);
  sys.input_limit = p.u_max;
  sys.validate();

  spec.cost.Q = Mat::Zero(2, 2);
  spec.cost.Q.diagonal() << 10.0, 1.0;
  spec.cost.R = Mat::Constant(1, 1, 10.0);
  const double pi = std::numbers::pi;
  spec.roa_lower = vec({-2.0 * pi / 3.0, -8.0});
  spec.roa_upper = vec({2.0 * pi / 3.0, 8.0});
  return spec;
}

BenchmarkSpec pendulum_a(double mass) {
  PendulumParams p;
  p.mass = mass;
  BenchmarkSpec spec = pendulum(p);
  spec.name = "pendulum_a";
  spec.gain_lower = vec({-10.0, -5.0});
  spec.gain_upper = vec({10.0, 5.0});
  return spec;
}

BenchmarkSpec pendulum_b() {
  PendulumParams p;
  p.mass = 0.5;
  p.length = 1.0;
  p.u_max = 2.5;
  BenchmarkSpec spec = pendulum(p);
  spec.name = "pendulum_b";
  spec.gain_lower = vec({5.0, -2.0});
  spec.gain_upper = vec({20.0, 12.0});
  return spec;
}

BenchmarkSpec vehicle_steering(const SteeringParams& p) {
  if (!(p.speed > 0.0) || !(p.wheelbase > 0.0) || !(p.cg_offset >= 0.0))
    throw ConfigError("steering speed and wheelbase must be > 0, cg offset >= 0");
  const double v0 = p.speed;
  const double b = p.wheelbase;
  const double a = p.cg_offset;

  BenchmarkSpec spec;
  spec.name = "vehicle_steering";
  auto& sys = spec.plant;
  sys.state_dim = 2;
  sys.input_dim = 1;
  sys.vector_field = [=](const Vec& x, const Vec& u) {
    const double alpha = std::atan(a * std::tan(u(0)) / b);
    return vec({v0 * std::sin(alpha + x(1)), v0 / b * std::tan(u(0))});
  };
  sys.jacobian = [=](const Vec& x, const Vec& u) {
    const double t = std::tan(u(0));
    const double sec2 = 1.0 + t * t;
    const double alpha = std::atan(a * t / b);
    const double dalpha = (a / b) * sec2 / (1.0 + (a * t / b) * (a * t / b));
    const double c = v0 * std::cos(alpha + x(1));
    Mat A(2, 2), B(2, 1);
    A << 0.0, c, 0.0, 0.0;
    B << c * dalpha, v0 / b * sec2;
    return std::make_pair(A, B);
  };
  sys.equilibrium_state = Vec::Zero(2);
  sys.equilibrium_input = Vec::Zero(1);
  sys.input_limit = p.u_max;
  sys.validate();

  spec.cost.Q = Mat::Identity(2, 2);
  spec.cost.R = Mat::Identity(1, 1);
  spec.gain_lower = vec({0.0, 0.0});
  spec.gain_upper = vec({17.0, 11.0});
  spec.roa_lower = vec({-3.0, -1.0});
  spec.roa_upper = vec({3.0, 1.0});
  return spec;
}

BenchmarkSpec aircraft_pitch(const AircraftParams& p) {
  Mat A(3, 3), B(3, 1);
  A << p.a11, p.a12, 0.0, p.a21, p.a22, 0.0, 0.0, p.a32, 0.0;
  B << p.b1, p.b2, 0.0;

  BenchmarkSpec spec;
  spec.name = "aircraft_pitch";
  auto& sys = spec.plant;
  sys.state_dim = 3;
  sys.input_dim = 1;
  sys.vector_field = [A, B](const Vec& x, const Vec& u) -> Vec { return A * x + B * u; };
  sys.jacobian = [A, B](const Vec&, const Vec&) { return std::make_pair(A, B); };
  sys.equilibrium_state = Vec::Zero(3);
  sys.equilibrium_input = Vec::Zero(1);
  sys.input_limit = p.u_max;
  sys.validate();

  spec.cost.Q = Mat::Identity(3, 3);
  spec.cost.R = Mat::Identity(1, 1);
  spec.gain_lower = vec({-1.0, 10.0, 0.0});
  spec.gain_upper = vec({5.0, 100.0, 7.0});
  spec.roa_lower = Vec::Constant(3, -0.5);
  spec.roa_upper = Vec::Constant(3, 0.5);
  return spec;
}

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"pendulum_a", "pendulum_b", "vehicle_steering", "aircraft_pitch"};
  return names;
}

BenchmarkSpec benchmark_by_name(const std::string& name) {
  if (name == "pendulum_a") return pendulum_a();
  if (name == "pendulum_b") return pendulum_b();
  if (name == "vehicle_steering") return vehicle_steering();
  if (name == "aircraft_pitch") return aircraft_pitch();
  throw ConfigError("unknown benchmark '" + name + "'");
}

StateGrid benchmark_grid(const BenchmarkSpec& spec, int points_per_dim) {
  return StateGrid(spec.roa_lower, spec.roa_upper, std::vector<int>(spec.plant.state_dim, points_per_dim));
}

PlantContext make_context(const BenchmarkSpec& spec, double tau, int points_per_dim, CandidateKind candidate,
                          const NeuralOptions& neural, double exemption_factor) {
  PlantContext ctx{discretize(linearize(spec.plant), tau), spec.cost, benchmark_grid(spec, points_per_dim),
                   spec.plant.input_limit, exemption_factor, candidate, neural};
  ctx.weights.validate();
  return ctx;
}

PsoParams make_pso_params(const BenchmarkSpec& spec, const ExperimentSettings& settings, int particles,
                          std::uint64_t seed) {
  PsoParams params;
  const ParameterPair pair = settings.pair ? *settings.pair : select_parameter_pair(seed);
  params.omega = pair.omega;
  params.eta = pair.eta;
  params.num_particles = particles;
  params.max_iter = settings.max_iter;
  params.stall_window = settings.stall_window;
  params.lower = spec.gain_lower;
  params.upper = spec.gain_upper;
  params.seed = seed;
  return params;
}

RunRecord run_synthesis(const BenchmarkSpec& spec, const PlantContext& ctx, const ExperimentSettings& settings,
                        int particles, double w1, double w2, std::uint64_t seed) {
  const FitnessSpec fitness = make_fitness_spec(ctx, w1, w2);
  return {seed, synthesize(ctx, make_pso_params(spec, settings, particles, seed), fitness)};
}

CompareTable experiment_compare(const BenchmarkSpec& spec, const ExperimentSettings& settings,
                                const std::vector<int>& particle_counts) {
  const PlantContext ctx =
      make_context(spec, settings.tau, settings.grid_points, settings.candidate, settings.neural,
                   settings.exemption_factor);
  const ControllerRoa base = controller_roa(ctx, lqr_gain(ctx.dsys, ctx.weights));
  CompareTable table;
  table.lqr_cost = base.cost.metric;
  table.lqr_roa = static_cast<double>(base.roa.size_cells);

  for (int particles : particle_counts) {
    table.rows.push_back({particles, "K_LQR", 0.0, 0.0, {}});
    const std::pair<const char*, std::pair<double, double>> roles[] = {
        {"K_O", {settings.w1, settings.w2}}, {"K_max", {0.0, 1.0}}};
    for (const auto& [label, weights] : roles) {
      CompareRow row{particles, label, 0.0, 0.0, {}};
      for (int r = 0; r < settings.run_count; ++r) {
        RunRecord rec = run_synthesis(spec, ctx, settings, particles, weights.first, weights.second,
                                      run_seed(settings, r));
        const double roa = weights.second == 0.0
                               ? static_cast<double>(controller_roa(ctx, rec.result.gbest).roa.size_cells)
                               : rec.result.roa;
        row.pct_cost_increase += percent_increase(rec.result.cost, table.lqr_cost);
        row.pct_roa_increase += percent_increase(roa, std::max(1.0, table.lqr_roa));
        row.runs.push_back(std::move(rec));
      }
      row.pct_cost_increase /= settings.run_count;
      row.pct_roa_increase /= settings.run_count;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::vector<MassRow> experiment_mass_sweep(const BenchmarkSpec& base, const ExperimentSettings& settings,
                                           const std::vector<double>& masses, int particles) {
  if (!base.pendulum) throw ConfigError("mass sweep needs a pendulum benchmark");
  std::vector<MassRow> rows;
  for (double mass : masses) {
    if (!(mass >= 0.1 && mass <= 0.7)) throw ConfigError("masses must lie in [0.1, 0.7] kg");
    PendulumParams p = *base.pendulum;
    p.mass = mass;
    BenchmarkSpec spec = pendulum(p);
    spec.name = base.name;
    spec.gain_lower = base.gain_lower;
    spec.gain_upper = base.gain_upper;
    spec.roa_lower = base.roa_lower;
    spec.roa_upper = base.roa_upper;
    const PlantContext ctx = make_context(spec, settings.tau, settings.grid_points, settings.candidate,
                                          settings.neural, settings.exemption_factor);
    MassRow row{mass, 0.0, {}};
    for (int r = 0; r < settings.run_count; ++r) {
      RunRecord rec = run_synthesis(spec, ctx, settings, particles, settings.w1, settings.w2, run_seed(settings, r));
      row.roa_cells += rec.result.roa;
      row.runs.push_back(std::move(rec));
    }
    row.roa_cells /= settings.run_count;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<GridRow> experiment_grid_sweep(const BenchmarkSpec& spec, const ExperimentSettings& settings,
                                           const std::vector<int>& points_per_dim) {
  std::vector<GridRow> rows;
  for (int points : points_per_dim) {
    const PlantContext ctx = make_context(spec, settings.tau, points, settings.candidate, settings.neural,
                                          settings.exemption_factor);
    const Controller k_lqr = lqr_gain(ctx.dsys, ctx.weights);
    // Median of three timings.
    std::array<double, 3> times{};
    std::size_t cells = 0;
    for (double& t : times) {
      const auto start = std::chrono::steady_clock::now();
      cells = controller_roa(ctx, k_lqr).roa.size_cells;
      t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    std::sort(times.begin(), times.end());
    rows.push_back({points, cells, times[1]});
  }
  return rows;
}

std::vector<SimulationRun> experiment_simulate(const BenchmarkSpec& spec, double tau,
                                               const std::vector<std::pair<std::string, Controller>>& controllers,
                                               const std::vector<double>& angles, double duration) {
  if (!(tau > 0.0) || !(duration > 0.0)) throw ConfigError("tau and duration must be > 0");
  const int steps = static_cast<int>(std::llround(duration / tau));
  std::vector<SimulationRun> runs;
  for (double angle : angles) {
    for (const auto& [label, ctrl] : controllers) {
      Vec x0 = spec.plant.equilibrium_state;
      x0(0) += angle;
      SimulationRun run{label, angle, simulate(spec.plant, ctrl, x0, tau, steps), false};
      const Vec& last = run.trajectory.states.back();
      run.stabilized = !run.trajectory.diverged &&
                       std::abs(last(0) - spec.plant.equilibrium_state(0)) < kStabilizedAngle;
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

std::optional<double> find_recovery_angle(const BenchmarkSpec& spec, double tau, const Controller& good,
                                          const Controller& baseline, double lo, double hi, int samples,
                                          double duration) {
  for (int i = 0; i < samples; ++i) {
    const double angle = samples == 1 ? lo : lo + (hi - lo) * i / (samples - 1);
    const auto runs = experiment_simulate(spec, tau, {{"good", good}, {"baseline", baseline}}, {angle}, duration);
    if (runs[0].stabilized && !runs[1].stabilized) return angle;
  }
  return std::nullopt;
}

}  // namespace roaforge
