#include "roaforge/run.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

namespace roaforge {

namespace {

using ojson = nlohmann::ordered_json;

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ojson gain_json(const Controller& c) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < c.K.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < c.K.cols(); ++j) row.push_back(c.K(i, j));
    rows.push_back(row);
  }
  return rows;
}

ojson pair_json(const ParameterPair& p) { return {{"omega", p.omega}, {"eta", p.eta}}; }

ojson synthesis_json(const RunRecord& rec) {
  const SynthesisResult& r = rec.result;
  ojson j;
  j["seed"] = rec.seed;
  j["parameter_pair"] = pair_json(r.pair);
  j["gain"] = gain_json(r.gbest);
  j["fitness"] = r.gbest_fitness;
  j["cost"] = r.cost;
  j["roa_cells"] = r.roa;
  j["iterations_run"] = r.iterations_run;
  j["terminated_by"] = to_string(r.terminated_by);
  j["init_attempts"] = r.init_attempts;
  return j;
}

ojson history_json(const std::vector<IterationRecord>& history) {
  ojson fitness = ojson::array(), cost = ojson::array(), roa = ojson::array();
  for (const auto& h : history) {
    fitness.push_back(h.fitness);
    cost.push_back(h.cost_term);
    roa.push_back(h.roa_term);
  }
  return {{"gbest_fitness", fitness}, {"cost_term", cost}, {"roa_term", roa}};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// All outputs are buffered here and flushed in one go at the end.
struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;
  std::ostringstream log;

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

void write_all(const std::filesystem::path& dir, const Artifacts& out) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : out.files) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name).string());
    f << content;
  }
  std::ofstream log(dir / "run.log", std::ios::binary);
  log << out.log.str();
}

ojson cmd_synth(const RunConfig& cfg, const BenchmarkSpec& spec, const ExperimentSettings& s, Artifacts& out) {
  const PlantContext ctx = make_context(spec, s.tau, s.grid_points, s.candidate, s.neural, s.exemption_factor);
  const FitnessSpec fitness = make_fitness_spec(ctx, s.w1, s.w2);
  const std::uint64_t seed = run_seed(s, 0);
  out.log << "baseline K_LQR: cost " << num(fitness.baseline_cost) << ", roa cells " << num(fitness.baseline_roa)
          << "\n";
  const RunRecord rec{seed, synthesize(ctx, make_pso_params(spec, s, cfg.num_particles, seed), fitness)};
  out.log << "synthesis: " << rec.result.iterations_run << " iterations, terminated by "
          << to_string(rec.result.terminated_by) << ", fitness " << num(rec.result.gbest_fitness) << "\n";

  std::string csv = "iteration,gbest_fitness,cost_term,roa_term\n";
  for (std::size_t i = 0; i < rec.result.history.size(); ++i) {
    const auto& h = rec.result.history[i];
    csv += std::to_string(i + 1) + "," + num(h.fitness) + "," + num(h.cost_term) + "," + num(h.roa_term) + "\n";
  }
  out.add("history.csv", std::move(csv));

  ojson j;
  j["k_lqr"] = {{"gain", gain_json(lqr_gain(ctx.dsys, ctx.weights))},
                {"cost", fitness.baseline_cost},
                {"roa_cells", fitness.baseline_roa}};
  j["synthesis"] = synthesis_json(rec);
  j["history"] = history_json(rec.result.history);
  return j;
}

ojson cmd_compare(const RunConfig& cfg, const BenchmarkSpec& spec, const ExperimentSettings& s, Artifacts& out) {
  const CompareTable table = experiment_compare(spec, s, cfg.particle_counts);
  std::string csv = "particles,controller,pct_cost_increase,pct_roa_increase\n";
  ojson rows = ojson::array();
  for (const auto& row : table.rows) {
    csv += std::to_string(row.particles) + "," + row.controller + "," + num(row.pct_cost_increase) + "," +
           num(row.pct_roa_increase) + "\n";
    ojson runs = ojson::array();
    for (const auto& rec : row.runs) runs.push_back(synthesis_json(rec));
    rows.push_back({{"particles", row.particles},
                    {"controller", row.controller},
                    {"pct_cost_increase", row.pct_cost_increase},
                    {"pct_roa_increase", row.pct_roa_increase},
                    {"runs", runs}});
    out.log << "particles " << row.particles << " " << row.controller << ": cost " << num(row.pct_cost_increase)
            << "%, roa " << num(row.pct_roa_increase) << "%\n";
  }
  out.add("compare.csv", std::move(csv));
  return {{"k_lqr", {{"cost", table.lqr_cost}, {"roa_cells", table.lqr_roa}}}, {"rows", rows}};
}

ojson cmd_mass_sweep(const RunConfig& cfg, const BenchmarkSpec& spec, const ExperimentSettings& s, Artifacts& out) {
  const auto rows = experiment_mass_sweep(spec, s, cfg.masses, cfg.num_particles);
  std::string csv = "mass_kg,roa_cells\n";
  ojson j = ojson::array();
  for (const auto& row : rows) {
    csv += num(row.mass) + "," + num(row.roa_cells) + "\n";
    ojson runs = ojson::array();
    for (const auto& rec : row.runs) runs.push_back(synthesis_json(rec));
    j.push_back({{"mass_kg", row.mass}, {"roa_cells", row.roa_cells}, {"runs", runs}});
    out.log << "mass " << num(row.mass) << " kg: roa " << num(row.roa_cells) << " cells\n";
  }
  out.add("mass_sweep.csv", std::move(csv));
  return {{"rows", j}};
}

ojson cmd_grid_sweep(const RunConfig& cfg, const BenchmarkSpec& spec, const ExperimentSettings& s, Artifacts& out) {
  const auto rows = experiment_grid_sweep(spec, s, cfg.grid_sweep_points);
  std::string csv = "points_per_dim,roa_cells,seconds\n";
  ojson j = ojson::array();
  for (const auto& row : rows) {
    csv += std::to_string(row.points_per_dim) + "," + std::to_string(row.roa_cells) + "," + num(row.seconds) + "\n";
    // Wall-clock times stay out of result.json to keep it reproducible.
    j.push_back({{"points_per_dim", row.points_per_dim}, {"roa_cells", row.roa_cells}});
    out.log << "points " << row.points_per_dim << ": roa " << row.roa_cells << " cells, " << num(row.seconds)
            << " s\n";
  }
  out.add("grid_sweep.csv", std::move(csv));
  return {{"rows", j}};
}

ojson cmd_simulate(const RunConfig& cfg, const BenchmarkSpec& spec, const ExperimentSettings& s, Artifacts& out) {
  const PlantContext ctx = make_context(spec, s.tau, s.grid_points, s.candidate, s.neural, s.exemption_factor);
  const std::uint64_t seed = run_seed(s, 0);
  const Controller k_lqr = lqr_gain(ctx.dsys, ctx.weights);
  const RunRecord k_o = run_synthesis(spec, ctx, s, cfg.num_particles, s.w1, s.w2, seed);
  const RunRecord k_max = run_synthesis(spec, ctx, s, cfg.num_particles, 0.0, 1.0, seed);
  const std::vector<std::pair<std::string, Controller>> controllers{
      {"K_LQR", k_lqr}, {"K_O", k_o.result.gbest}, {"K_max", k_max.result.gbest}};
  const auto runs = experiment_simulate(spec, s.tau, controllers, cfg.angles, cfg.sim_duration);

  const int n = spec.plant.state_dim;
  const int m = spec.plant.input_dim;
  std::string header = "time_s";
  for (int i = 0; i < n; ++i) header += ",x" + std::to_string(i);
  for (int i = 0; i < m; ++i) header += ",u" + std::to_string(i);
  header += ",controller\n";

  ojson sims = ojson::array();
  for (std::size_t a = 0; a < cfg.angles.size(); ++a) {
    std::string csv = header;
    for (const auto& run : runs) {
      if (run.start_angle != cfg.angles[a]) continue;
      const Trajectory& t = run.trajectory;
      for (std::size_t k = 0; k < t.times.size(); ++k) {
        csv += num(t.times[k]);
        for (int i = 0; i < n; ++i) csv += "," + num(t.states[k](i));
        for (int i = 0; i < m; ++i) csv += "," + num(t.inputs[k](i));
        csv += "," + run.controller + "\n";
      }
      sims.push_back({{"start_angle", run.start_angle},
                      {"controller", run.controller},
                      {"stabilized", run.stabilized},
                      {"diverged", t.diverged},
                      {"final_state", std::vector<double>(t.states.back().data(), t.states.back().data() + n)},
                      {"csv", "simulate_" + std::to_string(a) + ".csv"}});
      out.log << "angle " << num(run.start_angle) << " " << run.controller << ": "
              << (run.stabilized ? "stabilized" : "not stabilized") << "\n";
    }
    out.add("simulate_" + std::to_string(a) + ".csv", std::move(csv));
  }
  return {{"k_lqr", {{"gain", gain_json(k_lqr)}}},
          {"k_o", synthesis_json(k_o)},
          {"k_max", synthesis_json(k_max)},
          {"runs", sims}};
}

ojson cmd_roa(const RunConfig& cfg, const BenchmarkSpec& spec, const ExperimentSettings& s, Artifacts& out) {
  const PlantContext ctx = make_context(spec, s.tau, s.grid_points, s.candidate, s.neural, s.exemption_factor);
  const int m = spec.plant.input_dim;
  const int n = spec.plant.state_dim;
  const Controller ctrl = cfg.gain.empty()
                              ? lqr_gain(ctx.dsys, ctx.weights)
                              : Controller::from_flat(Eigen::Map<const Vec>(cfg.gain.data(), n * m), m, n);
  const CostReport cost = lqr_cost_metric(ctx.dsys, ctrl, ctx.weights);
  if (!cost.stable) throw NumericError("gain does not stabilize the discretized plant");

  RoaEstimate est;
  std::optional<LyapunovNet> net;
  std::optional<double> step_lipschitz;
  if (cfg.step_map == StepKind::Linear) {
    ControllerRoa r = controller_roa(ctx, ctrl);
    est = std::move(r.roa);
    net = std::move(r.net);
  } else {
    const double Ls = estimate_step_lipschitz(spec.plant, ctrl, s.tau, ctx.grid);
    step_lipschitz = Ls;
    const NonlinearSystem& sys = spec.plant;
    const double tau = s.tau;
    const StepMap step = StepMap::from_function(
        [&sys, ctrl, tau](const Vec& dx) { return sampled_closed_loop_step(sys, ctrl, dx, tau); }, Ls);
    const CertifyOptions opts = certify_options(ctx, ctrl);
    if (s.candidate == CandidateKind::Quadratic) {
      est = certify_roa(QuadraticCandidate(cost.P, step), step, ctx.grid, opts);
    } else {
      std::vector<int> dims{n};
      dims.insert(dims.end(), s.neural.hidden.begin(), s.neural.hidden.end());
      TrainResult t = train(net_init(dims, s.neural.epsilon, s.neural.train.seed), step, ctx.grid, s.neural.train, opts);
      est = std::move(t.best_estimate);
      net = std::move(t.net);
    }
  }
  out.log << "roa: " << est.size_cells << " cells (" << est.exempt_cells << " exempt), c = " << num(est.threshold_c)
          << ", stop " << to_string(est.stop_reason) << "\n";

  std::string csv = "cell";
  for (int i = 0; i < n; ++i) csv += ",x" + std::to_string(i);
  csv += "\n";
  for (std::size_t cell : est.certified_cells) {
    const Vec x = ctx.grid.center(cell);
    csv += std::to_string(cell);
    for (int i = 0; i < n; ++i) csv += "," + num(x(i));
    csv += "\n";
  }
  out.add("roa_cells.csv", std::move(csv));
  if (net) out.add("net.bin", net->to_bytes());

  ojson j;
  j["gain"] = gain_json(ctrl);
  j["cost"] = cost.metric;
  j["threshold_c"] = est.threshold_c;
  j["roa_cells"] = est.size_cells;
  j["size_fraction"] = est.size_fraction;
  j["exempt_cells"] = est.exempt_cells;
  j["certified"] = est.certified;
  j["stop_reason"] = to_string(est.stop_reason);
  j["grid_cells"] = ctx.grid.size();
  j["mu"] = ctx.grid.mu();
  if (step_lipschitz) j["step_lipschitz_estimate"] = *step_lipschitz;
  if (net) j["net_file"] = "net.bin";
  return j;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"synth", "compare", "mass-sweep", "grid-sweep", "simulate", "roa"};
  return names;
}

double estimate_step_lipschitz(const NonlinearSystem& sys, const Controller& ctrl, double tau,
                               const StateGrid& grid) {
  const int n = grid.dim();
  constexpr int kSamplesPerDim = 11;
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) total *= kSamplesPerDim;
  double best = 0.0;
  for (std::size_t s = 0; s < total; ++s) {
    Vec x(n);
    std::size_t rest = s;
    for (int d = n - 1; d >= 0; --d) {
      const auto k = static_cast<double>(rest % kSamplesPerDim);
      rest /= kSamplesPerDim;
      x(d) = grid.lower()(d) + (grid.upper()(d) - grid.lower()(d)) * k / (kSamplesPerDim - 1);
    }
    Mat J(n, n);
    for (int d = 0; d < n; ++d) {
      const double h = 1e-6 * (1.0 + std::abs(x(d)));
      Vec xp = x, xm = x;
      xp(d) += h;
      xm(d) -= h;
      J.col(d) = (sampled_closed_loop_step(sys, ctrl, xp, tau) - sampled_closed_loop_step(sys, ctrl, xm, tau)) / (2 * h);
    }
    best = std::max(best, spectral_norm(J));
  }
  return 1.1 * best;
}

int run_subcommand(const std::string& subcommand, const RunConfig& cfg, std::ostream& err) {
  Artifacts out;
  try {
    out.log << "roaforge " << subcommand << "\n";
    for (const auto& d : cfg.defaults_applied) out.log << "default: " << d << "\n";
    out.log << "seed: " << cfg.seed << "\n";

    const BenchmarkSpec spec = build_benchmark(cfg);
    const ExperimentSettings settings = build_settings(cfg);
    ojson result;
    if (subcommand == "synth") result = cmd_synth(cfg, spec, settings, out);
    else if (subcommand == "compare") result = cmd_compare(cfg, spec, settings, out);
    else if (subcommand == "mass-sweep") result = cmd_mass_sweep(cfg, spec, settings, out);
    else if (subcommand == "grid-sweep") result = cmd_grid_sweep(cfg, spec, settings, out);
    else if (subcommand == "simulate") result = cmd_simulate(cfg, spec, settings, out);
    else if (subcommand == "roa") result = cmd_roa(cfg, spec, settings, out);
    else throw ConfigError("unknown subcommand '" + subcommand + "'");

    ojson doc;
    doc["subcommand"] = subcommand;
    doc["timestamp"] = utc_timestamp();
    doc["config"] = cfg.to_json();
    doc["result"] = std::move(result);
    out.add("result.json", doc.dump(2) + "\n");
    write_all(cfg.output_dir, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NoStableSeedError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNoStableSeed;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace roaforge
