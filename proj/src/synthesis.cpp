#include "roaforge/synthesis.hpp"

#include <algorithm>
#include <cmath>

namespace roaforge {

const char* to_string(CandidateKind k) { return k == CandidateKind::Neural ? "neural" : "quadratic"; }

CertifyOptions certify_options(const PlantContext& ctx, const Controller& ctrl) {
  CertifyOptions opts;
  opts.exemption_factor = ctx.exemption_factor;
  if (ctx.input_limit) opts.admissible = unsaturated_region(ctrl.K, *ctx.input_limit, ctx.grid.mu());
  return opts;
}

ControllerRoa controller_roa(const PlantContext& ctx, const Controller& ctrl, const LyapunovNet* warm) {
  ControllerRoa out;
  out.cost = lqr_cost_metric(ctx.dsys, ctrl, ctx.weights);
  if (!out.cost.stable) throw NumericError("unstable closed loop");
  const StepMap step = StepMap::from_matrix(closed_loop_matrix(ctx.dsys, ctrl));
  const CertifyOptions opts = certify_options(ctx, ctrl);
  if (ctx.candidate == CandidateKind::Quadratic) {
    out.roa = certify_roa(QuadraticCandidate(out.cost.P, step), step, ctx.grid, opts);
    return out;
  }
  std::vector<int> dims{ctx.dsys.state_dim()};
  dims.insert(dims.end(), ctx.neural.hidden.begin(), ctx.neural.hidden.end());
  const LyapunovNet init = (warm && ctx.neural.warm_start)
                               ? *warm
                               : net_init(dims, ctx.neural.epsilon, ctx.neural.train.seed);
  TrainResult trained = train(init, step, ctx.grid, ctx.neural.train, opts);
  out.roa = std::move(trained.best_estimate);
  out.net = std::move(trained.net);
  return out;
}

void FitnessSpec::validate() const {
  if (!(w1 >= 0.0) || !(w2 >= 0.0)) throw ConfigError("fitness weights must be >= 0");
  if (!(w1 + w2 > 0.0)) throw ConfigError("w1 + w2 must be > 0");
  if (!(baseline_cost > 0.0) || !(baseline_roa > 0.0)) throw ConfigError("fitness baselines must be > 0");
}

FitnessSpec make_fitness_spec(const PlantContext& ctx, double w1, double w2) {
  const Controller k_lqr = lqr_gain(ctx.dsys, ctx.weights);
  FitnessSpec spec;
  spec.w1 = w1;
  spec.w2 = w2;
  spec.candidate = ctx.candidate;
  const ControllerRoa base = controller_roa(ctx, k_lqr);
  spec.baseline_cost = base.cost.metric;
  // K_LQR may certify nothing on coarse grids or heavy plants; one cell then
  // keeps the ROA term finite.
  spec.baseline_roa = std::max(1.0, static_cast<double>(base.roa.size_cells));
  spec.validate();
  return spec;
}

Evaluation evaluate_fitness(const PlantContext& ctx, const FitnessSpec& spec, const Controller& ctrl,
                            const LyapunovNet* warm) {
  Evaluation e;
  if (!is_schur(ctx.dsys, ctrl)) return e;
  if (spec.w2 == 0.0) {
    const CostReport cost = lqr_cost_metric(ctx.dsys, ctrl, ctx.weights);
    if (!cost.stable) return e;
    e.cost_term = cost.metric / spec.baseline_cost;
    e.roa_term = 0.0;
  } else {
    const ControllerRoa r = controller_roa(ctx, ctrl, warm);
    e.cost_term = r.cost.metric / spec.baseline_cost;
    e.roa_term = static_cast<double>(r.roa.size_cells) / spec.baseline_roa;
    if (r.net) e.payload = *r.net;
  }
  e.fitness = spec.w1 * e.cost_term - spec.w2 * e.roa_term;
  if (std::isnan(e.fitness)) e.fitness = std::numeric_limits<double>::infinity();
  return e;
}

SynthesisResult synthesize(const PlantContext& ctx, const PsoParams& params, const FitnessSpec& spec) {
  spec.validate();
  const int m = ctx.dsys.input_dim();
  const int n = ctx.dsys.state_dim();
  if (params.lower.size() != m * n) throw DimensionError("gain bounds must have input_dim * state_dim entries");

  Objective objective = [&](const Vec& x, const Evaluation* gbest) {
    const LyapunovNet* warm = nullptr;
    if (gbest) warm = std::any_cast<LyapunovNet>(&gbest->payload);
    return evaluate_fitness(ctx, spec, Controller::from_flat(x, m, n), warm);
  };
  PsoResult pso = minimize(objective, params);

  SynthesisResult out;
  out.gbest = Controller::from_flat(pso.gbest, m, n);
  out.gbest_fitness = pso.gbest_eval.fitness;
  out.history = std::move(pso.history);
  out.iterations_run = pso.iterations_run;
  out.terminated_by = pso.terminated_by;
  out.pair = {params.omega, params.eta};
  out.init_attempts = pso.init_attempts;
  out.cost = lqr_cost_metric(ctx.dsys, out.gbest, ctx.weights).metric;
  out.roa = std::round(pso.gbest_eval.roa_term * spec.baseline_roa);
  return out;
}

}  // namespace roaforge
