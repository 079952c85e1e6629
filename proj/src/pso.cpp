#include "roaforge/pso.hpp"

#include <cmath>

namespace roaforge {

void PsoParams::validate(int min_particles) const {
  if (num_particles < min_particles)
    throw ConfigError("num_particles must be >= " + std::to_string(min_particles));
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (stall_window < 1) throw ConfigError("stall_window must be >= 1");
  if (lower.size() == 0 || lower.size() != upper.size())
    throw DimensionError("bounds_lower/bounds_upper must be non-empty and of equal length");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(lower(i) < upper(i))) throw ConfigError("bounds_lower must be < bounds_upper componentwise");
  if (!std::isfinite(omega) || !std::isfinite(eta)) throw ConfigError("omega and eta must be finite");
}

ParameterPair select_parameter_pair(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5041495255ULL));
  return (rng.next() & 1ULL) ? kPairB : kPairA;
}

Vec update_velocity(const Particle& p, const Vec& gbest, const PsoParams& params) {
  const Vec rho = 0.5 * (p.pbest + gbest);
  return params.omega * p.velocity + params.eta * (rho - p.position);
}

PositionUpdate update_position(const Particle& p, const Vec& new_velocity, const PsoParams& params) {
  PositionUpdate out{params.gamma * p.position + params.delta * new_velocity, new_velocity};
  for (Eigen::Index i = 0; i < out.position.size(); ++i) {
    if (out.position(i) < params.lower(i)) {
      out.position(i) = params.lower(i);
      out.velocity(i) = 0.0;
    } else if (out.position(i) > params.upper(i)) {
      out.position(i) = params.upper(i);
      out.velocity(i) = 0.0;
    }
  }
  return out;
}

const char* to_string(Termination t) { return t == Termination::Stall ? "stall" : "max_iter"; }

namespace {

std::vector<Evaluation> evaluate_all(const Objective& objective, const std::vector<Vec>& xs,
                                     const Evaluation* gbest) {
  std::vector<Evaluation> evals(xs.size());
  parallel_for(xs.size(), [&](std::size_t k) { evals[k] = objective(xs[k], gbest); });
  return evals;
}

std::vector<Particle> random_swarm(const PsoParams& params, Rng& rng) {
  std::vector<Particle> swarm(params.num_particles);
  const Eigen::Index d = params.lower.size();
  for (auto& p : swarm) {
    p.position.resize(d);
    p.velocity.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) p.position(i) = rng.uniform(params.lower(i), params.upper(i));
    for (Eigen::Index i = 0; i < d; ++i) {
      const double half = 0.5 * (params.upper(i) - params.lower(i));
      p.velocity(i) = rng.uniform(-half, half);
    }
    p.pbest = p.position;
  }
  return swarm;
}

}  // namespace

PsoResult minimize(const Objective& objective, const PsoParams& params,
                   const std::optional<std::vector<Particle>>& initial, int min_particles) {
  params.validate(min_particles);
  Rng rng(params.seed);
  PsoResult result;

  std::vector<Particle> swarm;
  std::vector<Evaluation> evals;
  for (int attempt = 0;; ++attempt) {
    swarm = (initial && attempt == 0) ? *initial : random_swarm(params, rng);
    if (static_cast<int>(swarm.size()) != params.num_particles)
      throw DimensionError("initial swarm size does not match num_particles");
    std::vector<Vec> xs;
    for (auto& p : swarm) {
      p.pbest = p.position;
      xs.push_back(p.position);
    }
    evals = evaluate_all(objective, xs, nullptr);
    bool any_finite = false;
    for (const auto& e : evals) any_finite = any_finite || std::isfinite(e.fitness);
    result.init_attempts = attempt + 1;
    if (any_finite) break;
    if (attempt == kMaxReseeds) throw NoStableSeedError("no stable seed controller");
  }

  std::size_t best = 0;
  for (std::size_t k = 0; k < swarm.size(); ++k) {
    swarm[k].pbest_fitness = evals[k].fitness;
    if (evals[k].fitness < evals[best].fitness) best = k;
  }
  Vec gbest = swarm[best].pbest;
  Evaluation gbest_eval = evals[best];

  int stall = 0;
  for (int it = 1; it <= params.max_iter; ++it) {
    std::vector<Vec> xs(swarm.size());
    for (std::size_t k = 0; k < swarm.size(); ++k) {
      const Vec v = update_velocity(swarm[k], gbest, params);
      auto moved = update_position(swarm[k], v, params);
      swarm[k].position = std::move(moved.position);
      swarm[k].velocity = std::move(moved.velocity);
      xs[k] = swarm[k].position;
    }
    const Evaluation snapshot = gbest_eval;
    evals = evaluate_all(objective, xs, &snapshot);

    const double previous = gbest_eval.fitness;
    for (std::size_t k = 0; k < swarm.size(); ++k) {
      if (evals[k].fitness < swarm[k].pbest_fitness) {
        swarm[k].pbest = swarm[k].position;
        swarm[k].pbest_fitness = evals[k].fitness;
        if (evals[k].fitness < gbest_eval.fitness) {
          gbest = swarm[k].position;
          gbest_eval = std::move(evals[k]);
        }
      }
    }
    result.history.push_back({gbest_eval.fitness, gbest_eval.cost_term, gbest_eval.roa_term});
    result.iterations_run = it;

    const bool unchanged = gbest_eval.fitness == previous || std::abs(gbest_eval.fitness - previous) <= kStallTolerance;
    stall = unchanged ? stall + 1 : 0;
    if (stall >= params.stall_window) {
      result.terminated_by = Termination::Stall;
      break;
    }
  }

  result.gbest = std::move(gbest);
  result.gbest_eval = std::move(gbest_eval);
  result.swarm = std::move(swarm);
  return result;
}

PsoResult minimize(const std::function<double(const Vec&)>& objective, const PsoParams& params,
                   const std::optional<std::vector<Particle>>& initial, int min_particles) {
  Objective wrapped = [&objective](const Vec& x, const Evaluation*) {
    Evaluation e;
    e.fitness = objective(x);
    return e;
  };
  return minimize(wrapped, params, initial, min_particles);
}

}  // namespace roaforge
