#pragma once

#include <any>
#include <limits>
#include <optional>

#include "roaforge/common.hpp"

namespace roaforge {

// Deterministic (Trelea) particle swarm: the random multipliers are fixed at
// 1/2, so the attractor is the midpoint of pbest and gbest.
struct PsoParams {
  double omega = 0.7;
  double eta = 1.6;
  double gamma = 1.0;
  double delta = 1.0;
  int num_particles = 20;
  int max_iter = 15000;
  int stall_window = 100;
  Vec lower;
  Vec upper;
  std::uint64_t seed = 0;

  // min_particles is 2 for synthesis; test harnesses may pass 1.
  void validate(int min_particles = 2) const;
};

struct ParameterPair {
  double omega;
  double eta;
};

inline constexpr ParameterPair kPairA{0.7, 1.6};
inline constexpr ParameterPair kPairB{0.33, 2.35};

// Either pair with equal probability, fixed per run seed.
ParameterPair select_parameter_pair(std::uint64_t seed);

struct Particle {
  Vec position;
  Vec velocity;
  Vec pbest;
  double pbest_fitness = std::numeric_limits<double>::infinity();
};

// omega v + eta (rho - x), rho = (pbest + gbest) / 2.
Vec update_velocity(const Particle& p, const Vec& gbest, const PsoParams& params);

struct PositionUpdate {
  Vec position;
  Vec velocity;  // new velocity with clamped components zeroed
};

// gamma x + delta v', clamped into the bounds.
PositionUpdate update_position(const Particle& p, const Vec& new_velocity, const PsoParams& params);

// Result of one objective call. cost_term / roa_term are the two weighted
// parts of a synthesis fitness (NaN for plain objectives); payload carries
// per-evaluation state such as a trained network.
struct Evaluation {
  double fitness = std::numeric_limits<double>::infinity();
  double cost_term = std::numeric_limits<double>::quiet_NaN();
  double roa_term = std::numeric_limits<double>::quiet_NaN();
  std::any payload;
};

// Must be a pure function of (x, gbest); it is called concurrently across
// particles. gbest is null during initialization.
using Objective = std::function<Evaluation(const Vec& x, const Evaluation* gbest)>;

enum class Termination { MaxIter, Stall };

const char* to_string(Termination t);

struct IterationRecord {
  double fitness;
  double cost_term;
  double roa_term;
};

struct PsoResult {
  Vec gbest;
  Evaluation gbest_eval;
  std::vector<IterationRecord> history;  // one entry per iteration, after the update
  int iterations_run = 0;
  Termination terminated_by = Termination::MaxIter;
  int init_attempts = 1;
  std::vector<Particle> swarm;  // final state
};

inline constexpr double kStallTolerance = 1e-12;
inline constexpr int kMaxReseeds = 10;

// Initializes uniformly in the bounds (velocities in +-(upper-lower)/2) unless
// an initial swarm is given, re-sampling up to kMaxReseeds times when every
// particle is infeasible, then iterates until max_iter or a stall.
PsoResult minimize(const Objective& objective, const PsoParams& params,
                   const std::optional<std::vector<Particle>>& initial = std::nullopt,
                   int min_particles = 2);

PsoResult minimize(const std::function<double(const Vec&)>& objective, const PsoParams& params,
                   const std::optional<std::vector<Particle>>& initial = std::nullopt,
                   int min_particles = 2);

}  // namespace roaforge
