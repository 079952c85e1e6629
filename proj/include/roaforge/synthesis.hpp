#pragma once

#include "roaforge/lqr.hpp"
#include "roaforge/lyapunov_nn.hpp"
#include "roaforge/pso.hpp"

namespace roaforge {

enum class CandidateKind { Quadratic, Neural };

const char* to_string(CandidateKind k);

struct NeuralOptions {
  std::vector<int> hidden{16, 16};
  double epsilon = kDefaultNetEpsilon;
  TrainConfig train;
  // Particles train from the current gbest net instead of a fresh init.
  bool warm_start = true;
};

// Everything fitness needs besides the gain: the discretized plant, cost
// weights, certification grid and the saturation level.
struct PlantContext {
  DiscreteLinearSystem dsys;
  CostWeights weights;
  StateGrid grid;
  std::optional<double> input_limit;
  double exemption_factor = 10.0;
  CandidateKind candidate = CandidateKind::Quadratic;
  NeuralOptions neural;
};

CertifyOptions certify_options(const PlantContext& ctx, const Controller& ctrl);

struct ControllerRoa {
  CostReport cost;
  RoaEstimate roa;
  std::optional<LyapunovNet> net;  // set for neural candidates
};

// Certified ROA of a stabilizing gain with the context's candidate kind. The
// quadratic candidate is v = x'P(K)x from the cost Lyapunov equation. A
// neural candidate trains from `warm` when given.
ControllerRoa controller_roa(const PlantContext& ctx, const Controller& ctrl,
                             const LyapunovNet* warm = nullptr);

struct FitnessSpec {
  double w1 = 1.0;
  double w2 = 1.0;
  double baseline_cost = 1.0;  // lambda_max(P(K_LQR))
  double baseline_roa = 1.0;   // certified size of K_LQR
  CandidateKind candidate = CandidateKind::Quadratic;

  void validate() const;
};

FitnessSpec make_fitness_spec(const PlantContext& ctx, double w1, double w2);

// w1 cost/baseline_cost - w2 roa/baseline_roa; +inf for non-Schur gains.
// cost_term and roa_term hold the normalized (unweighted) ratios. The ROA is
// skipped when w2 == 0. Neural runs put the trained net in the payload.
Evaluation evaluate_fitness(const PlantContext& ctx, const FitnessSpec& spec, const Controller& ctrl,
                            const LyapunovNet* warm = nullptr);

struct SynthesisResult {
  Controller gbest;
  double gbest_fitness = 0.0;
  double cost = 0.0;  // lambda_max(P(gbest))
  double roa = 0.0;   // certified cells of gbest (0 when w2 == 0)
  std::vector<IterationRecord> history;
  int iterations_run = 0;
  Termination terminated_by = Termination::MaxIter;
  ParameterPair pair{0.0, 0.0};
  int init_attempts = 1;
};

// Algorithm-1 search over gains K (row-major) inside params' bounds.
// params.omega/eta are used as given.
SynthesisResult synthesize(const PlantContext& ctx, const PsoParams& params, const FitnessSpec& spec);

}  // namespace roaforge
