#pragma once

#include <limits>

#include "roaforge/dynamics.hpp"

namespace roaforge {

struct CostWeights {
  Mat Q;
  Mat R;

  // Symmetric to 1e-12 and positive definite, otherwise ConfigError.
  void validate() const;
};

struct CostReport {
  Mat P;
  double metric = std::numeric_limits<double>::infinity();  // lambda_max(P)
  bool stable = false;
};

// Solves A_cl^T P A_cl - P + M = 0 through the Kronecker system
// (I - A_cl^T (x) A_cl^T) vec(P) = vec(M). Throws NumericError when A_cl is
// not Schur.
Mat solve_discrete_lyapunov(const Mat& A_cl, const Mat& M);

// lambda_max(P(K)) of the closed-loop cost matrix. Unstable loops are reported
// with stable = false and an infinite metric rather than an exception.
CostReport lqr_cost_metric(const DiscreteLinearSystem& dsys, const Controller& ctrl,
                           const CostWeights& w);

struct RiccatiSolution {
  Mat P;
  Controller gain;
  int iterations = 0;
};

inline constexpr int kRiccatiMaxIterations = 100000;

// Value iteration P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA from P = Q.
// Converged when ||dP||_F < 1e-12 * max(1, ||P||_F).
RiccatiSolution solve_dare(const DiscreteLinearSystem& dsys, const CostWeights& w);

Controller lqr_gain(const DiscreteLinearSystem& dsys, const CostWeights& w);

// Frobenius norm of the DARE residual at P.
double riccati_residual(const DiscreteLinearSystem& dsys, const CostWeights& w, const Mat& P);

double max_symmetric_eigenvalue(const Mat& S);
double min_symmetric_eigenvalue(const Mat& S);

}  // namespace roaforge
