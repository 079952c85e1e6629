#include "roaforge/lqr.hpp"

#include <cmath>

namespace roaforge {

namespace {

void check_spd(const Mat& S, const char* name) {
  if (S.rows() != S.cols() || S.rows() == 0)
    throw DimensionError(std::string(name) + " must be a non-empty square matrix");
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError(std::string(name) + " is not symmetric");
  if (!(min_symmetric_eigenvalue(S) > 0.0))
    throw ConfigError(std::string(name) + " is not positive definite");
}

}  // namespace

double max_symmetric_eigenvalue(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  return es.eigenvalues().maxCoeff();
}

double min_symmetric_eigenvalue(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  return es.eigenvalues().minCoeff();
}

void CostWeights::validate() const {
  check_spd(Q, "Q");
  check_spd(R, "R");
}

Mat solve_discrete_lyapunov(const Mat& A_cl, const Mat& M) {
  if (A_cl.rows() != A_cl.cols() || M.rows() != A_cl.rows() || M.cols() != A_cl.cols())
    throw DimensionError("solve_discrete_lyapunov: dimension mismatch");
  if (!is_schur(A_cl)) throw NumericError("unstable closed loop");
  const Eigen::Index n = A_cl.rows();
  const Mat At = A_cl.transpose();

  // vec(A' P A) = (A' (x) A') vec(P) with column-major vec.
  Mat system = Mat::Identity(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) system.block(i * n, j * n, n, n) -= At(i, j) * At;

  const Vec rhs = Eigen::Map<const Vec>(M.data(), n * n);
  const Vec sol = system.partialPivLu().solve(rhs);
  Mat P = Eigen::Map<const Mat>(sol.data(), n, n);
  return 0.5 * (P + P.transpose());
}

CostReport lqr_cost_metric(const DiscreteLinearSystem& dsys, const Controller& ctrl,
                           const CostWeights& w) {
  const Mat A_cl = closed_loop_matrix(dsys, ctrl);
  CostReport report;
  if (!is_schur(A_cl)) return report;
  const Mat M = w.Q + ctrl.K.transpose() * w.R * ctrl.K;
  report.P = solve_discrete_lyapunov(A_cl, M);
  report.metric = max_symmetric_eigenvalue(report.P);
  report.stable = true;
  return report;
}

RiccatiSolution solve_dare(const DiscreteLinearSystem& dsys, const CostWeights& w) {
  const Mat& A = dsys.A_tau;
  const Mat& B = dsys.B_tau;
  if (w.Q.rows() != A.rows() || w.R.rows() != B.cols())
    throw DimensionError("cost weights do not match the plant dimensions");
  const Mat At = A.transpose();
  const Mat Bt = B.transpose();

  Mat P = w.Q;
  for (int it = 1; it <= kRiccatiMaxIterations; ++it) {
    const Mat BtPA = Bt * P * A;
    const Mat S = w.R + Bt * P * B;
    Mat next = w.Q + At * P * A - BtPA.transpose() * S.ldlt().solve(BtPA);
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) throw NumericError("DARE divergence");
    const double change = (next - P).norm();
    P = std::move(next);
    if (change < 1e-12 * std::max(1.0, P.norm())) {
      // Newton (Hewer) polish: a few policy-evaluation steps remove the
      // residual that value iteration leaves on slow closed loops.
      double residual = riccati_residual(dsys, w, P);
      for (int k = 0; k < 8 && residual > 0.0; ++k) {
        const Mat gain = (w.R + Bt * P * B).ldlt().solve(Bt * P * A);
        const Mat A_cl = A - B * gain;
        if (!is_schur(A_cl)) break;
        const Mat candidate = solve_discrete_lyapunov(A_cl, w.Q + gain.transpose() * w.R * gain);
        const double r = riccati_residual(dsys, w, candidate);
        if (!(r < residual)) break;
        P = candidate;
        residual = r;
      }
      const Mat gain = (w.R + Bt * P * B).ldlt().solve(Bt * P * A);
      return {P, Controller(gain), it};
    }
  }
  throw NumericError("DARE divergence");
}

Controller lqr_gain(const DiscreteLinearSystem& dsys, const CostWeights& w) {
  return solve_dare(dsys, w).gain;
}

double riccati_residual(const DiscreteLinearSystem& dsys, const CostWeights& w, const Mat& P) {
  const Mat& A = dsys.A_tau;
  const Mat& B = dsys.B_tau;
  const Mat BtPA = B.transpose() * P * A;
  const Mat S = w.R + B.transpose() * P * B;
  const Mat res = w.Q + A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA) - P;
  return res.norm();
}

}  // namespace roaforge
