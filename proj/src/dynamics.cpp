#include "roaforge/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace roaforge {

namespace {

void require_square(const Mat& A, const char* what) {
  if (A.rows() != A.cols()) {
    std::ostringstream os;
    os << what << ": expected a square matrix, got " << A.rows() << "x" << A.cols();
    throw DimensionError(os.str());
  }
}

Vec saturate(Vec u, const std::optional<double>& limit) {
  if (limit) u = u.cwiseMax(-*limit).cwiseMin(*limit);
  return u;
}

}  // namespace

void NonlinearSystem::validate() const {
  if (state_dim < 1 || input_dim < 1) throw DimensionError("plant needs n >= 1 and m >= 1");
  if (equilibrium_state.size() != state_dim || equilibrium_input.size() != input_dim)
    throw DimensionError("equilibrium pair has wrong dimensions");
  if (!vector_field) throw ConfigError("plant has no vector field");
  if (input_limit && *input_limit < 0.0) throw ConfigError("input limit must be >= 0");
  const Vec r = vector_field(equilibrium_state, equilibrium_input);
  if (r.size() != state_dim) throw DimensionError("vector field returned wrong dimension");
  if (!(r.norm() < 1e-9)) {
    std::ostringstream os;
    os << "equilibrium residual " << r.norm() << " is not below 1e-9";
    throw ConfigError(os.str());
  }
}

Controller::Controller(Mat gain) : K(std::move(gain)) {
  if (!K.allFinite()) throw NumericError("controller gain has non-finite entries");
}

Vec Controller::flatten() const {
  Vec flat(K.size());
  for (Eigen::Index i = 0; i < K.rows(); ++i)
    for (Eigen::Index j = 0; j < K.cols(); ++j) flat(i * K.cols() + j) = K(i, j);
  return flat;
}

Controller Controller::from_flat(const Vec& flat, int input_dim, int state_dim) {
  if (flat.size() != static_cast<Eigen::Index>(input_dim) * state_dim)
    throw DimensionError("gain vector length does not match m*n");
  Mat K(input_dim, state_dim);
  for (int i = 0; i < input_dim; ++i)
    for (int j = 0; j < state_dim; ++j) K(i, j) = flat(i * state_dim + j);
  return Controller(std::move(K));
}

Mat matrix_exp(const Mat& A, double t) {
  require_square(A, "matrix_exp");
  const Eigen::Index n = A.rows();
  if (n == 0) return Mat(0, 0);
  Mat X = A * t;
  const double norm = X.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm)) throw NumericError("matrix_exp: non-finite input");

  // Scale so that ||X|| <= 1/2, then sum terms until the geometric tail bound
  // ||X||^{k+1}/(k+1)! * 1/(1 - ||X||/(k+2)) drops below 1e-16.
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  X /= std::ldexp(1.0, squarings);
  const double xnorm = norm / std::ldexp(1.0, squarings);

  Mat result = Mat::Identity(n, n);
  Mat term = Mat::Identity(n, n);
  double term_bound = 1.0;
  for (int k = 1; k < 64; ++k) {
    term = term * X / static_cast<double>(k);
    result += term;
    term_bound *= xnorm / k;
    const double tail = term_bound * xnorm / (k + 1) / (1.0 - xnorm / (k + 2));
    if (tail < 1e-16 || term.isZero(0.0)) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

LinearSystem linearize(const NonlinearSystem& sys) {
  sys.validate();
  const Vec& xe = sys.equilibrium_state;
  const Vec& ue = sys.equilibrium_input;
  if (sys.jacobian) {
    auto [A, B] = sys.jacobian(xe, ue);
    if (A.rows() != sys.state_dim || A.cols() != sys.state_dim || B.rows() != sys.state_dim ||
        B.cols() != sys.input_dim)
      throw DimensionError("analytic jacobian has wrong dimensions");
    return {std::move(A), std::move(B)};
  }

  // Central differences, h = 1e-6 (1 + |component|).
  LinearSystem lin{Mat(sys.state_dim, sys.state_dim), Mat(sys.state_dim, sys.input_dim)};
  for (int j = 0; j < sys.state_dim; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(xe(j)));
    Vec xp = xe, xm = xe;
    xp(j) += h;
    xm(j) -= h;
    lin.A.col(j) = (sys.vector_field(xp, ue) - sys.vector_field(xm, ue)) / (2.0 * h);
  }
  for (int j = 0; j < sys.input_dim; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(ue(j)));
    Vec up = ue, um = ue;
    up(j) += h;
    um(j) -= h;
    lin.B.col(j) = (sys.vector_field(xe, up) - sys.vector_field(xe, um)) / (2.0 * h);
  }
  return lin;
}

DiscreteLinearSystem discretize(const LinearSystem& lin, double tau) {
  require_square(lin.A, "discretize");
  if (lin.B.rows() != lin.A.rows()) throw DimensionError("discretize: B rows must match A");
  if (!(tau > 0.0)) throw ConfigError("discretize: tau must be > 0");
  const Eigen::Index n = lin.A.rows();
  const Eigen::Index m = lin.B.cols();
  Mat aug = Mat::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = lin.A;
  aug.topRightCorner(n, m) = lin.B;
  const Mat e = matrix_exp(aug, tau);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m), tau};
}

Mat closed_loop_matrix(const DiscreteLinearSystem& dsys, const Controller& ctrl) {
  if (ctrl.K.rows() != dsys.B_tau.cols() || ctrl.K.cols() != dsys.A_tau.rows())
    throw DimensionError("controller gain does not match the plant dimensions");
  return dsys.A_tau - dsys.B_tau * ctrl.K;
}

Vec step_linear(const DiscreteLinearSystem& dsys, const Controller& ctrl, const Vec& x) {
  if (x.size() != dsys.A_tau.rows()) throw DimensionError("step_linear: state dimension mismatch");
  return closed_loop_matrix(dsys, ctrl) * x;
}

double spectral_radius(const Mat& A) {
  require_square(A, "spectral_radius");
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericError("eigenvalue iteration did not converge");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_schur(const Mat& A_cl) {
  if (!A_cl.allFinite()) return false;
  return spectral_radius(A_cl) < 1.0 - kSchurMargin;
}

bool is_schur(const DiscreteLinearSystem& dsys, const Controller& ctrl) {
  return is_schur(closed_loop_matrix(dsys, ctrl));
}

namespace {

Vec rk4_hold(const NonlinearSystem& sys, const Vec& x, const Vec& u, double tau) {
  const double h = tau / kRk4Substeps;
  Vec s = x;
  for (int i = 0; i < kRk4Substeps; ++i) {
    const Vec k1 = sys.vector_field(s, u);
    const Vec k2 = sys.vector_field(s + 0.5 * h * k1, u);
    const Vec k3 = sys.vector_field(s + 0.5 * h * k2, u);
    const Vec k4 = sys.vector_field(s + h * k3, u);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

Vec feedback(const NonlinearSystem& sys, const Controller& ctrl, const Vec& x) {
  return saturate(-ctrl.K * (x - sys.equilibrium_state) + sys.equilibrium_input, sys.input_limit);
}

}  // namespace

Trajectory simulate(const NonlinearSystem& sys, const Controller& ctrl, const Vec& x0, double tau,
                    int steps) {
  if (steps < 1) throw ConfigError("simulate: steps must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("simulate: tau must be > 0");
  if (x0.size() != sys.state_dim) throw DimensionError("simulate: initial state dimension");
  if (ctrl.K.rows() != sys.input_dim || ctrl.K.cols() != sys.state_dim)
    throw DimensionError("simulate: controller dimension");

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.inputs.reserve(steps + 1);
  Vec x = x0;
  for (int r = 0; r <= steps; ++r) {
    const Vec u = feedback(sys, ctrl, x);
    traj.times.push_back(r * tau);
    traj.states.push_back(x);
    traj.inputs.push_back(u);
    if (!x.allFinite() || x.norm() > kDivergenceNorm) {
      traj.diverged = true;
      break;
    }
    if (r == steps) break;
    x = rk4_hold(sys, x, u, tau);
  }
  return traj;
}

Vec sampled_closed_loop_step(const NonlinearSystem& sys, const Controller& ctrl, const Vec& dx,
                             double tau) {
  const Vec x = sys.equilibrium_state + dx;
  return rk4_hold(sys, x, feedback(sys, ctrl, x), tau) - sys.equilibrium_state;
}

}  // namespace roaforge
