#pragma once

#include <optional>
#include <utility>

#include "roaforge/common.hpp"

namespace roaforge {

// Continuous-time plant xdot = f(x, u) with a designated equilibrium pair.
struct NonlinearSystem {
  using VectorField = std::function<Vec(const Vec& x, const Vec& u)>;
  using Jacobian = std::function<std::pair<Mat, Mat>(const Vec& x, const Vec& u)>;

  int state_dim = 0;
  int input_dim = 0;
  VectorField vector_field;
  Jacobian jacobian;  // optional; finite differences when empty
  Vec equilibrium_state;
  Vec equilibrium_input;
  std::optional<double> input_limit;  // symmetric saturation |u_i| <= limit

  // Throws DimensionError / ConfigError on malformed plants or a
  // non-equilibrium (residual >= 1e-9).
  void validate() const;
};

struct LinearSystem {
  Mat A;
  Mat B;
};

struct DiscreteLinearSystem {
  Mat A_tau;
  Mat B_tau;
  double tau = 0.0;

  int state_dim() const { return static_cast<int>(A_tau.rows()); }
  int input_dim() const { return static_cast<int>(B_tau.cols()); }
};

// u = -K x
struct Controller {
  Mat K;

  Controller() = default;
  explicit Controller(Mat gain);

  int input_dim() const { return static_cast<int>(K.rows()); }
  int state_dim() const { return static_cast<int>(K.cols()); }

  // Row-major flattening, the layout used for gain-space search.
  Vec flatten() const;
  static Controller from_flat(const Vec& flat, int input_dim, int state_dim);
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> inputs;
  bool diverged = false;
};

// e^{At} by scaling and squaring of a truncated Taylor series.
Mat matrix_exp(const Mat& A, double t = 1.0);

LinearSystem linearize(const NonlinearSystem& sys);

// Zero-order-hold discretization. B_tau comes from the upper-right block of
// exp(tau * [[A, B], [0, 0]]).
DiscreteLinearSystem discretize(const LinearSystem& lin, double tau);

Mat closed_loop_matrix(const DiscreteLinearSystem& dsys, const Controller& ctrl);

Vec step_linear(const DiscreteLinearSystem& dsys, const Controller& ctrl, const Vec& x);

inline constexpr double kSchurMargin = 1e-9;

// Spectral radius < 1 - kSchurMargin.
bool is_schur(const Mat& A_cl);
bool is_schur(const DiscreteLinearSystem& dsys, const Controller& ctrl);

double spectral_radius(const Mat& A);

// Sampled-data closed loop: zero-order hold on u = sat(-K(x - x_eq) + u_eq),
// RK4 with kRk4Substeps substeps per sample. Stops early and sets
// Trajectory::diverged once |x| exceeds kDivergenceNorm.
inline constexpr int kRk4Substeps = 10;
inline constexpr double kDivergenceNorm = 1e6;

Trajectory simulate(const NonlinearSystem& sys, const Controller& ctrl, const Vec& x0, double tau,
                    int steps);

// One sample of the same sampled-data closed loop (shifted coordinates in
// and out), usable as a certification step map.
Vec sampled_closed_loop_step(const NonlinearSystem& sys, const Controller& ctrl, const Vec& dx,
                             double tau);

}  // namespace roaforge
