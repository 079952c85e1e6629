#pragma once

#include <memory>
#include <optional>

#include "roaforge/dynamics.hpp"

namespace roaforge {

// Uniform lattice of cell centers over the box [lower, upper], endpoints
// included. Flat indices enumerate the last dimension fastest.
class StateGrid {
 public:
  StateGrid(Vec lower, Vec upper, std::vector<int> points_per_dim);

  int dim() const { return static_cast<int>(lower_.size()); }
  std::size_t size() const { return size_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const Vec& spacing() const { return spacing_; }
  const std::vector<int>& points_per_dim() const { return points_; }

  // Covering radius: half the cell diagonal.
  double mu() const { return mu_; }

  Vec center(std::size_t index) const;
  std::vector<int> multi_index(std::size_t index) const;
  // True for cells on the faces of the box.
  bool on_boundary(std::size_t index) const;

 private:
  Vec lower_, upper_, spacing_;
  std::vector<int> points_;
  std::size_t size_ = 0;
  double mu_ = 0.0;
};

StateGrid build_grid(const Vec& lower, const Vec& upper, const std::vector<int>& points_per_dim);

// Closed-loop map x[r] -> x[r+1] in shifted coordinates (equilibrium at 0).
struct StepMap {
  std::function<Vec(const Vec&)> apply;
  std::optional<Mat> linear;  // set when apply(x) == linear * x
  double lipschitz = 0.0;     // Lipschitz constant of apply on the domain

  Vec operator()(const Vec& x) const { return apply(x); }

  static StepMap from_matrix(Mat A_cl);
  // Nonlinear map; `lipschitz` is supplied by the caller.
  static StepMap from_function(std::function<Vec(const Vec&)> f, double lipschitz);
};

// Positive-definite function v with a bound on how fast the decrease
// dv(y) = v(step(y)) - v(y) can rise inside a cell: for |y - c| <= r,
// dv(y) <= dv(c) + local_lipschitz(c, r) * |y - c|.
class LyapunovCandidate {
 public:
  virtual ~LyapunovCandidate() = default;
  virtual double value(const Vec& x) const = 0;
  virtual double local_lipschitz(const Vec& center, double radius) const = 0;
};

// Slope bound for dv(x) = x'Nx over the ball |x - c| <= r:
// 2 |N c| + max(lambda_max(N), 0) r.
double quadratic_local_lipschitz(const Mat& N, const Vec& center, double radius);

// v(x) = x'Px, tied to the step map whose decrease it bounds.
class QuadraticCandidate final : public LyapunovCandidate {
 public:
  QuadraticCandidate(Mat P, StepMap step);

  double value(const Vec& x) const override { return x.dot(P_ * x); }
  double local_lipschitz(const Vec& center, double radius) const override;

  const Mat& P() const { return P_; }
  const Mat& N() const { return N_; }

 private:
  Mat P_;
  StepMap step_;
  Mat N_;  // A'PA - P when the step is linear
  double norm_P_ = 0.0;
  double n_slack_ = 0.0;  // max(lambda_max(N), 0)
};

// v(step(x)) - v(x) + L mu; negative certifies the cell around x.
double decrease_margin(const LyapunovCandidate& cand, const StepMap& step, const Vec& x, double L,
                       double mu);

enum class StopReason {
  None,          // every walked cell passed
  Decrease,      // tightened decrease check failed
  Inadmissible,  // cell outside the admissible (unsaturated) set
  DomainBoundary // level set would leave the gridded box
};

const char* to_string(StopReason r);

struct RoaEstimate {
  double threshold_c = 0.0;
  std::vector<std::size_t> certified_cells;  // ascending cell index
  std::size_t size_cells = 0;
  double size_fraction = 0.0;
  std::size_t exempt_cells = 0;
  bool certified = false;  // false when only the exemption ball is certified
  StopReason stop_reason = StopReason::None;
};

struct CertifyOptions {
  // Cells within exemption_factor * mu of the origin are certified by local
  // asymptotic stability instead of the tightened check.
  double exemption_factor = 10.0;
  // Optional admissibility predicate on cell centers.
  std::function<bool(const Vec&)> admissible;
};

// Cells where the linear feedback stays unsaturated over the whole cell:
// |K_i x| + |K_i| mu <= u_max for every input i.
std::function<bool(const Vec&)> unsaturated_region(const Mat& K, double u_max, double mu);

RoaEstimate certify_roa(const LyapunovCandidate& cand, const StepMap& step, const StateGrid& grid,
                        const CertifyOptions& options = {});

inline double roa_size(const RoaEstimate& est) { return static_cast<double>(est.size_cells); }

}  // namespace roaforge
