#include "roaforge/certificate.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "roaforge/lqr.hpp"

namespace roaforge {

StateGrid::StateGrid(Vec lower, Vec upper, std::vector<int> points_per_dim)
    : lower_(std::move(lower)), upper_(std::move(upper)), points_(std::move(points_per_dim)) {
  const auto n = lower_.size();
  if (n < 1 || upper_.size() != n || static_cast<Eigen::Index>(points_.size()) != n)
    throw DimensionError("grid bounds and point counts must share one dimension >= 1");
  spacing_.resize(n);
  size_ = 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(upper_(i) > lower_(i))) throw ConfigError("grid: upper must exceed lower in every dimension");
    if (points_[i] < 3) throw ConfigError("grid: at least 3 points per dimension");
    if (!(lower_(i) <= 0.0 && upper_(i) >= 0.0))
      throw ConfigError("grid: equilibrium (origin) lies outside the box");
    spacing_(i) = (upper_(i) - lower_(i)) / (points_[i] - 1);
    size_ *= static_cast<std::size_t>(points_[i]);
  }
  mu_ = 0.5 * spacing_.norm();
}

StateGrid build_grid(const Vec& lower, const Vec& upper, const std::vector<int>& points_per_dim) {
  return StateGrid(lower, upper, points_per_dim);
}

std::vector<int> StateGrid::multi_index(std::size_t index) const {
  std::vector<int> idx(points_.size());
  for (int d = dim() - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(index % points_[d]);
    index /= points_[d];
  }
  return idx;
}

Vec StateGrid::center(std::size_t index) const {
  Vec x(dim());
  for (int d = dim() - 1; d >= 0; --d) {
    const auto k = static_cast<int>(index % points_[d]);
    index /= points_[d];
    // Pin the last point to `upper` exactly.
    x(d) = (k == points_[d] - 1) ? upper_(d) : lower_(d) + k * spacing_(d);
  }
  return x;
}

bool StateGrid::on_boundary(std::size_t index) const {
  for (int d = dim() - 1; d >= 0; --d) {
    const auto k = static_cast<int>(index % points_[d]);
    index /= points_[d];
    if (k == 0 || k == points_[d] - 1) return true;
  }
  return false;
}

StepMap StepMap::from_matrix(Mat A_cl) {
  StepMap s;
  s.lipschitz = spectral_norm(A_cl);
  s.linear = A_cl;
  s.apply = [A = std::move(A_cl)](const Vec& x) -> Vec { return A * x; };
  return s;
}

StepMap StepMap::from_function(std::function<Vec(const Vec&)> f, double lipschitz) {
  StepMap s;
  s.apply = std::move(f);
  s.lipschitz = lipschitz;
  return s;
}

double quadratic_local_lipschitz(const Mat& N, const Vec& center, double radius) {
  const double slack = std::max(max_symmetric_eigenvalue(N), 0.0);
  return 2.0 * (N * center).norm() + slack * radius;
}

QuadraticCandidate::QuadraticCandidate(Mat P, StepMap step) : P_(std::move(P)), step_(std::move(step)) {
  if (P_.rows() != P_.cols()) throw DimensionError("quadratic candidate: P must be square");
  norm_P_ = max_symmetric_eigenvalue(P_);
  if (step_.linear) {
    const Mat& A = *step_.linear;
    N_ = A.transpose() * P_ * A - P_;
    N_ = 0.5 * (N_ + N_.transpose());
    n_slack_ = std::max(max_symmetric_eigenvalue(N_), 0.0);
  }
}

double QuadraticCandidate::local_lipschitz(const Vec& center, double radius) const {
  if (step_.linear) return 2.0 * (N_ * center).norm() + n_slack_ * radius;
  // Nonlinear step: bound v and v o step separately. On |y - c| <= r the
  // gradient of v is at most 2(|Pc| + |P| r); the step image lies in the
  // ball of radius Ls r around step(c).
  const double Ls = step_.lipschitz;
  const double own = 2.0 * ((P_ * center).norm() + norm_P_ * radius);
  const double image = 2.0 * Ls * ((P_ * step_(center)).norm() + norm_P_ * Ls * radius);
  return own + image;
}

double decrease_margin(const LyapunovCandidate& cand, const StepMap& step, const Vec& x, double L,
                       double mu) {
  return cand.value(step(x)) - cand.value(x) + L * mu;
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::None: return "none";
    case StopReason::Decrease: return "decrease";
    case StopReason::Inadmissible: return "inadmissible";
    case StopReason::DomainBoundary: return "domain_boundary";
  }
  return "unknown";
}

std::function<bool(const Vec&)> unsaturated_region(const Mat& K, double u_max, double mu) {
  Vec row_norms(K.rows());
  for (Eigen::Index i = 0; i < K.rows(); ++i) row_norms(i) = K.row(i).norm();
  return [K, row_norms, u_max, mu](const Vec& x) {
    const Vec u = K * x;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (std::abs(u(i)) + row_norms(i) * mu > u_max) return false;
    return true;
  };
}

RoaEstimate certify_roa(const LyapunovCandidate& cand, const StepMap& step, const StateGrid& grid,
                        const CertifyOptions& options) {
  const std::size_t total = grid.size();
  const double mu = grid.mu();
  const double r0 = options.exemption_factor * mu;
  const double r0_tol = r0 * (1.0 + 1e-12) + 1e-15;

  std::vector<double> v(total);
  std::vector<char> exempt(total, 0);
  parallel_for(total, [&](std::size_t i) {
    const Vec x = grid.center(i);
    v[i] = cand.value(x);
    if (x.norm() <= r0_tol && (!options.admissible || options.admissible(x))) exempt[i] = 1;
  });

  double c_domain = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < total; ++i)
    if (grid.on_boundary(i)) c_domain = std::min(c_domain, v[i]);

  std::vector<std::size_t> order;
  order.reserve(total);
  for (std::size_t i = 0; i < total; ++i)
    if (!exempt[i]) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return v[a] < v[b] || (v[a] == v[b] && a < b);
  });

  // Margins are evaluated block-wise in parallel; the scan for the first
  // failure stays sequential.
  constexpr std::size_t kBlock = 4096;
  std::vector<StopReason> verdict(kBlock);
  std::size_t stop = order.size();
  StopReason reason = StopReason::None;
  for (std::size_t begin = 0; begin < order.size() && stop == order.size(); begin += kBlock) {
    const std::size_t count = std::min(kBlock, order.size() - begin);
    parallel_for(count, [&](std::size_t k) {
      const std::size_t cell = order[begin + k];
      if (v[cell] > c_domain) {
        verdict[k] = StopReason::DomainBoundary;
        return;
      }
      const Vec x = grid.center(cell);
      if (options.admissible && !options.admissible(x)) {
        verdict[k] = StopReason::Inadmissible;
        return;
      }
      const double L = cand.local_lipschitz(x, mu);
      verdict[k] = decrease_margin(cand, step, x, L, mu) < 0.0 ? StopReason::None : StopReason::Decrease;
    });
    for (std::size_t k = 0; k < count; ++k) {
      if (verdict[k] != StopReason::None) {
        stop = begin + k;
        reason = verdict[k];
        break;
      }
    }
  }

  RoaEstimate est;
  est.stop_reason = reason;
  std::size_t passed = 0;
  if (stop < order.size()) {
    est.threshold_c = v[order[stop]];
    for (std::size_t k = 0; k < stop; ++k) {
      if (v[order[k]] < est.threshold_c) {
        est.certified_cells.push_back(order[k]);
        ++passed;
      }
    }
  } else {
    double vmax = 0.0;
    for (std::size_t i = 0; i < total; ++i) vmax = std::max(vmax, v[i]);
    est.threshold_c = vmax;
    est.certified_cells = order;
    passed = order.size();
  }
  for (std::size_t i = 0; i < total; ++i)
    if (exempt[i]) {
      est.certified_cells.push_back(i);
      ++est.exempt_cells;
    }
  std::sort(est.certified_cells.begin(), est.certified_cells.end());
  est.size_cells = est.certified_cells.size();
  est.size_fraction = static_cast<double>(est.size_cells) / static_cast<double>(total);
  est.certified = passed > 0;
  return est;
}

}  // namespace roaforge
