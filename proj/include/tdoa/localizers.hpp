#pragma once

// Source position estimators fed with raw or denoised TDOAs.
//
//   ls     unconstrained linear least squares on the reference TDOAs
//   srdls  squared-range-difference least squares: the same residual with
//          ||x - m_ref|| = r enforced exactly (generalised trust region)
//   gs     linear least squares with one range unknown per lower-index sensor,
//          so that any set of pairs (e.g. the full set) can be used
//   ml     local Gauss-Newton descent on the Mahalanobis cost
//
// The linear models come from squaring ||x - m_j|| = r_i + tau_ji and
// subtracting ||x - m_i||^2 = r_i^2:
//   2 (m_j - m_i)^T x + 2 tau_ji r_i = ||m_j||^2 - ||m_i||^2 - tau_ji^2.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tdoa/array_geometry.hpp"
#include "tdoa/errors.hpp"
#include "tdoa/tdoa_space.hpp"

namespace tdoa {

enum class Localizer { ls, srdls, gs, ml };

inline std::string to_string(Localizer a) {
  switch (a) {
    case Localizer::ls: return "ls";
    case Localizer::srdls: return "srdls";
    case Localizer::gs: return "gs";
    case Localizer::ml: return "ml";
  }
  return "unknown";
}

inline Localizer parse_localizer(const std::string& name) {
  if (name == "ls") return Localizer::ls;
  if (name == "srdls" || name == "srd-ls" || name == "srd_ls") return Localizer::srdls;
  if (name == "gs") return Localizer::gs;
  if (name == "ml") return Localizer::ml;
  throw InvalidArgument("unknown localizer '" + name + "'");
}

enum class SolverStatus {
  converged,
  rank_deficient,
  no_root,         ///< srdls: no multiplier root, unconstrained estimate returned
  negative_range,  ///< srdls: constrained optimum has r < 0
  max_iterations,
  singular,
  diverged,        ///< ml: iterate ran away towards infinity
};

inline std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::rank_deficient: return "rank_deficient";
    case SolverStatus::no_root: return "no_root";
    case SolverStatus::negative_range: return "negative_range";
    case SolverStatus::max_iterations: return "max_iterations";
    case SolverStatus::singular: return "singular";
    case SolverStatus::diverged: return "diverged";
  }
  return "unknown";
}

struct LocalizationResult {
  Point x_hat;
  /// Estimated ranges, indexed by sensor; NaN where the method has no unknown.
  Eigen::VectorXd ranges;
  double residual_norm = 0.0;
  int iterations = 0;
  SolverStatus status = SolverStatus::converged;
  /// ml_refine only: cost after every accepted iterate, starting with x0.
  std::vector<double> cost_trace;

  bool ok() const { return status == SolverStatus::converged; }
};

namespace detail {

inline double signed_tdoa(const Eigen::VectorXd& tau_full, int n, int k, int ref) {
  return k > ref ? tau_full[pair_index(n, {k, ref})] : -tau_full[pair_index(n, {ref, k})];
}

/// Reference-sensor linear system in coordinates centred on m_ref.
inline void reference_system(const SensorArray& array, const Eigen::VectorXd& tau_nr, int ref,
                             Eigen::MatrixXd& a, Eigen::VectorXd& b) {
  const int dim = array.dim();
  a.resize(array.n(), dim + 1);
  b.resize(array.n());
  const Eigen::VectorXd origin = array.position(ref);
  Eigen::Index row = 0;
  for (int k = 0; k <= array.n(); ++k) {
    if (k == ref) continue;
    const Eigen::VectorXd mk = array.position(k) - origin;
    const double t = tau_nr[row];
    a.row(row).head(dim) = 2.0 * mk.transpose();
    a(row, dim) = 2.0 * t;
    b[row] = mk.squaredNorm() - t * t;
    ++row;
  }
}

inline Eigen::VectorXd nan_ranges(const SensorArray& array) {
  return Eigen::VectorXd::Constant(array.num_sensors(), std::numeric_limits<double>::quiet_NaN());
}

inline void check_reference_input(const SensorArray& array, const Eigen::VectorXd& tau_nr, int ref) {
  require(ref >= 0 && ref <= array.n(), "reference index out of range");
  require(tau_nr.size() == array.n(), "expected n reference TDOAs");
  require(array.n() >= array.dim() + 1, "need at least dim + 2 sensors for this localizer");
  require(tau_nr.allFinite(), "TDOAs must be finite");
}

}  // namespace detail

/// Unconstrained least squares over (x, r_ref) from the n TDOAs tau_{k,ref}.
inline LocalizationResult ls_locate(const SensorArray& array, const Eigen::VectorXd& tau_nr,
                                    int ref = 0) {
  detail::check_reference_input(array, tau_nr, ref);
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  detail::reference_system(array, tau_nr, ref, a, b);
  LocalizationResult out;
  out.ranges = detail::nan_ranges(array);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols()) {
    out.status = SolverStatus::rank_deficient;
    out.x_hat = Eigen::VectorXd::Constant(array.dim(), std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  const Eigen::VectorXd y = qr.solve(b);
  out.x_hat = y.head(array.dim()) + array.position(ref);
  out.ranges[ref] = y[array.dim()];
  out.residual_norm = (a * y - b).norm();
  return out;
}

/// Squared-range-difference least squares: minimise ||A y - b||^2 subject to
/// y^T D y = 0 with y = (x - m_ref, r), D = diag(1, ..., 1, -1).
///
/// With A^T A = L L^T and L^-1 D L^-T = Q diag(mu) Q^T the multiplier
/// equation phi(lambda) = y(lambda)^T D y(lambda) = 0 becomes
///   phi(lambda) = sum_k mu_k g_k^2 / (1 + lambda mu_k)^2,   g = Q^T L^-1 A^T b,
/// which is strictly decreasing on the interval where A^T A + lambda D > 0.
inline LocalizationResult srd_ls_locate(const SensorArray& array, const Eigen::VectorXd& tau_nr,
                                        int ref = 0) {
  detail::check_reference_input(array, tau_nr, ref);
  const int dim = array.dim();
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  detail::reference_system(array, tau_nr, ref, a, b);

  LocalizationResult out;
  out.ranges = detail::nan_ranges(array);
  const Eigen::MatrixXd ata = a.transpose() * a;
  const Eigen::LLT<Eigen::MatrixXd> llt(ata);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (llt.info() != Eigen::Success || qr.rank() < a.cols()) {
    out.status = SolverStatus::rank_deficient;
    out.x_hat = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  Eigen::VectorXd dvec = Eigen::VectorXd::Ones(dim + 1);
  dvec[dim] = -1.0;
  // M = L^-1 D L^-T
  const Eigen::MatrixXd linv_d = llt.matrixL().solve(Eigen::MatrixXd(dvec.asDiagonal()));
  const Eigen::MatrixXd m = llt.matrixL().solve(linv_d.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  const Eigen::VectorXd mu = eig.eigenvalues();
  const Eigen::VectorXd g = eig.eigenvectors().transpose() * llt.matrixL().solve(a.transpose() * b);

  auto phi = [&](double lambda) {
    return (mu.array() * g.array().square() / (1.0 + lambda * mu.array()).square()).sum();
  };
  auto y_of = [&](double lambda) -> Eigen::VectorXd {
    const Eigen::VectorXd z = eig.eigenvectors() * (g.array() / (1.0 + lambda * mu.array())).matrix();
    return llt.matrixL().transpose().solve(z);
  };

  auto finish = [&](const Eigen::VectorXd& y, SolverStatus status) {
    out.x_hat = y.head(dim) + array.position(ref);
    out.ranges[ref] = y[dim];
    out.residual_norm = (a * y - b).norm();
    out.status = status;
    if (status == SolverStatus::converged && y[dim] < 0.0) out.status = SolverStatus::negative_range;
    return out;
  };

  constexpr double kPhiTol = 1e-12;
  constexpr int kMaxIter = 200;
  const double mu_max = mu.maxCoeff();
  const double mu_min = mu.minCoeff();
  if (!(mu_max > 0.0 && mu_min < 0.0)) return finish(qr.solve(b), SolverStatus::no_root);
  const double lo_bound = -1.0 / mu_max;
  const double hi_bound = -1.0 / mu_min;

  const double phi0 = phi(0.0);
  if (std::abs(phi0) <= kPhiTol) return finish(y_of(0.0), SolverStatus::converged);

  // Bracket the root between 0 and the pole on the side where phi changes sign.
  const bool positive = phi0 > 0.0;
  double lo = 0.0, hi = 0.0, phi_lo = phi0, phi_hi = phi0;
  const double edge = positive ? hi_bound : lo_bound;
  double inner = 0.0, phi_inner = phi0;
  double step = edge;
  bool bracketed = false;
  for (int k = 0; k < 80 && !bracketed; ++k) {
    step *= 0.5;
    const double probe = edge - step;  // approaches the pole geometrically
    const double value = phi(probe);
    if (!std::isfinite(value)) break;
    if ((value < 0.0) == positive) {
      if (positive) {
        lo = inner, phi_lo = phi_inner, hi = probe, phi_hi = value;
      } else {
        lo = probe, phi_lo = value, hi = inner, phi_hi = phi_inner;
      }
      bracketed = true;
    } else {
      inner = probe;
      phi_inner = value;
    }
  }
  if (!bracketed) return finish(qr.solve(b), SolverStatus::no_root);

  // Illinois-modified regula falsi, falling back to bisection.
  int side = 0;
  double lambda = 0.5 * (lo + hi);
  int iter = 0;
  for (; iter < kMaxIter; ++iter) {
    double trial = (lo * phi_hi - hi * phi_lo) / (phi_hi - phi_lo);
    if (!(trial > lo && trial < hi)) trial = 0.5 * (lo + hi);
    lambda = trial;
    const double value = phi(lambda);
    if (std::abs(value) <= kPhiTol || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                                                       std::max(1.0, std::abs(lambda)))
      break;
    if (value > 0.0) {
      lo = lambda, phi_lo = value;
      if (side == 1) phi_hi *= 0.5;
      side = 1;
    } else {
      hi = lambda, phi_hi = value;
      if (side == -1) phi_lo *= 0.5;
      side = -1;
    }
  }
  out.iterations = iter + 1;
  return finish(y_of(lambda), iter < kMaxIter ? SolverStatus::converged : SolverStatus::max_iterations);
}

/// Linear least squares over x and one range per lower-index sensor, using
/// the given pairs.
inline LocalizationResult gs_locate(const SensorArray& array, const std::vector<Pair>& pairs,
                                    const Eigen::VectorXd& tau) {
  detail::require(tau.size() == static_cast<Eigen::Index>(pairs.size()),
                  "one TDOA per pair is required");
  detail::require(tau.allFinite(), "TDOAs must be finite");
  const int dim = array.dim();
  std::vector<int> column(static_cast<std::size_t>(array.num_sensors()), -1);
  int unknowns = dim;
  for (const Pair& p : pairs) {
    detail::require(p.j > p.i && p.i >= 0 && p.j <= array.n(), "invalid pair " + to_string(p));
    if (column[static_cast<std::size_t>(p.i)] < 0) column[static_cast<std::size_t>(p.i)] = 0;
  }
  for (auto& c : column)
    if (c == 0) c = unknowns++;

  LocalizationResult out;
  out.ranges = detail::nan_ranges(array);
  // Centre coordinates on the array centroid for conditioning.
  const Eigen::VectorXd centre = array.positions().rowwise().mean();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pairs.size()), unknowns);
  Eigen::VectorXd b(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t row = 0; row < pairs.size(); ++row) {
    const auto r = static_cast<Eigen::Index>(row);
    const Pair& p = pairs[row];
    const Eigen::VectorXd mj = array.position(p.j) - centre;
    const Eigen::VectorXd mi = array.position(p.i) - centre;
    const double t = tau[r];
    a.row(r).head(dim) = 2.0 * (mj - mi).transpose();
    a(r, column[static_cast<std::size_t>(p.i)]) = 2.0 * t;
    b[r] = mj.squaredNorm() - mi.squaredNorm() - t * t;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols()) {
    out.status = SolverStatus::rank_deficient;
    out.x_hat = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  const Eigen::VectorXd y = qr.solve(b);
  out.x_hat = y.head(dim) + centre;
  for (int k = 0; k < array.num_sensors(); ++k)
    if (column[static_cast<std::size_t>(k)] >= 0) out.ranges[k] = y[column[static_cast<std::size_t>(k)]];
  out.residual_norm = (a * y - b).norm();
  return out;
}

inline LocalizationResult gs_locate(const SensorArray& array, const TdoaVector& tau_full) {
  detail::require(tau_full.n == array.n(), "TDOA vector does not match the array");
  return gs_locate(array, array.pairs(), tau_full.values);
}

/// ||tau_hat - tau(x)||^2 in the Sigma^-1 metric, over the given pairs.
inline double ml_cost(const SensorArray& array, const std::vector<Pair>& pairs,
                      const Eigen::VectorXd& tau_hat, const NoiseSpec& noise, const Point& x) {
  detail::require(tau_hat.size() == noise.size() &&
                      tau_hat.size() == static_cast<Eigen::Index>(pairs.size()),
                  "TDOA vector, pairs and covariance sizes differ");
  return noise.whiten(tau_hat - tdoa_pairs(array, x, pairs)).squaredNorm();
}

inline double ml_cost(const SensorArray& array, const TdoaVector& tau_hat, const NoiseSpec& noise,
                      const Point& x) {
  return ml_cost(array, array.pairs(), tau_hat.values, noise, x);
}

/// Gauss-Newton with backtracking on ml_cost, started at x0. The cost is
/// non-increasing across iterates.
inline LocalizationResult ml_refine(const SensorArray& array, const std::vector<Pair>& pairs,
                                    const Eigen::VectorXd& tau_hat, const NoiseSpec& noise,
                                    const Point& x0, int max_iterations = 100,
                                    double gradient_tol = 1e-10) {
  detail::check_source(array, x0);
  LocalizationResult out;
  out.ranges = detail::nan_ranges(array);
  Point x = x0;
  // When tau_hat is far outside the image the cost keeps falling towards a
  // direction at infinity; past this radius the run is reported as diverged.
  const Eigen::VectorXd centre = array.positions().rowwise().mean();
  const double aperture = (array.positions().colwise() - centre).colwise().norm().maxCoeff();
  const double escape = 1e3 * std::max(aperture, (x0 - centre).norm());
  double cost = ml_cost(array, pairs, tau_hat, noise, x);
  out.cost_trace.push_back(cost);
  out.status = SolverStatus::max_iterations;
  int iter = 0;
  try {
    for (; iter < max_iterations; ++iter) {
      const Eigen::MatrixXd jw = noise.whiten(tdoa_jacobian(array, x, pairs));
      const Eigen::VectorXd rw = noise.whiten(tau_hat - tdoa_pairs(array, x, pairs));
      const Eigen::VectorXd grad = -2.0 * jw.transpose() * rw;
      if (grad.norm() <= gradient_tol) {
        out.status = SolverStatus::converged;
        break;
      }
      const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jw);
      if (qr.rank() < jw.cols()) {
        out.status = SolverStatus::singular;
        break;
      }
      const Eigen::VectorXd step = qr.solve(rw);
      double alpha = 1.0;
      bool accepted = false;
      for (int half = 0; half < 40; ++half, alpha *= 0.5) {
        const Point trial = x + alpha * step;
        const double trial_cost = ml_cost(array, pairs, tau_hat, noise, trial);
        if (trial_cost <= cost) {
          x = trial;
          cost = trial_cost;
          accepted = true;
          break;
        }
      }
      if ((x - centre).norm() > escape) {
        out.cost_trace.push_back(cost);
        out.status = SolverStatus::diverged;
        ++iter;
        break;
      }
      if (!accepted || alpha * step.norm() <= 1e-15 * (1.0 + x.norm())) {
        // No further decrease representable: a numerical stationary point.
        if (accepted) out.cost_trace.push_back(cost);
        out.status = SolverStatus::converged;
        ++iter;
        break;
      }
      out.cost_trace.push_back(cost);
    }
  } catch (const SingularityError&) {
    out.status = SolverStatus::singular;
  }
  out.x_hat = x;
  out.iterations = iter;
  out.residual_norm = std::sqrt(cost);
  return out;
}

inline LocalizationResult ml_refine(const SensorArray& array, const TdoaVector& tau_hat,
                                    const NoiseSpec& noise, const Point& x0) {
  return ml_refine(array, array.pairs(), tau_hat.values, noise, x0);
}

}  // namespace tdoa
