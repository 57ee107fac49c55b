#pragma once

// Feasible linear subspace V_n of the TDOA space and the relaxed denoising
// projection onto it under the Fisher (Sigma^-1) scalar product.
//
// Sign convention: each zero-sum constraint is written as
//   -tau_i0 + tau_j0 - tau_ji = 0,   0 < i < j <= n.
// Some texts write the planar case as tau_10 - tau_20 + tau_21 = 0; that is
// the same plane with the normal flipped.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "tdoa/array_geometry.hpp"
#include "tdoa/errors.hpp"

namespace tdoa {

/// (q - n) x q matrix C with V_n = ker(C). One row per pair (j,i), i >= 1,
/// in canonical order.
inline Eigen::MatrixXd constraint_matrix(int n) {
  detail::require(n >= 2, "constraint_matrix needs n >= 2");
  const int q = pair_count(n);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(q - n, q);
  Eigen::Index row = 0;
  for (const Pair& p : canonical_pairs(n)) {
    if (p.i == 0) continue;
    c(row, pair_index(n, {p.i, 0})) = -1.0;
    c(row, pair_index(n, {p.j, 0})) = 1.0;
    c(row, pair_index(n, p)) = -1.0;
    ++row;
  }
  return c;
}

/// q x n matrix G with tau = G * tau_ref, where tau_ref holds the TDOAs
/// tau_{k,ref} for k != ref in ascending k. For ref = 0 this is [I_n; Y].
inline Eigen::MatrixXd reduction_matrix(int n, int ref = 0) {
  detail::require(n >= 2, "reduction_matrix needs n >= 2");
  detail::require(ref >= 0 && ref <= n, "reference index out of range");
  const int q = pair_count(n);
  auto column = [ref](int k) { return k < ref ? k : k - 1; };
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(q, n);
  Eigen::Index row = 0;
  for (const Pair& p : canonical_pairs(n)) {
    // tau_ji = tau_{j,ref} - tau_{i,ref}
    if (p.j != ref) g(row, column(p.j)) += 1.0;
    if (p.i != ref) g(row, column(p.i)) -= 1.0;
    ++row;
  }
  return g;
}

/// Max-norm of C * tau: zero exactly on V_n.
inline double subspace_residual(const TdoaVector& tau) {
  if (tau.n < 2) return 0.0;
  return (constraint_matrix(tau.n) * tau.values).lpNorm<Eigen::Infinity>();
}

/// Noise covariance Sigma (SPD). Holds its Cholesky factor so that the Fisher
/// product is evaluated by triangular solves, never by an explicit inverse.
class NoiseSpec {
public:
  NoiseSpec() = default;

  explicit NoiseSpec(Eigen::MatrixXd sigma, std::string label = "gaussian")
      : sigma_(std::move(sigma)), label_(std::move(label)) {
    detail::require(sigma_.rows() == sigma_.cols() && sigma_.rows() > 0,
                    "covariance must be a non-empty square matrix");
    detail::require(sigma_.allFinite(), "covariance must be finite");
    const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
    if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw InvalidArgument("covariance is not symmetric");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    // Semidefinite covariances are rejected rather than regularised.
    if (!(lo > 0.0) || lo <= 1e-14 * hi)
      throw NotPositiveDefinite("covariance is not positive definite (min eigenvalue " +
                                std::to_string(lo) + ")");
    llt_.compute(sigma_);
    if (llt_.info() != Eigen::Success) throw NotPositiveDefinite("Cholesky factorisation failed");
  }

  static NoiseSpec isotropic(int q, double sigma) {
    detail::require(sigma > 0.0, "noise standard deviation must be positive");
    return NoiseSpec(Eigen::MatrixXd::Identity(q, q) * sigma * sigma);
  }

  const Eigen::MatrixXd& sigma() const { return sigma_; }
  Eigen::Index size() const { return sigma_.rows(); }
  const std::string& label() const { return label_; }

  /// L^-1 v with Sigma = L L^T. Mahalanobis geometry becomes Euclidean here.
  template <typename Derived>
  Eigen::MatrixXd whiten(const Eigen::MatrixBase<Derived>& v) const {
    return llt_.matrixL().solve(v);
  }
  template <typename Derived>
  Eigen::MatrixXd color(const Eigen::MatrixBase<Derived>& w) const {
    return llt_.matrixL() * w;
  }
  /// Sigma^-1 B via the factorisation.
  template <typename Derived>
  Eigen::MatrixXd solve(const Eigen::MatrixBase<Derived>& b) const {
    return llt_.solve(b);
  }

  double fisher_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return whiten(u).col(0).dot(whiten(v).col(0));
  }

private:
  Eigen::MatrixXd sigma_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  std::string label_;
};

/// sqrt(v^T Sigma^-1 v)
inline double mahalanobis_norm(const Eigen::VectorXd& v, const NoiseSpec& noise) {
  detail::require(v.size() == noise.size(), "vector and covariance sizes differ");
  return noise.whiten(v).norm();
}

/// Projector onto a subspace of R^q, orthogonal for <.,.>_{Sigma^-1}.
struct ProjectionOperator {
  Eigen::MatrixXd matrix;  ///< q x q, acts on column vectors
  Eigen::MatrixXd basis;   ///< q x dim, columns orthonormal under Sigma^-1
  NoiseSpec noise;

  Eigen::Index rank() const { return basis.cols(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return matrix * v; }
};

enum class ProjectionMethod { gram_schmidt, closed_form };

namespace detail {

/// Modified Gram-Schmidt on the columns of `w` (Euclidean), with a second pass
/// whenever a column loses more than half its norm to earlier directions.
/// Columns must be linearly independent.
inline Eigen::MatrixXd modified_gram_schmidt(Eigen::MatrixXd w) {
  for (Eigen::Index k = 0; k < w.cols(); ++k) {
    const double before = w.col(k).norm();
    for (int pass = 0; pass < 2; ++pass) {
      const double start = w.col(k).norm();
      for (Eigen::Index j = 0; j < k; ++j) w.col(k) -= w.col(j).dot(w.col(k)) * w.col(j);
      if (w.col(k).norm() > 0.5 * start) break;
    }
    const double after = w.col(k).norm();
    if (!(after > 1e-12 * std::max(before, 1e-300)))
      throw RankDeficientError("Gram-Schmidt input vectors are linearly dependent");
    w.col(k) /= after;
  }
  return w;
}

}  // namespace detail

/// Orthonormalise the columns of `spanning` under <.,.>_{Sigma^-1} and build
/// P = sum_k v_k <., v_k>. Columns must be independent.
inline ProjectionOperator project_onto_span(const Eigen::MatrixXd& spanning,
                                            const NoiseSpec& noise) {
  detail::require(spanning.rows() == noise.size(), "basis and covariance sizes differ");
  const Eigen::MatrixXd w = detail::modified_gram_schmidt(noise.whiten(spanning));
  Eigen::MatrixXd v = noise.color(w);
  // Sigma^-1 V = L^-T W
  const Eigen::MatrixXd fisher_dual = noise.solve(v);
  ProjectionOperator out;
  out.matrix = v * fisher_dual.transpose();
  out.basis = std::move(v);
  out.noise = noise;
  return out;
}

/// Projector onto V_n for q = n(n+1)/2 TDOAs with covariance `noise`.
///   gram_schmidt: orthonormal basis of ker(C) under the Fisher product.
///   closed_form:  P = G (G^T Sigma^-1 G)^-1 G^T Sigma^-1.
inline ProjectionOperator projection_operator(int n, const NoiseSpec& noise,
                                              ProjectionMethod method = ProjectionMethod::closed_form) {
  detail::require(n >= 2, "projection_operator needs n >= 2");
  detail::require(noise.size() == pair_count(n), "covariance must be q x q with q = n(n+1)/2");
  if (method == ProjectionMethod::gram_schmidt) {
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(constraint_matrix(n));
    const Eigen::MatrixXd kernel = lu.kernel();
    if (kernel.cols() != n) throw NumericalError("unexpected dimension of ker(C)");
    return project_onto_span(kernel, noise);
  }
  const Eigen::MatrixXd g = reduction_matrix(n);
  const Eigen::MatrixXd sinv_g = noise.solve(g);   // Sigma^-1 G
  const Eigen::MatrixXd normal = g.transpose() * sinv_g;
  const Eigen::LLT<Eigen::MatrixXd> normal_llt(normal);
  if (normal_llt.info() != Eigen::Success) throw NumericalError("G^T Sigma^-1 G is singular");
  ProjectionOperator out;
  out.matrix = g * normal_llt.solve(sinv_g.transpose());
  // Basis: G orthonormalised under the same metric.
  out.basis = noise.color(detail::modified_gram_schmidt(noise.whiten(g)));
  out.noise = noise;
  return out;
}

/// Relaxed denoising: P * tau_hat.
inline TdoaVector denoise(const TdoaVector& tau_hat, const ProjectionOperator& proj) {
  detail::require(tau_hat.size() == proj.matrix.rows(), "TDOA vector and projector sizes differ");
  return {tau_hat.n, proj.matrix * tau_hat.values};
}

/// Weighted least-squares non-redundant TDOAs with respect to sensor `ref`:
/// (G^T Sigma^-1 G)^-1 G^T Sigma^-1 tau_hat.
inline Eigen::VectorXd nonredundant(const TdoaVector& tau_hat, const NoiseSpec& noise, int ref = 0) {
  detail::require(tau_hat.size() == noise.size(), "TDOA vector and covariance sizes differ");
  const Eigen::MatrixXd g = reduction_matrix(tau_hat.n, ref);
  const Eigen::MatrixXd sinv_g = noise.solve(g);
  const Eigen::MatrixXd normal = g.transpose() * sinv_g;
  const Eigen::LLT<Eigen::MatrixXd> normal_llt(normal);
  return normal_llt.solve(sinv_g.transpose() * tau_hat.values);
}

}  // namespace tdoa
