#pragma once

// Relaxed denoising when only a subset of the q TDOAs is measured.

#include <Eigen/Dense>

#include <algorithm>
#include <string>
#include <vector>

#include "tdoa/array_geometry.hpp"
#include "tdoa/errors.hpp"
#include "tdoa/tdoa_space.hpp"

namespace tdoa {

/// Singular values below this fraction of the largest are treated as zero
/// when reducing a spanning set to a basis.
inline constexpr double kRankThreshold = 1e-9;

/// Set S of missing pairs for an array of n + 1 sensors.
class IndexSet {
public:
  IndexSet() = default;

  IndexSet(int n, std::vector<Pair> missing) : n_(n), missing_(std::move(missing)) {
    detail::require(n >= 2, "IndexSet needs n >= 2");
    std::vector<int> idx;
    idx.reserve(missing_.size());
    for (const Pair& p : missing_) idx.push_back(pair_index(n_, p));
    std::sort(idx.begin(), idx.end());
    detail::require(std::adjacent_find(idx.begin(), idx.end()) == idx.end(),
                    "duplicate pair in missing set");
    missing_index_ = std::move(idx);
  }

  /// The complement of `available` within the canonical list.
  static IndexSet from_available(int n, const std::vector<Pair>& available) {
    std::vector<bool> keep(static_cast<std::size_t>(pair_count(n)), false);
    for (const Pair& p : available) {
      const auto k = static_cast<std::size_t>(pair_index(n, p));
      detail::require(!keep[k], "duplicate pair in available set");
      keep[k] = true;
    }
    std::vector<Pair> missing;
    const auto pairs = canonical_pairs(n);
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (!keep[k]) missing.push_back(pairs[k]);
    return IndexSet(n, std::move(missing));
  }

  int n() const { return n_; }
  int q() const { return pair_count(n_); }
  int s() const { return static_cast<int>(missing_.size()); }
  const std::vector<Pair>& missing() const { return missing_; }

  bool contains(const Pair& p) const {
    return std::binary_search(missing_index_.begin(), missing_index_.end(), pair_index(n_, p));
  }

  /// Canonical indices of the measured pairs, ascending.
  std::vector<int> available_indices() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(q() - s()));
    for (int k = 0; k < q(); ++k)
      if (!std::binary_search(missing_index_.begin(), missing_index_.end(), k)) out.push_back(k);
    return out;
  }

  friend bool operator==(const IndexSet& a, const IndexSet& b) {
    return a.n_ == b.n_ && a.missing_index_ == b.missing_index_;
  }

  std::vector<Pair> available_pairs() const {
    const auto pairs = canonical_pairs(n_);
    std::vector<Pair> out;
    for (int k : available_indices()) out.push_back(pairs[static_cast<std::size_t>(k)]);
    return out;
  }

private:
  int n_ = 0;
  std::vector<Pair> missing_;
  std::vector<int> missing_index_;
};

/// (q - s) x q matrix I_S: the identity with the rows of S removed.
inline Eigen::MatrixXd selection_matrix(const IndexSet& s) {
  const auto avail = s.available_indices();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(avail.size()), s.q());
  for (std::size_t r = 0; r < avail.size(); ++r) out(static_cast<Eigen::Index>(r), avail[r]) = 1.0;
  return out;
}

/// Measured TDOAs: canonical order with the S entries deleted.
struct PartialTdoaVector {
  Eigen::VectorXd values;
  IndexSet missing;

  PartialTdoaVector() = default;
  PartialTdoaVector(Eigen::VectorXd v, IndexSet s) : values(std::move(v)), missing(std::move(s)) {
    detail::require(values.size() == missing.q() - missing.s(),
                    "partial TDOA vector length must be q - s");
  }
};

/// p_S: drop the S entries of a complete vector.
inline PartialTdoaVector restrict_to(const TdoaVector& tau, const IndexSet& s) {
  detail::require(tau.n == s.n(), "TDOA vector and index set refer to different arrays");
  const auto avail = s.available_indices();
  Eigen::VectorXd v(static_cast<Eigen::Index>(avail.size()));
  for (std::size_t r = 0; r < avail.size(); ++r) v[static_cast<Eigen::Index>(r)] = tau.values[avail[r]];
  return {std::move(v), s};
}

/// Sigma_S = I_S Sigma I_S^T.
inline Eigen::MatrixXd restrict_covariance(const Eigen::MatrixXd& sigma, const IndexSet& s) {
  detail::require(sigma.rows() == s.q() && sigma.cols() == s.q(), "covariance must be q x q");
  const auto avail = s.available_indices();
  const auto m = static_cast<Eigen::Index>(avail.size());
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) out(a, b) = sigma(avail[a], avail[b]);
  return out;
}

/// Projector onto V_S = p_S(V_n) in R^{q-s}.
struct PartialProjection {
  Eigen::MatrixXd matrix;     ///< P_S, (q-s) x (q-s)
  Eigen::MatrixXd basis;      ///< (q-s) x dim_vs, orthonormal under Sigma_S^-1
  Eigen::MatrixXd selection;  ///< I_S
  Eigen::MatrixXd reduced_g;  ///< I_S G, maps reference TDOAs to measured ones
  int dim_vs = 0;
  IndexSet missing;
  NoiseSpec noise;
};

/// Number of singular values of `m` above kRankThreshold * largest.
inline int numerical_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  return static_cast<int>((sv.array() > kRankThreshold * sv[0]).count());
}

inline PartialProjection partial_subspace(const IndexSet& s, const NoiseSpec& noise_s) {
  detail::require(noise_s.size() == s.q() - s.s(), "Sigma_S must be (q-s) x (q-s)");
  PartialProjection out;
  out.missing = s;
  out.noise = noise_s;
  out.selection = selection_matrix(s);
  out.reduced_g = out.selection * reduction_matrix(s.n());
  if (out.selection.rows() == 0) {
    out.dim_vs = 0;
    return out;
  }
  // {I_S v_k} spans V_S; keep an independent set (leading left singular
  // vectors), then orthonormalise it in the Sigma_S^-1 metric.
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.reduced_g, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  out.dim_vs = sv[0] > 0.0 ? static_cast<int>((sv.array() > kRankThreshold * sv[0]).count()) : 0;
  if (out.dim_vs == 0) {
    out.matrix = Eigen::MatrixXd::Zero(out.selection.rows(), out.selection.rows());
    out.basis.resize(out.selection.rows(), 0);
    return out;
  }
  const ProjectionOperator proj = project_onto_span(svd.matrixU().leftCols(out.dim_vs), noise_s);
  out.matrix = proj.matrix;
  out.basis = proj.basis;
  return out;
}

inline PartialTdoaVector denoise_partial(const PartialTdoaVector& tau_s, const PartialProjection& pp) {
  detail::require(tau_s.values.size() == pp.matrix.rows() &&
                      tau_s.missing == pp.missing,
                  "partial TDOA vector and projector refer to different index sets");
  return {pp.matrix * tau_s.values, tau_s.missing};
}

/// The unique point of V_n whose measured coordinates equal `tau_s`
/// (least-squares when tau_s is off V_S). Needs dim V_S = n.
inline TdoaVector reconstruct_full(const PartialTdoaVector& tau_s, const PartialProjection& pp) {
  const int n = pp.missing.n();
  if (pp.dim_vs < n)
    throw RankDeficientError("measured pairs determine only " + std::to_string(pp.dim_vs) +
                             " of " + std::to_string(n) + " independent TDOAs");
  detail::require(tau_s.values.size() == pp.reduced_g.rows(), "partial TDOA vector length mismatch");
  const Eigen::VectorXd w = pp.reduced_g.colPivHouseholderQr().solve(tau_s.values);
  return {n, reduction_matrix(n) * w};
}

/// Covariance of reconstruct_full's output when its input has covariance
/// `input_cov` ((q-s) x (q-s)).
inline Eigen::MatrixXd reconstructed_covariance(const PartialProjection& pp,
                                                const Eigen::MatrixXd& input_cov) {
  const int n = pp.missing.n();
  if (pp.dim_vs < n) throw RankDeficientError("reconstruction is not unique");
  const Eigen::MatrixXd pinv = pp.reduced_g.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::MatrixXd g = reduction_matrix(n);
  return g * pinv * input_cov * pinv.transpose() * g.transpose();
}

}  // namespace tdoa
