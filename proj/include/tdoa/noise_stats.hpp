#pragma once

// Noise models, covariance algebra of the denoising projection, the
// Cramer-Rao bound, and first-order propagation of TDOA noise through the
// localizer cost functions.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tdoa/array_geometry.hpp"
#include "tdoa/errors.hpp"
#include "tdoa/localizers.hpp"
#include "tdoa/tdoa_space.hpp"

namespace tdoa {

/// Additive TDOA noise. All parameters in meters.
struct NoiseModel {
  enum class Kind { gaussian, uniform, uniform_plus_gaussian, laplacian };

  Kind kind = Kind::gaussian;
  double sigma = 0.0;       ///< gaussian / mixture / laplacian standard deviation
  double half_width = 0.0;  ///< uniform support is [-half_width, half_width]
  /// Optional full covariance for correlated Gaussian noise (empty = sigma^2 I).
  Eigen::MatrixXd covariance;

  static NoiseModel gaussian(double sigma) { return {Kind::gaussian, sigma, 0.0, {}}; }
  static NoiseModel gaussian(Eigen::MatrixXd cov) { return {Kind::gaussian, 0.0, 0.0, std::move(cov)}; }
  static NoiseModel uniform(double half_width) { return {Kind::uniform, 0.0, half_width, {}}; }
  static NoiseModel uniform_plus_gaussian(double half_width, double sigma) {
    return {Kind::uniform_plus_gaussian, sigma, half_width, {}};
  }
  static NoiseModel laplacian(double sigma) { return {Kind::laplacian, sigma, 0.0, {}}; }

  /// Half-width of the rounding error of a TDOA picked on a grid sampled at
  /// `sample_rate`, expressed as a range: speed / (2 fs).
  static double sampling_half_width(double speed, double sample_rate) {
    return speed / (2.0 * sample_rate);
  }

  void validate(int q) const {
    switch (kind) {
      case Kind::gaussian:
        if (covariance.size() > 0) {
          detail::require(covariance.rows() == q && covariance.cols() == q,
                          "noise covariance must be q x q");
          (void)NoiseSpec(covariance);
        } else {
          detail::require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be >= 0");
        }
        break;
      case Kind::uniform:
        detail::require(half_width > 0.0 && std::isfinite(half_width), "half_width must be > 0");
        break;
      case Kind::uniform_plus_gaussian:
        detail::require(half_width > 0.0 && std::isfinite(half_width), "half_width must be > 0");
        detail::require(sigma > 0.0 && std::isfinite(sigma), "sigma must be > 0");
        break;
      case Kind::laplacian:
        detail::require(sigma > 0.0 && std::isfinite(sigma), "sigma must be > 0");
        break;
    }
  }

  /// Per-coordinate variance of the i.i.d. models.
  double variance() const {
    switch (kind) {
      case Kind::gaussian: return sigma * sigma;
      case Kind::uniform: return half_width * half_width / 3.0;
      case Kind::uniform_plus_gaussian: return half_width * half_width / 3.0 + sigma * sigma;
      case Kind::laplacian: return sigma * sigma;
    }
    return 0.0;
  }

  /// Second-moment covariance; this is also the matrix used to build the
  /// denoising projector for non-Gaussian models.
  Eigen::MatrixXd second_moment(int q) const {
    if (kind == Kind::gaussian && covariance.size() > 0) return covariance;
    return Eigen::MatrixXd::Identity(q, q) * variance();
  }
};

inline std::string to_string(NoiseModel::Kind k) {
  switch (k) {
    case NoiseModel::Kind::gaussian: return "gaussian";
    case NoiseModel::Kind::uniform: return "uniform";
    case NoiseModel::Kind::uniform_plus_gaussian: return "uniform_plus_gaussian";
    case NoiseModel::Kind::laplacian: return "laplacian";
  }
  return "unknown";
}

/// One draw of q noise values from `rng`.
template <typename Rng>
Eigen::VectorXd sample_noise(const NoiseModel& model, int q, Rng& rng) {
  detail::require(q >= 1, "q must be positive");
  Eigen::VectorXd out(q);
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (model.kind) {
    case NoiseModel::Kind::gaussian:
      if (model.covariance.size() > 0) {
        detail::require(model.covariance.rows() == q, "noise covariance must be q x q");
        for (int k = 0; k < q; ++k) out[k] = normal(rng);
        const Eigen::LLT<Eigen::MatrixXd> llt(model.covariance);
        if (llt.info() != Eigen::Success) throw NotPositiveDefinite("noise covariance is not SPD");
        return llt.matrixL() * out;
      }
      for (int k = 0; k < q; ++k) out[k] = model.sigma * normal(rng);
      return out;
    case NoiseModel::Kind::uniform: {
      std::uniform_real_distribution<double> u(-model.half_width, model.half_width);
      for (int k = 0; k < q; ++k) out[k] = u(rng);
      return out;
    }
    case NoiseModel::Kind::uniform_plus_gaussian: {
      std::uniform_real_distribution<double> u(-model.half_width, model.half_width);
      for (int k = 0; k < q; ++k) {
        const double uk = u(rng);
        out[k] = uk + model.sigma * normal(rng);
      }
      return out;
    }
    case NoiseModel::Kind::laplacian: {
      // Difference of two exponentials with scale b is Laplace(0, b); the
      // standard deviation is b sqrt(2).
      const double scale = model.sigma / std::sqrt(2.0);
      std::exponential_distribution<double> e(1.0);
      for (int k = 0; k < q; ++k) {
        const double e1 = e(rng);
        const double e2 = e(rng);
        out[k] = scale * (e1 - e2);
      }
      return out;
    }
  }
  return out;
}

struct CovarianceReport {
  Eigen::MatrixXd sigma_in;
  Eigen::MatrixXd sigma_out;  ///< P Sigma P^T
  double min_eig_diff = 0.0;  ///< smallest eigenvalue of sigma_in - sigma_out
  Eigen::VectorXd std_in;
  Eigen::VectorXd std_out;
};

inline CovarianceReport denoised_covariance(const ProjectionOperator& proj, const NoiseSpec& noise) {
  detail::require(proj.matrix.rows() == noise.size(), "projector and covariance sizes differ");
  CovarianceReport out;
  out.sigma_in = noise.sigma();
  out.sigma_out = proj.matrix * noise.sigma() * proj.matrix.transpose();
  out.sigma_out = 0.5 * (out.sigma_out + out.sigma_out.transpose()).eval();
  const Eigen::MatrixXd diff = out.sigma_in - out.sigma_out;
  out.min_eig_diff =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (diff + diff.transpose()), Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  out.std_in = out.sigma_in.diagonal().cwiseSqrt();
  out.std_out = out.sigma_out.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

struct CrlbResult {
  Eigen::MatrixXd fim;    ///< J^T Sigma^-1 J
  Eigen::MatrixXd bound;  ///< FIM^-1
  double rlb = 0.0;       ///< sqrt(trace(FIM^-1))
};

/// Cramer-Rao bound for the additive Gaussian model over the given pairs.
inline CrlbResult crlb(const SensorArray& array, const Point& x, const NoiseSpec& noise,
                       const std::vector<Pair>& pairs) {
  detail::require(noise.size() == static_cast<Eigen::Index>(pairs.size()),
                  "covariance size must match the number of pairs");
  const Eigen::MatrixXd jw = noise.whiten(tdoa_jacobian(array, x, pairs));
  CrlbResult out;
  out.fim = jw.transpose() * jw;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.fim);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * hi)) throw SingularityError("Fisher information matrix is singular");
  out.bound = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
              eig.eigenvectors().transpose();
  out.rlb = std::sqrt(out.bound.trace());
  return out;
}

inline CrlbResult crlb(const SensorArray& array, const Point& x, const NoiseSpec& noise) {
  return crlb(array, x, noise, array.pairs());
}

namespace detail {

/// Cost f(theta, c) of a localizer, with c the complete TDOA vector, and the
/// value of theta at the noiseless minimiser for source x.
struct CostModel {
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> f;
  Eigen::VectorXd theta_star;
};

inline CostModel cost_model(Localizer algo, const SensorArray& array, const Point& x,
                            const NoiseSpec& noise, int ref) {
  const int n = array.n();
  const int dim = array.dim();
  const Eigen::VectorXd ranges = detail::ranges(array, x);
  CostModel out;
  switch (algo) {
    case Localizer::ls:
    case Localizer::srdls: {
      const Eigen::VectorXd origin = array.position(ref);
      auto residual = [&array, origin, n, dim, ref](const Eigen::VectorXd& xr, double r,
                                                    const Eigen::VectorXd& c) {
        double total = 0.0;
        for (int k = 0; k <= n; ++k) {
          if (k == ref) continue;
          const Eigen::VectorXd mk = array.position(k) - origin;
          const double t = signed_tdoa(c, n, k, ref);
          const double e = 2.0 * mk.dot(xr) + 2.0 * t * r - (mk.squaredNorm() - t * t);
          total += e * e;
        }
        (void)dim;
        return total;
      };
      if (algo == Localizer::ls) {
        out.f = [residual, dim](const Eigen::VectorXd& th, const Eigen::VectorXd& c) {
          return residual(th.head(dim), th[dim], c);
        };
        out.theta_star.resize(dim + 1);
        out.theta_star << x - origin, ranges[ref];
      } else {
        out.f = [residual](const Eigen::VectorXd& th, const Eigen::VectorXd& c) {
          return residual(th, th.norm(), c);
        };
        out.theta_star = x - origin;
      }
      break;
    }
    case Localizer::gs: {
      out.f = [&array, n, dim](const Eigen::VectorXd& th, const Eigen::VectorXd& c) {
        double total = 0.0;
        Eigen::Index row = 0;
        for (const Pair& p : canonical_pairs(n)) {
          const Eigen::VectorXd mj = array.position(p.j);
          const Eigen::VectorXd mi = array.position(p.i);
          const double t = c[row++];
          const double e = 2.0 * (mj - mi).dot(th.head(dim)) + 2.0 * t * th[dim + p.i] -
                           (mj.squaredNorm() - mi.squaredNorm() - t * t);
          total += e * e;
        }
        return total;
      };
      out.theta_star.resize(dim + n);
      out.theta_star << x, ranges.head(n);
      break;
    }
    case Localizer::ml: {
      out.f = [&array, &noise](const Eigen::VectorXd& th, const Eigen::VectorXd& c) {
        return noise.whiten(c - tdoa_full(array, th).values).squaredNorm();
      };
      out.theta_star = x;
      break;
    }
  }
  return out;
}

}  // namespace detail

/// First-order sensitivity A(x) = d x_hat / d tau (dim x q) of a localizer at
/// the noiseless point, from the implicit function theorem
/// A = -(d2f/dtheta2)^-1 d2f/(dtheta dc) with central finite differences.
/// Columns of pairs a localizer does not read are zero.
inline Eigen::MatrixXd sensitivity_matrix(Localizer algo, const SensorArray& array, const Point& x,
                                          const NoiseSpec& noise, int ref = 0) {
  detail::require(noise.size() == array.q(), "covariance must be q x q");
  detail::require(ref >= 0 && ref <= array.n(), "reference index out of range");
  for (int k = 0; k < array.num_sensors(); ++k)
    if ((x - array.position(k)).norm() <= kSensorCoincidenceTol)
      throw SingularityError("source coincides with a sensor");
  const detail::CostModel model = detail::cost_model(algo, array, x, noise, ref);
  const Eigen::VectorXd c0 = tdoa_full(array, x).values;
  const Eigen::VectorXd& t0 = model.theta_star;
  const auto p = t0.size();
  const auto q = c0.size();
  constexpr double kRelStep = 1e-5;
  auto step = [](double v) { return kRelStep * std::max(1.0, std::abs(v)); };

  Eigen::MatrixXd h_tt(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a; b < p; ++b) {
      const double ha = step(t0[a]);
      const double hb = step(t0[b]);
      auto f = [&](double sa, double sb) {
        Eigen::VectorXd th = t0;
        th[a] += sa * ha;
        th[b] += sb * hb;
        return model.f(th, c0);
      };
      h_tt(a, b) = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4.0 * ha * hb);
      h_tt(b, a) = h_tt(a, b);
    }
  }
  Eigen::MatrixXd h_tc(p, q);
  for (Eigen::Index a = 0; a < p; ++a) {
    const double ha = step(t0[a]);
    for (Eigen::Index l = 0; l < q; ++l) {
      const double hl = step(c0[l]);
      auto f = [&](double sa, double sl) {
        Eigen::VectorXd th = t0;
        Eigen::VectorXd c = c0;
        th[a] += sa * ha;
        c[l] += sl * hl;
        return model.f(th, c);
      };
      h_tc(a, l) = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4.0 * ha * hl);
    }
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(h_tt);
  if (!lu.isInvertible()) throw SingularityError("cost Hessian is singular at the source");
  const Eigen::MatrixXd dtheta = -lu.solve(h_tc);
  return dtheta.topRows(array.dim());
}

/// A Sigma A^T
inline Eigen::MatrixXd propagate_covariance(const Eigen::MatrixXd& sensitivity,
                                            const Eigen::MatrixXd& tdoa_cov) {
  detail::require(sensitivity.cols() == tdoa_cov.rows() && tdoa_cov.rows() == tdoa_cov.cols(),
                  "sensitivity and covariance sizes differ");
  const Eigen::MatrixXd out = sensitivity * tdoa_cov * sensitivity.transpose();
  return 0.5 * (out + out.transpose());
}

/// First-order covariance of a localizer's estimate under TDOA noise `noise`.
inline Eigen::MatrixXd propagate_covariance(Localizer algo, const SensorArray& array, const Point& x,
                                            const NoiseSpec& noise, int ref = 0) {
  return propagate_covariance(sensitivity_matrix(algo, array, x, noise, ref), noise.sigma());
}

}  // namespace tdoa
