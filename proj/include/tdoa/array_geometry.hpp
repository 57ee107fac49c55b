#pragma once

// Sensor arrays, the canonical ordering of sensor pairs, and the forward
// TDOA maps. Sound speed is normalised to 1 everywhere in the library, so a
// TDOA is a range difference in meters.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tdoa/errors.hpp"

namespace tdoa {

using Point = Eigen::VectorXd;

/// Distance below which a point is considered to coincide with a sensor.
inline constexpr double kSensorCoincidenceTol = 1e-9;

/// Ordered sensor pair (j, i) with j > i. The TDOA of the pair is
/// ||x - m_j|| - ||x - m_i||.
struct Pair {
  int j = 0;
  int i = 0;

  friend bool operator==(const Pair&, const Pair&) = default;
};

inline std::string to_string(const Pair& p) {
  return std::to_string(p.j) + "-" + std::to_string(p.i);
}

/// Number of pairs for n + 1 sensors.
constexpr int pair_count(int n) { return n * (n + 1) / 2; }

/// Canonical pair list for n + 1 sensors: (1,0), (2,0), ..., (n,0) followed
/// by the pairs (j,i), 1 <= i < j <= n, sorted by (i, j).
inline std::vector<Pair> canonical_pairs(int n) {
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(pair_count(n)));
  for (int j = 1; j <= n; ++j) pairs.push_back({j, 0});
  for (int i = 1; i < n; ++i)
    for (int j = i + 1; j <= n; ++j) pairs.push_back({j, i});
  return pairs;
}

/// Position of pair (j, i) in the canonical list.
inline int pair_index(int n, Pair p) {
  detail::require(p.j > p.i && p.i >= 0 && p.j <= n,
                  "invalid sensor pair " + to_string(p) + " for " +
                      std::to_string(n + 1) + " sensors");
  if (p.i == 0) return p.j - 1;
  // Pairs with lower index i' < i come first, n - i' of them each.
  int offset = n;
  for (int ip = 1; ip < p.i; ++ip) offset += n - ip;
  return offset + (p.j - p.i - 1);
}

/// n + 1 sensor positions in 2D or 3D, stored column-wise.
class SensorArray {
public:
  SensorArray() = default;

  explicit SensorArray(Eigen::MatrixXd positions) : positions_(std::move(positions)) {
    detail::require(positions_.rows() == 2 || positions_.rows() == 3,
                    "sensor positions must be 2D or 3D");
    detail::require(positions_.cols() >= 3, "at least 3 sensors are required");
    detail::require(positions_.allFinite(), "sensor positions must be finite");
    for (Eigen::Index a = 0; a < positions_.cols(); ++a)
      for (Eigen::Index b = a + 1; b < positions_.cols(); ++b)
        detail::require((positions_.col(a) - positions_.col(b)).norm() > kSensorCoincidenceTol,
                        "sensors " + std::to_string(a) + " and " + std::to_string(b) +
                            " coincide");
  }

  static SensorArray from_points(const std::vector<Point>& pts) {
    detail::require(!pts.empty(), "empty sensor list");
    Eigen::MatrixXd m(pts.front().size(), static_cast<Eigen::Index>(pts.size()));
    for (std::size_t k = 0; k < pts.size(); ++k) {
      detail::require(pts[k].size() == m.rows(), "mixed sensor dimensions");
      m.col(static_cast<Eigen::Index>(k)) = pts[k];
    }
    return SensorArray(std::move(m));
  }

  /// Compact 7-microphone cross: origin plus +-half_arm on each axis.
  static SensorArray cross7(double half_arm = 0.5) {
    Eigen::MatrixXd m(3, 7);
    m.setZero();
    m(0, 1) = half_arm;
    m(0, 2) = -half_arm;
    m(1, 3) = half_arm;
    m(1, 4) = -half_arm;
    m(2, 5) = half_arm;
    m(2, 6) = -half_arm;
    return SensorArray(std::move(m));
  }

  int dim() const { return static_cast<int>(positions_.rows()); }
  int num_sensors() const { return static_cast<int>(positions_.cols()); }
  /// Index of the last sensor; the array has n + 1 sensors.
  int n() const { return num_sensors() - 1; }
  int q() const { return pair_count(n()); }

  Eigen::VectorXd position(int k) const { return positions_.col(k); }
  const Eigen::MatrixXd& positions() const { return positions_; }
  std::vector<Pair> pairs() const { return canonical_pairs(n()); }

  double distance(int a, int b) const { return (positions_.col(a) - positions_.col(b)).norm(); }

  SensorArray translated(const Eigen::VectorXd& t) const {
    Eigen::MatrixXd m = positions_.colwise() + t;
    return SensorArray(std::move(m));
  }

private:
  Eigen::MatrixXd positions_;
};

/// A point of the TDOA space: q range differences in canonical pair order.
struct TdoaVector {
  int n = 0;
  Eigen::VectorXd values;

  TdoaVector() = default;
  TdoaVector(int n_, Eigen::VectorXd v) : n(n_), values(std::move(v)) {
    detail::require(values.size() == pair_count(n), "TDOA vector length does not match q");
  }
  Eigen::Index size() const { return values.size(); }
  double operator[](Eigen::Index k) const { return values[k]; }
};

namespace detail {

inline void check_source(const SensorArray& array, const Point& x) {
  require(x.size() == array.dim(), "source dimension " + std::to_string(x.size()) +
                                       " does not match array dimension " +
                                       std::to_string(array.dim()));
  require(x.allFinite(), "source position must be finite");
}

inline Eigen::VectorXd ranges(const SensorArray& array, const Point& x) {
  return (array.positions().colwise() - x).colwise().norm().transpose();
}

}  // namespace detail

/// Complete TDOA map: all q pairs in canonical order.
inline TdoaVector tdoa_full(const SensorArray& array, const Point& x) {
  detail::check_source(array, x);
  const Eigen::VectorXd r = detail::ranges(array, x);
  const int n = array.n();
  Eigen::VectorXd tau(array.q());
  Eigen::Index k = 0;
  for (const Pair& p : canonical_pairs(n)) tau[k++] = r[p.j] - r[p.i];
  return {n, std::move(tau)};
}

/// TDOAs of the given pairs, in the given order.
inline Eigen::VectorXd tdoa_pairs(const SensorArray& array, const Point& x,
                                  const std::vector<Pair>& pairs) {
  detail::check_source(array, x);
  const Eigen::VectorXd r = detail::ranges(array, x);
  Eigen::VectorXd tau(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Pair& p = pairs[k];
    detail::require(p.j > p.i && p.i >= 0 && p.j <= array.n(), "invalid pair " + to_string(p));
    tau[static_cast<Eigen::Index>(k)] = r[p.j] - r[p.i];
  }
  return tau;
}

/// Reduced map with respect to sensor `ref`: entry for every k != ref, in
/// ascending k, equal to ||x - m_k|| - ||x - m_ref||.
inline Eigen::VectorXd tdoa_reduced(const SensorArray& array, const Point& x, int ref = 0) {
  detail::require(ref >= 0 && ref <= array.n(), "reference index out of range");
  detail::check_source(array, x);
  const Eigen::VectorXd r = detail::ranges(array, x);
  Eigen::VectorXd tau(array.n());
  Eigen::Index out = 0;
  for (int k = 0; k <= array.n(); ++k)
    if (k != ref) tau[out++] = r[k] - r[ref];
  return tau;
}

/// Jacobian of the TDOAs of `pairs` with respect to the source position.
/// Row (j,i) is u_j - u_i with u_k the unit vector from m_k towards x.
inline Eigen::MatrixXd tdoa_jacobian(const SensorArray& array, const Point& x,
                                     const std::vector<Pair>& pairs) {
  detail::check_source(array, x);
  Eigen::MatrixXd units(array.dim(), array.num_sensors());
  for (int k = 0; k < array.num_sensors(); ++k) {
    const Eigen::VectorXd d = x - array.position(k);
    const double norm = d.norm();
    if (norm <= kSensorCoincidenceTol)
      throw SingularityError("source coincides with sensor " + std::to_string(k));
    units.col(k) = d / norm;
  }
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(pairs.size()), array.dim());
  for (std::size_t k = 0; k < pairs.size(); ++k)
    jac.row(static_cast<Eigen::Index>(k)) =
        (units.col(pairs[k].j) - units.col(pairs[k].i)).transpose();
  return jac;
}

inline Eigen::MatrixXd tdoa_jacobian(const SensorArray& array, const Point& x) {
  return tdoa_jacobian(array, x, array.pairs());
}

}  // namespace tdoa
