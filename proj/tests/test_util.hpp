#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "tdoa/array_geometry.hpp"

namespace testutil {

inline Eigen::MatrixXd random_spd(int q, std::mt19937_64& rng, double cond_floor = 0.05) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd a(q, q);
  for (int r = 0; r < q; ++r)
    for (int c = 0; c < q; ++c) a(r, c) = nd(rng);
  return a * a.transpose() / q + cond_floor * Eigen::MatrixXd::Identity(q, q);
}

inline Eigen::VectorXd random_vector(int size, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::VectorXd v(size);
  for (int k = 0; k < size; ++k) v[k] = nd(rng);
  return v;
}

/// Sensors uniformly in a box; redrawn until no two are closer than 0.2.
inline tdoa::SensorArray random_array(int dim, int sensors, std::mt19937_64& rng, double half = 1.0) {
  std::uniform_real_distribution<double> u(-half, half);
  while (true) {
    Eigen::MatrixXd m(dim, sensors);
    for (int c = 0; c < sensors; ++c)
      for (int r = 0; r < dim; ++r) m(r, c) = u(rng);
    bool ok = true;
    for (int a = 0; a < sensors && ok; ++a)
      for (int b = a + 1; b < sensors && ok; ++b) ok = (m.col(a) - m.col(b)).norm() > 0.2;
    if (ok) return tdoa::SensorArray(m);
  }
}

/// Source at distance in [lo, hi] from the origin in a random direction.
inline Eigen::VectorXd random_source(int dim, std::mt19937_64& rng, double lo = 1.5, double hi = 4.0) {
  Eigen::VectorXd dir = random_vector(dim, rng);
  dir.normalize();
  std::uniform_real_distribution<double> u(lo, hi);
  return dir * u(rng);
}

}  // namespace testutil
