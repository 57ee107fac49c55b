#pragma once

// Closed-form localisation with three sensors in the plane.
//
// For a reduced TDOA pair t = (tau_10, tau_20), candidate sources are
//   x(lambda) = m0 + l0(t) + lambda v(t),   a lambda^2 + 2 b lambda + c = 0,
// and the range from m0 is r0 = -lambda W. A root is a genuine source iff
// r0 >= 0 and r0 + tau_k0 >= 0 for k = 1, 2 (squaring the range equations
// loses exactly these sign conditions).
//
// The image of the reduced map is E- u (C+ n P2) u {R0}, where E- is the
// interior of the ellipse a = 0 inscribed in the hexagon P2 and C+ is the side
// of the cubic b = 0 on which both roots give positive ranges. C+ is
// b * W > 0, which reads b > 0 for the usual counter-clockwise labelling
// (W > 0).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tdoa/array_geometry.hpp"
#include "tdoa/errors.hpp"

namespace tdoa::planar {

inline constexpr double kHexagonTol = 1e-9;
// Pairs farther inside than this keep two distinct preimages, however close.
inline constexpr double kBoundaryTol = 1e-12;
inline constexpr double kDegenerateTol = 1e-9;
inline constexpr double kInversionTol = 1e-8;

using Vec2 = Eigen::Vector2d;

/// Three non-collinear sensors in the plane with the derived quantities used
/// by the inversion formulas.
class PlanarConfig {
public:
  PlanarConfig(const Vec2& m0, const Vec2& m1, const Vec2& m2) : m_{m0, m1, m2} {
    tdoa::detail::require(m0.allFinite() && m1.allFinite() && m2.allFinite(),
                    "sensor positions must be finite");
    d10_ = m1 - m0;
    d20_ = m2 - m0;
    d21_ = m2 - m1;
    n10_ = d10_.norm();
    n20_ = d20_.norm();
    n21_ = d21_.norm();
    tdoa::detail::require(n10_ > kSensorCoincidenceTol && n20_ > kSensorCoincidenceTol &&
                        n21_ > kSensorCoincidenceTol,
                    "planar sensors must be distinct");
    w_ = d10_.x() * d20_.y() - d10_.y() * d20_.x();
    const double scale = std::max({n10_, n20_, n21_});
    if (std::abs(w_) <= 1e-12 * scale * scale)
      throw InvalidArgument("planar sensors are collinear");
  }

  static PlanarConfig from_array(const SensorArray& array) {
    tdoa::detail::require(array.dim() == 2 && array.num_sensors() == 3,
                    "planar configuration needs exactly three 2D sensors");
    return {array.position(0), array.position(1), array.position(2)};
  }

  const Vec2& m(int k) const { return m_[static_cast<std::size_t>(k)]; }
  const Vec2& d10() const { return d10_; }
  const Vec2& d20() const { return d20_; }
  const Vec2& d21() const { return d21_; }
  double norm10() const { return n10_; }
  double norm20() const { return n20_; }
  double norm21() const { return n21_; }
  /// det[d_10 d_20]
  double w() const { return w_; }
  /// Rotation by +90 degrees.
  static Eigen::Matrix2d h() {
    Eigen::Matrix2d out;
    out << 0.0, -1.0, 1.0, 0.0;
    return out;
  }

  SensorArray as_array() const {
    Eigen::MatrixXd pos(2, 3);
    pos << m_[0], m_[1], m_[2];
    return SensorArray(std::move(pos));
  }

  /// Hexagon vertices: TDOA pairs of sources placed on each sensor.
  Vec2 vertex(int k) const {
    switch (k) {
      case 0: return {n10_, n20_};
      case 1: return {-n10_, n21_ - n10_};
      case 2: return {n21_ - n20_, -n20_};
      default: throw InvalidArgument("vertex index must be 0, 1 or 2");
    }
  }

  /// (tau_10, tau_20) of a source at x.
  Vec2 forward(const Vec2& x) const {
    const double r0 = (x - m_[0]).norm();
    return {(x - m_[1]).norm() - r0, (x - m_[2]).norm() - r0};
  }

private:
  std::array<Vec2, 3> m_;
  Vec2 d10_, d20_, d21_;
  double n10_ = 0, n20_ = 0, n21_ = 0, w_ = 0;
};

struct AuxVectors {
  Vec2 v;
  Vec2 l0;
};

inline AuxVectors aux_vectors(const PlanarConfig& cfg, const Vec2& t) {
  const Eigen::Matrix2d h = PlanarConfig::h();
  const double t10 = t.x();
  const double t20 = t.y();
  AuxVectors out;
  out.v = h * (t20 * cfg.d10() - t10 * cfg.d20());
  const double s10 = cfg.norm10() * cfg.norm10() - t10 * t10;
  const double s20 = cfg.norm20() * cfg.norm20() - t20 * t20;
  out.l0 = h * (s20 * cfg.d10() - s10 * cfg.d20()) / (2.0 * cfg.w());
  return out;
}

struct Coefficients {
  double a = 0;
  double b = 0;
  double c = 0;
};

inline Coefficients abc(const PlanarConfig& cfg, const Vec2& t) {
  const AuxVectors aux = aux_vectors(cfg, t);
  return {aux.v.squaredNorm() - cfg.w() * cfg.w(), aux.v.dot(aux.l0), aux.l0.squaredNorm()};
}

struct HexagonTest {
  bool inside = false;       ///< inside the closed hexagon (within tolerance)
  bool on_boundary = false;  ///< some triangle inequality is tight
};

inline HexagonTest hexagon_contains(const PlanarConfig& cfg, const Vec2& t) {
  const double slack[3] = {cfg.norm10() - std::abs(t.x()), cfg.norm20() - std::abs(t.y()),
                           cfg.norm21() - std::abs(t.y() - t.x())};
  HexagonTest out;
  out.inside = std::all_of(std::begin(slack), std::end(slack),
                           [](double s) { return s >= -kHexagonTol; });
  out.on_boundary =
      out.inside && std::any_of(std::begin(slack), std::end(slack),
                                [](double s) { return std::abs(s) <= kBoundaryTol; });
  return out;
}

enum class Region {
  InteriorEllipse,         ///< E-, one source
  OnEllipseImage,          ///< on E with a finite source, one source
  CubicPositiveInHexagon,  ///< U0 u U1 u U2, two sources
  OnBoundaryImage,         ///< on the hexagon boundary inside the image, one source
  NotInImage,
};

inline std::string to_string(Region r) {
  switch (r) {
    case Region::InteriorEllipse: return "interior_ellipse";
    case Region::OnEllipseImage: return "on_ellipse";
    case Region::CubicPositiveInHexagon: return "cubic_positive";
    case Region::OnBoundaryImage: return "on_boundary";
    case Region::NotInImage: return "not_in_image";
  }
  return "unknown";
}

struct RegionClass {
  Region region = Region::NotInImage;
  int multiplicity = 0;
  /// Set when the pair lies on E but its only candidate is at infinity.
  bool at_infinity = false;
};

namespace detail {

struct Candidate {
  double lambda;
  double r0;
};

/// Real roots of a l^2 + 2 b l + c = 0 without cancellation. When a is
/// (numerically) zero only the finite root is returned.
inline std::vector<double> quadratic_roots(const Coefficients& k) {
  double disc = k.b * k.b - k.a * k.c;
  const double scale = std::max(k.b * k.b, std::abs(k.a * k.c));
  if (std::abs(k.a) <= kDegenerateTol) {
    // Keep only the finite root; c / qq stays accurate for tiny nonzero a.
    if (k.b == 0.0) return {};
    const double qq = -(k.b + std::copysign(std::sqrt(std::max(disc, 0.0)), k.b));
    return {k.c / qq};
  }
  if (disc < 0.0) {
    if (disc < -1e-12 * std::max(scale, 1.0)) return {};
    disc = 0.0;
  }
  const double sq = std::sqrt(disc);
  const double qq = -(k.b + std::copysign(sq, k.b));
  if (qq == 0.0) return {0.0};
  return {qq / k.a, k.c / qq};
}

inline bool is_genuine(const PlanarConfig& cfg, const Vec2& t, double r0) {
  const double tol = kHexagonTol * std::max(1.0, std::max(cfg.norm10(), cfg.norm20()));
  return r0 >= -tol && r0 + t.x() >= -tol && r0 + t.y() >= -tol;
}

/// Roots that correspond to an actual source, sorted by range from m0.
inline std::vector<Candidate> genuine_candidates(const PlanarConfig& cfg, const Vec2& t,
                                                 const Coefficients& k) {
  std::vector<Candidate> out;
  for (double lambda : quadratic_roots(k)) {
    const double r0 = -lambda * cfg.w();
    if (is_genuine(cfg, t, r0)) out.push_back({lambda, r0});
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.r0 < b.r0; });
  return out;
}

}  // namespace detail

/// Region of the TDOA plane containing t and the number of sources mapping
/// to it. Ties within tolerance are resolved towards the lower multiplicity.
inline RegionClass classify(const PlanarConfig& cfg, const Vec2& t) {
  if (!t.allFinite()) return {};
  const HexagonTest hex = hexagon_contains(cfg, t);
  if (!hex.inside) return {};
  const Coefficients k = abc(cfg, t);
  if (hex.on_boundary) {
    if (!detail::genuine_candidates(cfg, t, k).empty()) return {Region::OnBoundaryImage, 1, false};
    return {};
  }
  if (k.a < -kDegenerateTol) return {Region::InteriorEllipse, 1, false};
  if (k.a <= kDegenerateTol) {
    if (k.b * cfg.w() > 0.0 && !detail::genuine_candidates(cfg, t, k).empty())
      return {Region::OnEllipseImage, 1, false};
    return {Region::NotInImage, 0, true};
  }
  if (k.b * cfg.w() > kDegenerateTol) return {Region::CubicPositiveInHexagon, 2, false};
  return {};
}

/// All source positions with reduced TDOAs t: one where the map is 1-to-1,
/// both where it is 2-to-1.
inline std::vector<Vec2> invert(const PlanarConfig& cfg, const Vec2& t) {
  const RegionClass cls = classify(cfg, t);
  if (cls.at_infinity)
    throw SourceAtInfinityError("TDOA pair lies on the tangent ellipse: source at infinity");
  if (cls.multiplicity == 0) throw NotInImageError("TDOA pair is not produced by any source");

  const AuxVectors aux = aux_vectors(cfg, t);
  const Coefficients k = abc(cfg, t);
  auto position = [&](double lambda) -> Vec2 { return cfg.m(0) + aux.l0 + lambda * aux.v; };

  std::vector<Vec2> out;
  if (cls.region == Region::CubicPositiveInHexagon) {
    for (double lambda : detail::quadratic_roots(k)) out.push_back(position(lambda));
    return out;
  }
  const auto cands = detail::genuine_candidates(cfg, t, k);
  if (cls.region == Region::OnBoundaryImage) {
    // The hexagon boundary is the image of the degeneracy locus, where the
    // roots coincide and sqrt of a roundoff-sized discriminant costs half the
    // digits. Pairs only within tolerance of it keep distinct roots, so pick
    // whichever candidate reproduces t best.
    std::vector<double> lambdas;
    if (std::abs(k.a) > kDegenerateTol && detail::is_genuine(cfg, t, k.b / k.a * cfg.w()))
      lambdas.push_back(-k.b / k.a);
    for (const auto& cand : cands) lambdas.push_back(cand.lambda);
    if (lambdas.empty()) throw NotInImageError("no genuine root for TDOA pair");
    auto misfit = [&](double lambda) { return (cfg.forward(position(lambda)) - t).norm(); };
    return {position(*std::min_element(lambdas.begin(), lambdas.end(),
                                       [&](double x, double y) { return misfit(x) < misfit(y); }))};
  }
  if (cands.empty()) throw NotInImageError("no genuine root for TDOA pair");
  // 1-to-1 regions keep the finite solution nearest the array.
  out.push_back(position(cands.front().lambda));
  return out;
}

/// Both roots of the quadratic as positions, whether or not they are genuine.
/// Used to inspect the degeneracy locus where they coincide.
inline std::vector<Vec2> candidate_positions(const PlanarConfig& cfg, const Vec2& t) {
  const AuxVectors aux = aux_vectors(cfg, t);
  std::vector<Vec2> out;
  for (double lambda : detail::quadratic_roots(abc(cfg, t)))
    out.push_back(cfg.m(0) + aux.l0 + lambda * aux.v);
  return out;
}

}  // namespace tdoa::planar
