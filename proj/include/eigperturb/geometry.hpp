// Reference domains, their boundary parameterizations and outward normals,
// the built-in one-parameter deformation families phi_t with derivative
// field phibar = d/dt phi_t at t = 0, and the induced boundary normal speed
// delta = <phibar, nu>.
//
// Boundary parameter conventions:
//   disk          theta in [0, 2pi)
//   square        s in [0, 4pi): bottom (s, 0), right (pi, s-pi),
//                 top (3pi - s, pi), left (0, 4pi - s); corners excluded
//   ball          (polar, azimuth) pair
//   pair          s in [0, 4pi): component 0 angle s, component 1 angle s-2pi
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eigperturb/linalg.hpp"
#include "eigperturb/quadrature.hpp"

namespace eigperturb::geometry {

using linalg::Vec2;
using linalg::Vec3;

inline constexpr double kPi = std::numbers::pi;

enum class DomainKind { disk, square, ball, pair };

inline std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::disk: return "disk";
    case DomainKind::square: return "square";
    case DomainKind::ball: return "ball3d";
    case DomainKind::pair: return "pair";
  }
  return "?";
}

struct BoundaryPoint {
  Vec3 position;
  Vec3 normal;
  int component = 0;
};

/// One of the four reference domains. The pair consists of two unit disks:
/// component 0 at the origin and component 1 at `pair_offset`.
class DomainSpec {
 public:
  static DomainSpec unit_disk() { return DomainSpec(DomainKind::disk); }
  static DomainSpec square() { return DomainSpec(DomainKind::square); }
  static DomainSpec unit_ball() { return DomainSpec(DomainKind::ball); }
  static DomainSpec disjoint_pair(Vec2 offset = {3.0, 0.0}, double separation_margin = 0.1) {
    DomainSpec d(DomainKind::pair);
    d.pair_offset_ = offset;
    d.separation_margin_ = separation_margin;
    if (offset.norm() - 2.0 <= separation_margin)
      throw std::invalid_argument("disjoint_pair: components closer than the separation margin");
    return d;
  }

  DomainKind kind() const { return kind_; }
  bool is_2d() const { return kind_ != DomainKind::ball; }
  int components() const { return kind_ == DomainKind::pair ? 2 : 1; }
  Vec2 pair_offset() const { return pair_offset_; }
  double separation_margin() const { return separation_margin_; }

  Vec2 component_center(int c) const {
    switch (kind_) {
      case DomainKind::square: return {0.5 * kPi, 0.5 * kPi};
      case DomainKind::pair: return c == 0 ? Vec2{0.0, 0.0} : pair_offset_;
      default: return {0.0, 0.0};
    }
  }

  /// Which pair component a point belongs to (nearest center).
  int component_of(const Vec3& x) const {
    if (kind_ != DomainKind::pair) return 0;
    const Vec2 p = x.xy();
    return (p - Vec2{0.0, 0.0}).norm() <= (p - pair_offset_).norm() ? 0 : 1;
  }

  bool contains(const Vec3& x) const {
    switch (kind_) {
      case DomainKind::disk: return x.xy().norm() < 1.0;
      case DomainKind::square:
        return x.x > 0.0 && x.x < kPi && x.y > 0.0 && x.y < kPi;
      case DomainKind::ball: return x.norm() < 1.0;
      case DomainKind::pair:
        return x.xy().norm() < 1.0 || (x.xy() - pair_offset_).norm() < 1.0;
    }
    return false;
  }

 private:
  explicit DomainSpec(DomainKind k) : kind_(k) {}
  DomainKind kind_;
  Vec2 pair_offset_{3.0, 0.0};
  double separation_margin_ = 0.1;
};

/// Point and outward unit normal at a 2D boundary parameter. Throws on
/// square corners, where the normal is undefined.
inline BoundaryPoint boundary_normal(const DomainSpec& domain, double param) {
  switch (domain.kind()) {
    case DomainKind::disk: {
      const double c = std::cos(param), s = std::sin(param);
      return {{c, s, 0.0}, {c, s, 0.0}, 0};
    }
    case DomainKind::square: {
      double s = std::fmod(param, 4.0 * kPi);
      if (s < 0.0) s += 4.0 * kPi;
      const double edge_pos = std::fmod(s, kPi);
      if (edge_pos == 0.0)
        throw std::domain_error("boundary_normal: normal undefined at square corner");
      const int edge = static_cast<int>(s / kPi);
      switch (edge) {
        case 0: return {{edge_pos, 0.0, 0.0}, {0.0, -1.0, 0.0}, 0};
        case 1: return {{kPi, edge_pos, 0.0}, {1.0, 0.0, 0.0}, 0};
        case 2: return {{kPi - edge_pos, kPi, 0.0}, {0.0, 1.0, 0.0}, 0};
        default: return {{0.0, kPi - edge_pos, 0.0}, {-1.0, 0.0, 0.0}, 0};
      }
    }
    case DomainKind::pair: {
      double s = std::fmod(param, 4.0 * kPi);
      if (s < 0.0) s += 4.0 * kPi;
      const int comp = s < 2.0 * kPi ? 0 : 1;
      const double th = comp == 0 ? s : s - 2.0 * kPi;
      const Vec2 center = domain.component_center(comp);
      const double c = std::cos(th), sn = std::sin(th);
      return {{center.x + c, center.y + sn, 0.0}, {c, sn, 0.0}, comp};
    }
    case DomainKind::ball:
      throw std::domain_error("boundary_normal: ball boundary needs (polar, azimuth)");
  }
  throw std::logic_error("boundary_normal: unknown domain");
}

/// Sphere boundary point from polar/azimuth angles; normal is radial.
inline BoundaryPoint boundary_normal(const DomainSpec& domain, double polar, double azimuth) {
  if (domain.kind() != DomainKind::ball)
    throw std::domain_error("boundary_normal: (polar, azimuth) only valid on the ball");
  const double sp = std::sin(polar);
  const Vec3 p{sp * std::cos(azimuth), sp * std::sin(azimuth), std::cos(polar)};
  return {p, p, 0};
}

/// A one-parameter deformation family phi_t with phi_0 = identity and
/// derivative field phibar. Immutable after construction.
class PerturbFamily {
 public:
  PerturbFamily() = default;

  const std::string& name() const { return name_; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }

  Vec3 map(double t, const Vec3& x) const {
    if (t < t_min_ || t > t_max_)
      throw std::domain_error("PerturbFamily::map: t outside admissible range");
    if (t == 0.0) return x;
    return map_(t, x);
  }

  Vec3 velocity(const Vec3& x) const { return vel_(x); }

  static PerturbFamily identity() {
    return PerturbFamily("identity", [](double, const Vec3& x) { return x; },
                         [](const Vec3&) { return Vec3{}; }, -1.0, 1.0);
  }

  static PerturbFamily translation(Vec3 direction, double t_range = 0.5) {
    return PerturbFamily(
        "translation", [direction](double t, const Vec3& x) { return x + t * direction; },
        [direction](const Vec3&) { return direction; }, -t_range, t_range);
  }

  static PerturbFamily dilation(double rate, Vec3 center = {}, double t_range = 0.4) {
    return PerturbFamily(
        "dilation",
        [rate, center](double t, const Vec3& x) { return x + (t * rate) * (x - center); },
        [rate, center](const Vec3& x) { return rate * (x - center); }, -t_range, t_range);
  }

  /// phi_t(z) = z + t sum_k a_k z^k on the disk; coefficients are
  /// (power, complex amplitude) pairs.
  static PerturbFamily holomorphic_poly(std::vector<std::pair<int, std::complex<double>>> coeffs,
                                        double t_range = 0.05) {
    for (const auto& [k, a] : coeffs) {
      (void)a;
      if (k < 0) throw std::invalid_argument("holomorphic_poly: negative power");
    }
    auto phibar = [coeffs](const Vec3& x) {
      const std::complex<double> z(x.x, x.y);
      std::complex<double> w(0.0, 0.0);
      for (const auto& [k, a] : coeffs) w += a * std::pow(z, k);
      return Vec3{w.real(), w.imag(), 0.0};
    };
    return PerturbFamily(
        "disk.holomorphic_poly",
        [phibar](double t, const Vec3& x) { return x + t * phibar(x); }, phibar, -t_range,
        t_range);
  }

  /// Per-edge normal speed on the square given by cosine polynomials in the
  /// edge coordinate, blended linearly to zero at the opposite edge.
  struct EdgeProfiles {
    std::vector<double> bottom, top, left, right;  // cosine coefficients
  };
  static PerturbFamily square_edge_bump(EdgeProfiles profiles, double t_range = 0.05) {
    auto eval = [](const std::vector<double>& c, double s) {
      double v = 0.0;
      for (size_t j = 0; j < c.size(); ++j) v += c[j] * std::cos(j * s);
      return v;
    };
    auto phibar = [profiles, eval](const Vec3& x) {
      const double wb = 1.0 - x.y / kPi, wt = x.y / kPi;
      const double wl = 1.0 - x.x / kPi, wr = x.x / kPi;
      double vy = -eval(profiles.bottom, x.x) * wb + eval(profiles.top, x.x) * wt;
      double vx = -eval(profiles.left, x.y) * wl + eval(profiles.right, x.y) * wr;
      return Vec3{vx, vy, 0.0};
    };
    return PerturbFamily(
        "square.edge_bump", [phibar](double t, const Vec3& x) { return x + t * phibar(x); },
        phibar, -t_range, t_range);
  }

  /// phibar(x) = g(x) x with g a quadratic polynomial; on the sphere the
  /// normal speed is g itself, so degree-2 choices like x1*x2 produce pure
  /// second-order harmonics.
  static PerturbFamily ball_quadratic_normal(double constant, Vec3 linear,
                                             std::array<std::array<double, 3>, 3> quad,
                                             double t_range = 0.05) {
    auto g = [constant, linear, quad](const Vec3& x) {
      const std::array<double, 3> c = {x.x, x.y, x.z};
      double v = constant + linear.dot(x);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) v += quad[i][j] * c[i] * c[j];
      return v;
    };
    auto phibar = [g](const Vec3& x) { return g(x) * x; };
    return PerturbFamily(
        "ball3d.quadratic_normal",
        [phibar](double t, const Vec3& x) { return x + t * phibar(x); }, phibar, -t_range,
        t_range);
  }

  /// Independent families on the two pair components, each expressed in
  /// component-local coordinates (component center at the origin).
  static PerturbFamily per_component(const DomainSpec& pair, PerturbFamily first,
                                     PerturbFamily second) {
    if (pair.kind() != DomainKind::pair)
      throw std::invalid_argument("per_component: requires a pair domain");
    const Vec2 offset = pair.pair_offset();
    const double lo = std::max(first.t_min(), second.t_min());
    const double hi = std::min(first.t_max(), second.t_max());
    auto pick = [pair](const Vec3& x) { return pair.component_of(x); };
    auto mapf = [offset, first, second, pick](double t, const Vec3& x) {
      if (pick(x) == 0) return first.map(t, x);
      const Vec3 local = x - Vec3(offset.x, offset.y, 0.0);
      return Vec3(offset.x, offset.y, 0.0) + second.map(t, local);
    };
    auto velf = [offset, first, second, pick](const Vec3& x) {
      if (pick(x) == 0) return first.velocity(x);
      return second.velocity(x - Vec3(offset.x, offset.y, 0.0));
    };
    return PerturbFamily("pair." + first.name() + "+" + second.name(), mapf, velf, lo, hi);
  }

  PerturbFamily(std::string name, std::function<Vec3(double, const Vec3&)> map,
                std::function<Vec3(const Vec3&)> velocity, double t_min, double t_max)
      : name_(std::move(name)), map_(std::move(map)), vel_(std::move(velocity)),
        t_min_(t_min), t_max_(t_max) {}

 private:
  std::string name_;
  std::function<Vec3(double, const Vec3&)> map_;
  std::function<Vec3(const Vec3&)> vel_;
  double t_min_ = 0.0;
  double t_max_ = 0.0;
};

/// Applies phi_t pointwise; at t = 0 the inputs come back unchanged.
inline std::vector<Vec3> map_points(const PerturbFamily& family, double t,
                                    const std::vector<Vec3>& points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(family.map(t, p));
  return out;
}

/// Normal speed delta = <phibar, nu> on the domain boundary, with the
/// per-kind accessors used by the closed-form assembly (eta/mu on the
/// square follow the bottom/top and left/right edge-pair convention on
/// [0, 2pi)).
class NormalSpeed {
 public:
  NormalSpeed(DomainSpec domain, PerturbFamily family)
      : domain_(std::move(domain)), family_(std::move(family)) {}

  const DomainSpec& domain() const { return domain_; }
  const std::string& family_name() const { return family_.name(); }

  double at(const BoundaryPoint& bp) const {
    const double v = family_.velocity(bp.position).dot(bp.normal);
    if (!std::isfinite(v)) throw std::runtime_error("NormalSpeed: non-finite value at node");
    return v;
  }

  /// delta(theta) on a circular boundary (disk, or one pair component).
  double on_circle(double theta, int component = 0) const {
    if (domain_.kind() == DomainKind::disk) return at(boundary_normal(domain_, theta));
    if (domain_.kind() == DomainKind::pair)
      return at(boundary_normal(domain_, theta + component * 2.0 * kPi));
    throw std::domain_error("NormalSpeed::on_circle: not a circular boundary");
  }

  /// eta(t): bottom edge speed for t < pi, top edge speed shifted for t >= pi.
  double eta(double t) const {
    require_square();
    const double s = t < kPi ? t : t - kPi;  // position along the edge
    BoundaryPoint bp;
    if (t < kPi) {
      bp = {{s, 0.0, 0.0}, {0.0, -1.0, 0.0}, 0};
    } else {
      bp = {{s, kPi, 0.0}, {0.0, 1.0, 0.0}, 0};
    }
    return at(bp);
  }

  /// mu(t): left edge speed for t < pi, right edge speed shifted for t >= pi.
  double mu(double t) const {
    require_square();
    const double s = t < kPi ? t : t - kPi;
    BoundaryPoint bp;
    if (t < kPi) {
      bp = {{0.0, s, 0.0}, {-1.0, 0.0, 0.0}, 0};
    } else {
      bp = {{kPi, s, 0.0}, {1.0, 0.0, 0.0}, 0};
    }
    return at(bp);
  }

  /// delta at a unit direction on the sphere.
  double on_sphere(const Vec3& unit) const {
    if (domain_.kind() != DomainKind::ball)
      throw std::domain_error("NormalSpeed::on_sphere: not a ball domain");
    return at({unit, unit, 0});
  }

  quadrature::PeriodicSamples sample_circle(int n, int component = 0) const {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = on_circle(quadrature::kTwoPi * i / n, component);
    return quadrature::PeriodicSamples(std::move(v));
  }

 private:
  void require_square() const {
    if (domain_.kind() != DomainKind::square)
      throw std::domain_error("NormalSpeed: eta/mu only defined on the square");
  }

  DomainSpec domain_;
  PerturbFamily family_;
};

inline NormalSpeed normal_speed(const DomainSpec& domain, const PerturbFamily& family) {
  return NormalSpeed(domain, family);
}

/// Central-difference check of phibar against phi_t; used by the family
/// invariants and the scenario validator.
inline double velocity_fd_residual(const PerturbFamily& family, const Vec3& x, double h = 1e-5) {
  const Vec3 fd = (family.map(h, x) - family.map(-h, x)) * (0.5 / h);
  return (fd - family.velocity(x)).norm();
}

/// Samples the Jacobian determinant sign of phi_t on a grid of points
/// (injectivity proxy). Returns true when all sampled determinants are
/// positive.
inline bool jacobian_positive(const PerturbFamily& family, double t,
                              const std::vector<Vec3>& points, bool three_d = false,
                              double h = 1e-6) {
  for (const Vec3& p : points) {
    const Vec3 dx = (family.map(t, p + Vec3{h, 0, 0}) - family.map(t, p - Vec3{h, 0, 0})) * (0.5 / h);
    const Vec3 dy = (family.map(t, p + Vec3{0, h, 0}) - family.map(t, p - Vec3{0, h, 0})) * (0.5 / h);
    double det;
    if (three_d) {
      const Vec3 dz = (family.map(t, p + Vec3{0, 0, h}) - family.map(t, p - Vec3{0, 0, h})) * (0.5 / h);
      det = dx.x * (dy.y * dz.z - dy.z * dz.y) - dx.y * (dy.x * dz.z - dy.z * dz.x) +
            dx.z * (dy.x * dz.y - dy.y * dz.x);
    } else {
      det = dx.x * dy.y - dx.y * dy.x;
    }
    if (!(det > 0.0)) return false;
  }
  return true;
}

}  // namespace eigperturb::geometry
