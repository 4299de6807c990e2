// Closed-form multiple Dirichlet eigenspaces of the Laplacian on the four
// reference domains, L2-orthonormalized, with normal-derivative boundary
// traces. Orthonormal bases make the pencil weight B the identity.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "eigperturb/geometry.hpp"
#include "eigperturb/linalg.hpp"
#include "eigperturb/quadrature.hpp"
#include "eigperturb/specfun.hpp"

namespace eigperturb::modes {

using geometry::BoundaryPoint;
using geometry::DomainKind;
using geometry::DomainSpec;
using linalg::Matrix;
using linalg::Vec3;

inline constexpr double kPi = std::numbers::pi;

struct MultiplicityError : std::domain_error {
  using std::domain_error::domain_error;
};

struct BasisFunction {
  std::function<double(const Vec3&)> value;             // interior evaluator
  std::function<double(const BoundaryPoint&)> normal_trace;
  double normalization = 1.0;  // constant applied to the raw closed form
};

/// A multiple eigenvalue with an orthonormal closed-form basis.
struct Eigenspace {
  double lambda0 = 0.0;
  DomainSpec domain = DomainSpec::unit_disk();
  std::vector<BasisFunction> basis;
  Matrix gram;             // identity by construction
  double trace_constant = 0.0;  // signed c * f'(1) where the trace separates
  int angular_order = 0;   // disk: k
  int radial_index = 0;    // disk: m
  int sigma1 = 0;          // square: basis order (sigma1, sigma2) first
  int sigma2 = 0;

  int dimension() const { return static_cast<int>(basis.size()); }
};

/// Disk eigenspace for angular order k >= 1 and radial index m:
/// lambda0 = j_{k,m}^2, basis {c J_k(j rho) sin(k theta), c ... cos(k theta)}
/// with c = sqrt(2/pi)/|J_k'(j)| so the L2 norms are 1.
inline Eigenspace disk_eigenspace(int k, int m) {
  if (k < 1) throw std::domain_error("disk_eigenspace: angular order must be >= 1");
  const auto zero = specfun::bessel_zero(k, m);
  const double j = zero.value;
  const double jp = specfun::bessel_j_prime(k, j);
  const double c = std::sqrt(2.0 / kPi) / std::abs(jp);
  const double trace_const = c * j * jp;  // c * f'(1)

  Eigenspace space;
  space.lambda0 = j * j;
  space.domain = DomainSpec::unit_disk();
  space.angular_order = k;
  space.radial_index = m;
  space.trace_constant = trace_const;
  space.gram = Matrix::identity(2);

  auto radial = [k, j, c](double rho) { return c * specfun::bessel_j(k, j * rho); };
  auto angle_of = [](const Vec3& p) { return std::atan2(p.y, p.x); };

  BasisFunction sin_mode;
  sin_mode.normalization = c;
  sin_mode.value = [radial, angle_of, k](const Vec3& p) {
    const double rho = p.xy().norm();
    return radial(rho) * std::sin(k * angle_of(p));
  };
  sin_mode.normal_trace = [trace_const, angle_of, k](const BoundaryPoint& bp) {
    return trace_const * std::sin(k * angle_of(bp.position));
  };

  BasisFunction cos_mode;
  cos_mode.normalization = c;
  cos_mode.value = [radial, angle_of, k](const Vec3& p) {
    const double rho = p.xy().norm();
    return radial(rho) * std::cos(k * angle_of(p));
  };
  cos_mode.normal_trace = [trace_const, angle_of, k](const BoundaryPoint& bp) {
    return trace_const * std::cos(k * angle_of(bp.position));
  };

  space.basis = {sin_mode, cos_mode};
  return space;
}

namespace detail {

/// Ordered lattice solutions (a, b), a,b >= 1, of a^2 + b^2 = lambda.
inline std::vector<std::pair<int, int>> lattice_solutions(int lambda) {
  std::vector<std::pair<int, int>> sols;
  for (int a = 1; a * a < lambda; ++a) {
    const int rest = lambda - a * a;
    const int b = static_cast<int>(std::lround(std::sqrt(static_cast<double>(rest))));
    if (b >= 1 && b * b == rest) sols.emplace_back(a, b);
  }
  return sols;
}

}  // namespace detail

/// Square eigenspace spanned by u_sigma, u_sigmabar with
/// u_sigma = (2/pi) sin(s1 x1) sin(s2 x2); requires the Diophantine
/// equation a^2 + b^2 = s1^2 + s2^2 to have exactly those two solutions.
inline Eigenspace square_eigenspace(int sigma1, int sigma2) {
  if (sigma1 < 1 || sigma2 < 1) throw std::domain_error("square_eigenspace: indices must be >= 1");
  if (sigma1 == sigma2)
    throw MultiplicityError("square_eigenspace: sigma1 == sigma2 gives a simple eigenvalue");
  const int lambda = sigma1 * sigma1 + sigma2 * sigma2;
  const auto sols = detail::lattice_solutions(lambda);
  if (sols.size() != 2)
    throw MultiplicityError("square_eigenspace: eigenvalue " + std::to_string(lambda) +
                            " has multiplicity " + std::to_string(sols.size()) +
                            " (only two-dimensional eigenspaces are supported)");

  Eigenspace space;
  space.lambda0 = lambda;
  space.domain = DomainSpec::square();
  space.gram = Matrix::identity(2);
  space.trace_constant = 0.0;  // traces vary along each edge
  space.sigma1 = sigma1;
  space.sigma2 = sigma2;

  auto make = [](int s1, int s2) {
    BasisFunction f;
    f.normalization = 2.0 / kPi;
    f.value = [s1, s2](const Vec3& p) {
      return (2.0 / kPi) * std::sin(s1 * p.x) * std::sin(s2 * p.y);
    };
    f.normal_trace = [s1, s2](const BoundaryPoint& bp) {
      const double gx = (2.0 / kPi) * s1 * std::cos(s1 * bp.position.x) * std::sin(s2 * bp.position.y);
      const double gy = (2.0 / kPi) * s2 * std::sin(s1 * bp.position.x) * std::cos(s2 * bp.position.y);
      return gx * bp.normal.x + gy * bp.normal.y;
    };
    return f;
  };

  space.basis = {make(sigma1, sigma2), make(sigma2, sigma1)};
  return space;
}

/// Second eigenspace of the unit ball in R^3: u_i = c f(rho) x_i / rho with
/// f(rho) = j1(kappa rho), kappa the first positive root of tan x = x, and
/// lambda0 = kappa^2. Traces are c f'(1) theta_i on the sphere.
inline Eigenspace ball3d_second_eigenspace() {
  const double kappa = specfun::spherical_j1_first_zero();

  Eigenspace space;
  space.lambda0 = kappa * kappa;
  space.domain = DomainSpec::unit_ball();
  space.gram = Matrix::identity(3);

  // Normalization from the radial integral (4pi/3) int_0^1 f(rho)^2 rho^2.
  const double radial_sq = quadrature::integrate_interval(
      [kappa](double r) {
        const double f = specfun::spherical_j1(kappa * r);
        return f * f * r * r;
      },
      0.0, 1.0, 64);
  const double c = 1.0 / std::sqrt(4.0 * kPi / 3.0 * radial_sq);

  // d/dx [sin x / x^2 - cos x / x] = 2 cos x / x^2 - 2 sin x / x^3 + sin x / x
  auto j1_prime = [](double x) {
    return 2.0 * std::cos(x) / (x * x) - 2.0 * std::sin(x) / (x * x * x) + std::sin(x) / x;
  };
  const double fp1 = kappa * j1_prime(kappa);
  space.trace_constant = c * fp1;

  for (int axis = 0; axis < 3; ++axis) {
    BasisFunction f;
    f.normalization = c;
    f.value = [c, kappa, axis](const Vec3& p) {
      const double rho = p.norm();
      const double comp = axis == 0 ? p.x : (axis == 1 ? p.y : p.z);
      if (rho < 1e-9) return c * (kappa / 3.0) * comp;  // j1(x)/x -> 1/3
      return c * specfun::spherical_j1(kappa * rho) * comp / rho;
    };
    const double tc = space.trace_constant;
    f.normal_trace = [tc, axis](const BoundaryPoint& bp) {
      const double comp = axis == 0 ? bp.position.x : (axis == 1 ? bp.position.y : bp.position.z);
      return tc * comp;
    };
    space.basis.push_back(f);
  }
  return space;
}

/// Principal eigenvalue cluster of two congruent disjoint disks: basis
/// {u0 on component 0, v0 on component 1}, each L2-normalized, B = Id.
inline Eigenspace disjoint_pair_eigenspace(const DomainSpec& domain) {
  if (domain.kind() != DomainKind::pair)
    throw std::domain_error("disjoint_pair_eigenspace: requires a pair domain");
  const auto zero = specfun::bessel_zero(0, 1);
  const double j = zero.value;
  const double jp = specfun::bessel_j_prime(0, j);  // = -J_1(j)
  const double c = 1.0 / (std::sqrt(kPi) * std::abs(jp));
  const double trace_const = c * j * jp;

  Eigenspace space;
  space.lambda0 = j * j;
  space.domain = domain;
  space.gram = Matrix::identity(2);
  space.trace_constant = trace_const;

  for (int comp = 0; comp < 2; ++comp) {
    const linalg::Vec2 center = domain.component_center(comp);
    BasisFunction f;
    f.normalization = c;
    f.value = [c, j, center, comp, domain](const Vec3& p) {
      if (domain.component_of(p) != comp) return 0.0;
      const double rho = (p.xy() - center).norm();
      if (rho >= 1.0) return 0.0;
      return c * specfun::bessel_j(0, j * rho);
    };
    f.normal_trace = [trace_const, comp](const BoundaryPoint& bp) {
      return bp.component == comp ? trace_const : 0.0;
    };
    space.basis.push_back(f);
  }
  return space;
}

}  // namespace eigperturb::modes
