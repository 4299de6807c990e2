// Assembly of the perturbation pencil matrices
//   A_ij = int_{boundary} (du_i/dnu)(du_j/dnu) <phibar, nu> dS,
//   B_ij = <u_i, u_j>_L2,
// both by direct boundary quadrature and by the per-domain closed-form
// Fourier formulas, plus the slope predictions lambda'(0) = -mu from the
// roots of det(A - sB). The closed-form and quadrature paths share no
// integration code so their agreement is a genuine cross-check.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigperturb/geometry.hpp"
#include "eigperturb/linalg.hpp"
#include "eigperturb/modes.hpp"
#include "eigperturb/pencil.hpp"
#include "eigperturb/quadrature.hpp"

namespace eigperturb::hadamard {

using geometry::BoundaryPoint;
using geometry::DomainKind;
using geometry::DomainSpec;
using geometry::NormalSpeed;
using linalg::Matrix;
using linalg::Vec3;
using modes::Eigenspace;

inline constexpr double kPi = std::numbers::pi;

enum class Provenance { quadrature, closed_form };

struct PencilMatrices {
  Matrix A;
  Matrix B;
  Provenance provenance = Provenance::quadrature;
  double lambda0 = 0.0;
  int dimension = 0;
};

struct WeightedBoundaryNode {
  BoundaryPoint point;
  double weight = 0.0;
};

/// Quadrature nodes covering the domain boundary. Square edges are split
/// panel-wise so corner parameters are never evaluated.
inline std::vector<WeightedBoundaryNode> boundary_rule(const DomainSpec& domain,
                                                       const quadrature::Resolutions& res = {}) {
  std::vector<WeightedBoundaryNode> nodes;
  switch (domain.kind()) {
    case DomainKind::disk: {
      const int n = res.periodic_nodes;
      const double w = quadrature::kTwoPi / n;
      for (int i = 0; i < n; ++i)
        nodes.push_back({geometry::boundary_normal(domain, quadrature::kTwoPi * i / n), w});
      break;
    }
    case DomainKind::pair: {
      const int n = res.periodic_nodes;
      const double w = quadrature::kTwoPi / n;
      for (int comp = 0; comp < 2; ++comp)
        for (int i = 0; i < n; ++i)
          nodes.push_back({geometry::boundary_normal(
                               domain, quadrature::kTwoPi * i / n + comp * 2.0 * kPi),
                           w});
      break;
    }
    case DomainKind::square: {
      const int panels = res.interval_panels;
      const double h = kPi / panels;
      for (int edge = 0; edge < 4; ++edge) {
        const double base = edge * kPi;
        for (int p = 0; p < panels; ++p) {
          const double mid = base + (p + 0.5) * h;
          const double half = 0.5 * h;
          for (int i = 0; i < 4; ++i) {
            const double wq = quadrature::kGauss8Weights[i] * half;
            nodes.push_back(
                {geometry::boundary_normal(domain, mid + half * quadrature::kGauss8Nodes[i]), wq});
            nodes.push_back(
                {geometry::boundary_normal(domain, mid - half * quadrature::kGauss8Nodes[i]), wq});
          }
        }
      }
      break;
    }
    case DomainKind::ball: {
      const auto polar = quadrature::gauss_legendre(res.sphere_polar);
      const double wphi = quadrature::kTwoPi / res.sphere_azimuth;
      for (const auto& [z, wz] : polar) {
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int j = 0; j < res.sphere_azimuth; ++j) {
          const double phi = quadrature::kTwoPi * j / res.sphere_azimuth;
          const Vec3 p{r * std::cos(phi), r * std::sin(phi), z};
          nodes.push_back({BoundaryPoint{p, p, 0}, wz * wphi});
        }
      }
      break;
    }
  }
  return nodes;
}

/// Generic boundary-quadrature assembly of A; B comes from the eigenspace
/// Gram record (identity for the orthonormal built-in bases).
inline PencilMatrices assemble_quadrature(const Eigenspace& space, const NormalSpeed& speed,
                                          const quadrature::Resolutions& res = {}) {
  const int dim = space.dimension();
  const auto nodes = boundary_rule(space.domain, res);

  Matrix a(dim, dim);
  std::vector<double> traces(dim);
  for (const auto& node : nodes) {
    const double delta = speed.at(node.point);
    for (int i = 0; i < dim; ++i) traces[i] = space.basis[i].normal_trace(node.point);
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) a(i, j) += node.weight * traces[i] * traces[j] * delta;
  }
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < i; ++j) a(i, j) = a(j, i);

  PencilMatrices out;
  out.A = std::move(a);
  out.B = space.gram;
  out.provenance = Provenance::quadrature;
  out.lambda0 = space.lambda0;
  out.dimension = dim;
  return out;
}

// ---------------------------------------------------------------------------
// Disk closed form (basis order {sin, cos}):
//   A_ss = f'(1)^2 (dc0 - dc2k)/2,  A_cc = f'(1)^2 (dc0 + dc2k)/2,
//   A_sc = f'(1)^2 ds2k/2,
// where dc_m, ds_m are the cosine/sine integrals of delta at order m and
// f'(1)^2 = trace_constant^2. The discriminant of the characteristic
// polynomial is |delta_hat(2k)|^2 = dc2k^2 + ds2k^2 (unscaled, as a pure
// functional of delta).
// ---------------------------------------------------------------------------
struct DiskClosedForm {
  PencilMatrices pencil;
  double discriminant = 0.0;  // |delta_hat(2k)|^2
  double delta_cos0 = 0.0;
  double delta_cos2k = 0.0;
  double delta_sin2k = 0.0;
};

inline DiskClosedForm disk_closed_form(const Eigenspace& space, const NormalSpeed& speed,
                                       const quadrature::Resolutions& res = {}) {
  if (space.domain.kind() != DomainKind::disk)
    throw std::invalid_argument("disk_closed_form: not a disk eigenspace");
  const int k = space.angular_order;
  const auto samples = speed.sample_circle(res.periodic_nodes);
  const auto [c0, s0] = quadrature::fourier_coeffs(samples, 0);
  (void)s0;
  const auto [c2k, s2k] = quadrature::fourier_coeffs(samples, 2 * k);
  const double fp2 = space.trace_constant * space.trace_constant;

  DiskClosedForm out;
  out.delta_cos0 = c0;
  out.delta_cos2k = c2k;
  out.delta_sin2k = s2k;
  out.discriminant = c2k * c2k + s2k * s2k;

  Matrix a(2, 2);
  a(0, 0) = fp2 * 0.5 * (c0 - c2k);
  a(1, 1) = fp2 * 0.5 * (c0 + c2k);
  a(0, 1) = a(1, 0) = fp2 * 0.5 * s2k;

  out.pencil = {std::move(a), space.gram, Provenance::closed_form, space.lambda0, 2};
  return out;
}

// ---------------------------------------------------------------------------
// Square closed form from the cosine coefficients of the edge-pair speeds
// eta, mu on [0, 2pi):
//   A_ss   = (2 s1^2/pi^2)(mu0 - mu_{2s2}) + (2 s2^2/pi^2)(eta0 - eta_{2s1})
//   A_bb   = (2 s2^2/pi^2)(mu0 - mu_{2s1}) + (2 s1^2/pi^2)(eta0 - eta_{2s2})
//   A_sb   = (2 s1 s2/pi^2)(mu_|d| - mu_S + eta_|d| - eta_S),
// with d = s1 - s2, S = s1 + s2. The two genericity conditions flag a
// nonzero off-diagonal entry resp. unequal diagonal entries.
// ---------------------------------------------------------------------------
struct SquareClosedForm {
  PencilMatrices pencil;
  bool generic_offdiag = false;  // (eta+mu)(s1+s2) != (eta+mu)(s1-s2)
  bool generic_diag = false;     // weighted (mu-eta) condition
  std::map<int, double> eta_hat;
  std::map<int, double> mu_hat;
};

/// Cosine coefficients of an edge-pair speed on [0, 2pi), integrated with a
/// corner split at pi.
inline double edge_cosine_coefficient(const std::function<double(double)>& g, int mode,
                                      int panels) {
  auto f = [&](double t) { return g(t) * std::cos(mode * t); };
  return quadrature::integrate_interval(f, 0.0, kPi, panels) +
         quadrature::integrate_interval(f, kPi, 2.0 * kPi, panels);
}

inline SquareClosedForm square_closed_form(int sigma1, int sigma2,
                                           const std::map<int, double>& eta_hat,
                                           const std::map<int, double>& mu_hat, double lambda0,
                                           const Matrix& gram) {
  auto get = [](const std::map<int, double>& table, int mode) {
    const auto it = table.find(std::abs(mode));
    if (it == table.end())
      throw std::invalid_argument("square_closed_form: missing cosine coefficient " +
                                  std::to_string(std::abs(mode)));
    return it->second;
  };
  const double s1 = sigma1, s2 = sigma2;
  const double inv = 2.0 / (kPi * kPi);

  Matrix a(2, 2);
  a(0, 0) = inv * s1 * s1 * (get(mu_hat, 0) - get(mu_hat, 2 * sigma2)) +
            inv * s2 * s2 * (get(eta_hat, 0) - get(eta_hat, 2 * sigma1));
  a(1, 1) = inv * s2 * s2 * (get(mu_hat, 0) - get(mu_hat, 2 * sigma1)) +
            inv * s1 * s1 * (get(eta_hat, 0) - get(eta_hat, 2 * sigma2));
  a(0, 1) = a(1, 0) =
      inv * s1 * s2 *
      (get(mu_hat, sigma1 - sigma2) - get(mu_hat, sigma1 + sigma2) +
       get(eta_hat, sigma1 - sigma2) - get(eta_hat, sigma1 + sigma2));

  SquareClosedForm out;
  out.eta_hat = eta_hat;
  out.mu_hat = mu_hat;

  const double scale = std::max({std::abs(a(0, 0)), std::abs(a(1, 1)), std::abs(a(0, 1)), 1e-30});
  const double tol = std::max(1e-12, 1e-9 * scale);
  out.generic_offdiag = std::abs(a(0, 1)) > tol;
  out.generic_diag = std::abs(a(0, 0) - a(1, 1)) > tol;

  out.pencil = {std::move(a), gram, Provenance::closed_form, lambda0, 2};
  return out;
}

inline SquareClosedForm square_closed_form(const Eigenspace& space, const NormalSpeed& speed,
                                           const quadrature::Resolutions& res = {}) {
  if (space.domain.kind() != DomainKind::square)
    throw std::invalid_argument("square_closed_form: not a square eigenspace");
  const int sigma1 = space.sigma1, sigma2 = space.sigma2;
  if (sigma1 < 1 || sigma2 < 1)
    throw std::invalid_argument("square_closed_form: eigenspace lacks sigma indices");

  const std::vector<int> needed = {0, std::abs(sigma1 - sigma2), sigma1 + sigma2, 2 * sigma1,
                                   2 * sigma2};
  std::map<int, double> eta_hat, mu_hat;
  for (int mode : needed) {
    eta_hat[mode] =
        edge_cosine_coefficient([&](double t) { return speed.eta(t); }, mode, res.interval_panels);
    mu_hat[mode] =
        edge_cosine_coefficient([&](double t) { return speed.mu(t); }, mode, res.interval_panels);
  }
  return square_closed_form(sigma1, sigma2, eta_hat, mu_hat, space.lambda0, space.gram);
}

// ---------------------------------------------------------------------------
// Ball closed form: with tau = trace_constant^2,
//   a    = tau * int theta_1^2 delta dS,
//   F_i  = tau * int (theta_i^2 - theta_1^2) delta dS   (i = 2, 3),
//   C_ij = tau * int theta_i theta_j delta dS           (i > j),
// and A = a Id + R with R = [[0, C21, C31], [C21, F2, C32], [C31, C32, F3]].
// ---------------------------------------------------------------------------
struct BallClosedForm {
  PencilMatrices pencil;
  double a_scaled = 0.0;  // tau * int theta_1^2 delta
  Matrix residual;        // R = A - a Id
};

inline BallClosedForm ball3d_closed_form(const Eigenspace& space, const NormalSpeed& speed,
                                         const quadrature::Resolutions& res = {}) {
  if (space.domain.kind() != DomainKind::ball)
    throw std::invalid_argument("ball3d_closed_form: not a ball eigenspace");
  const double tau = space.trace_constant * space.trace_constant;
  auto moment = [&](auto&& f) {
    return quadrature::integrate_sphere(
        [&](const Vec3& th) { return f(th) * speed.on_sphere(th); }, res.sphere_polar,
        res.sphere_azimuth);
  };

  const double a = tau * moment([](const Vec3& th) { return th.x * th.x; });
  const double f2 = tau * moment([](const Vec3& th) { return th.y * th.y - th.x * th.x; });
  const double f3 = tau * moment([](const Vec3& th) { return th.z * th.z - th.x * th.x; });
  const double c21 = tau * moment([](const Vec3& th) { return th.y * th.x; });
  const double c31 = tau * moment([](const Vec3& th) { return th.z * th.x; });
  const double c32 = tau * moment([](const Vec3& th) { return th.z * th.y; });

  Matrix r(3, 3);
  r(0, 1) = r(1, 0) = c21;
  r(0, 2) = r(2, 0) = c31;
  r(1, 2) = r(2, 1) = c32;
  r(1, 1) = f2;
  r(2, 2) = f3;

  BallClosedForm out;
  out.a_scaled = a;
  out.residual = r;
  Matrix full = r + Matrix::identity(3) * a;
  out.pencil = {std::move(full), space.gram, Provenance::closed_form, space.lambda0, 3};
  return out;
}

// ---------------------------------------------------------------------------
// Disjoint pair closed form: the principal-mode trace is constant along each
// component circle, so A is diagonal with A_ii = trace_constant^2 times the
// mean of delta over component i (the 0th Fourier coefficient).
// ---------------------------------------------------------------------------
struct PairClosedForm {
  PencilMatrices pencil;
  std::array<double, 2> delta_zero_mode{};  // integral of delta per component
};

inline PairClosedForm pair_closed_form(const Eigenspace& space, const NormalSpeed& speed,
                                       const quadrature::Resolutions& res = {}) {
  if (space.domain.kind() != DomainKind::pair)
    throw std::invalid_argument("pair_closed_form: not a pair eigenspace");
  const double tc2 = space.trace_constant * space.trace_constant;
  PairClosedForm out;
  Matrix a(2, 2);
  for (int comp = 0; comp < 2; ++comp) {
    const auto samples = speed.sample_circle(res.periodic_nodes, comp);
    const auto [c0, s0] = quadrature::fourier_coeffs(samples, 0);
    (void)s0;
    out.delta_zero_mode[comp] = c0;
    a(comp, comp) = tc2 * c0;
  }
  out.pencil = {std::move(a), space.gram, Provenance::closed_form, space.lambda0, 2};
  return out;
}

// ---------------------------------------------------------------------------
// Slope predictions.
// ---------------------------------------------------------------------------
struct RootPrediction {
  double mu = 0.0;
  bool simple = false;
  double slope = 0.0;  // -mu; informational when the root is not simple
};

struct SlopePrediction {
  std::vector<RootPrediction> roots;  // ascending in mu
  double lambda0 = 0.0;
  pencil::PencilRoots pencil_roots;

  std::vector<double> simple_slopes() const {
    std::vector<double> s;
    for (const auto& r : roots)
      if (r.simple) s.push_back(r.slope);
    return s;
  }
  std::vector<double> informational_slopes() const {
    std::vector<double> s;
    for (const auto& r : roots)
      if (!r.simple) s.push_back(r.slope);
    return s;
  }
};

/// Roots of the pencil with simple/multiple tags; each simple root mu yields
/// a predicted branch slope lambda'(0) = -mu, multiple roots are reported
/// informationally (the hypothesis of the slope theorem fails there, and the
/// value is only a directional derivative).
inline SlopePrediction predict_slopes(const PencilMatrices& p) {
  SlopePrediction out;
  out.lambda0 = p.lambda0;
  out.pencil_roots = pencil::generalized_roots(p.A, p.B);
  for (int i = 0; i < static_cast<int>(out.pencil_roots.roots.size()); ++i) {
    RootPrediction r;
    r.mu = out.pencil_roots.roots[i];
    r.simple = out.pencil_roots.simple[i];
    r.slope = -r.mu;
    out.roots.push_back(r);
  }
  return out;
}

}  // namespace eigperturb::hadamard
