// Piecewise-linear finite elements on triangulated 2D domains. Meshes are
// structured: a right-triangle grid on the square and a concentric-ring fan
// on the disk (ring i carries 6i nodes; the ring-to-ring triangulation walks
// both rings by exact integer angle comparisons, so the mesh keeps the full
// hexagonal symmetry of the layout). Eigenvalues on deformed domains are
// computed by assembling on the phi_t-mapped nodes.
#pragma once

#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "eigperturb/eigsolve.hpp"
#include "eigperturb/geometry.hpp"
#include "eigperturb/linalg.hpp"

namespace eigperturb::fem {

using geometry::DomainKind;
using geometry::DomainSpec;
using geometry::PerturbFamily;
using linalg::Vec2;
using linalg::Vec3;

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvertedElement : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  // positively oriented
  std::vector<char> on_boundary;
  double h = 0.0;        // characteristic size
  int subdivision = 0;   // refinement parameter n
  int components = 1;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
};

namespace detail {

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

/// Fan triangulation of the unit disk with n rings; appended to an existing
/// mesh with the given center offset (used twice for the pair).
inline void append_disk_fan(Mesh& mesh, int n, const Vec2& center) {
  const int base = mesh.node_count();
  std::vector<int> ring_start(n + 1);

  // Center node plus rings of 6i nodes at radius i/n.
  mesh.nodes.push_back(center);
  mesh.on_boundary.push_back(0);
  ring_start[0] = base;
  for (int i = 1; i <= n; ++i) {
    ring_start[i] = mesh.node_count();
    const int count = 6 * i;
    const double rho = static_cast<double>(i) / n;
    for (int j = 0; j < count; ++j) {
      const double th = quadrature::kTwoPi * j / count;
      mesh.nodes.push_back({center.x + rho * std::cos(th), center.y + rho * std::sin(th)});
      mesh.on_boundary.push_back(i == n ? 1 : 0);
    }
  }

  auto add_tri = [&mesh](int a, int b, int c) {
    if (signed_area(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]) <= 0.0) std::swap(b, c);
    mesh.triangles.push_back({a, b, c});
  };

  // Innermost ring: six triangles around the center.
  for (int j = 0; j < 6; ++j)
    add_tri(ring_start[0], ring_start[1] + j, ring_start[1] + (j + 1) % 6);

  // Between rings i and i+1: advance whichever pointer has the smaller next
  // angle; the comparison (p+1)/m1 < (q+1)/m2 is done in integers so ties
  // and the hexagonal periodicity are exact.
  for (int i = 1; i < n; ++i) {
    const int m1 = 6 * i, m2 = 6 * (i + 1);
    const int s1 = ring_start[i], s2 = ring_start[i + 1];
    int p = 0, q = 0;
    while (p < m1 || q < m2) {
      const bool inner_done = p == m1;
      const bool outer_done = q == m2;
      bool advance_outer;
      if (inner_done) {
        advance_outer = true;
      } else if (outer_done) {
        advance_outer = false;
      } else {
        // next inner angle (p+1)/m1 vs next outer angle (q+1)/m2
        advance_outer = static_cast<long>(q + 1) * m1 <= static_cast<long>(p + 1) * m2;
      }
      if (advance_outer) {
        add_tri(s1 + (p % m1), s2 + q, s2 + (q + 1) % m2);
        ++q;
      } else {
        add_tri(s1 + p, s2 + (q % m2), s1 + (p + 1) % m1);
        ++p;
      }
    }
  }
}

}  // namespace detail

/// Structured mesh for the 2D domains; the refinement parameter n gives the
/// subdivision count (grid cells per side, rings per disk), i.e. h ~ size/n.
inline Mesh mesh_domain(const DomainSpec& domain, int n) {
  if (n < 2) throw MeshError("mesh_domain: refinement too coarse");
  Mesh mesh;
  mesh.subdivision = n;
  switch (domain.kind()) {
    case DomainKind::square: {
      const double h = geometry::kPi / n;
      mesh.h = h;
      for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
          mesh.nodes.push_back({i * h, j * h});
          mesh.on_boundary.push_back(i == 0 || j == 0 || i == n || j == n ? 1 : 0);
        }
      auto id = [n](int i, int j) { return j * (n + 1) + i; };
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
          mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
      break;
    }
    case DomainKind::disk: {
      mesh.h = 1.0 / n;
      detail::append_disk_fan(mesh, n, {0.0, 0.0});
      break;
    }
    case DomainKind::pair: {
      mesh.h = 1.0 / n;
      mesh.components = 2;
      detail::append_disk_fan(mesh, n, {0.0, 0.0});
      detail::append_disk_fan(mesh, n, domain.pair_offset());
      break;
    }
    case DomainKind::ball:
      throw MeshError("mesh_domain: 3D ball meshing is not supported");
  }
  return mesh;
}

/// Smallest interior angle over all triangles, in degrees.
inline double min_angle_degrees(const Mesh& mesh) {
  double worst = 180.0;
  for (const auto& t : mesh.triangles) {
    for (int v = 0; v < 3; ++v) {
      const Vec2 a = mesh.nodes[t[v]];
      const Vec2 b = mesh.nodes[t[(v + 1) % 3]];
      const Vec2 c = mesh.nodes[t[(v + 2) % 3]];
      const Vec2 u = b - a, w = c - a;
      const double cosang = u.dot(w) / (u.norm() * w.norm());
      worst = std::min(worst, std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / geometry::kPi);
    }
  }
  return worst;
}

struct AssembledSystem {
  SparseSym stiffness;             // K, Dirichlet rows/columns eliminated
  SparseSym mass;                  // M, same pattern
  std::vector<int> interior_node;  // interior dof -> mesh node
};

/// Standard P1 assembly on the phi_t-mapped mesh; throws InvertedElement if
/// the mapping folds a triangle.
inline AssembledSystem assemble(const Mesh& mesh, const PerturbFamily& family, double t) {
  std::vector<Vec2> mapped(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i)
    mapped[i] = family.map(t, Vec3(mesh.nodes[i])).xy();

  std::vector<int> dof(mesh.node_count(), -1);
  AssembledSystem sys;
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (!mesh.on_boundary[i]) {
      dof[i] = static_cast<int>(sys.interior_node.size());
      sys.interior_node.push_back(i);
    }
  }
  const int ndof = static_cast<int>(sys.interior_node.size());

  SparseBuilder kb(ndof), mb(ndof);
  for (const auto& tri : mesh.triangles) {
    const Vec2 p1 = mapped[tri[0]], p2 = mapped[tri[1]], p3 = mapped[tri[2]];
    const double area = detail::signed_area(p1, p2, p3);
    if (!(area > 0.0)) throw InvertedElement("assemble: mapped triangle is inverted");

    const double b[3] = {p2.y - p3.y, p3.y - p1.y, p1.y - p2.y};
    const double c[3] = {p3.x - p2.x, p1.x - p3.x, p2.x - p1.x};

    for (int i = 0; i < 3; ++i) {
      const int di = dof[tri[i]];
      if (di < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int dj = dof[tri[j]];
        if (dj < 0) continue;
        kb.add(di, dj, (b[i] * b[j] + c[i] * c[j]) / (4.0 * area));
        mb.add(di, dj, area / 12.0 * (i == j ? 2.0 : 1.0));
      }
    }
  }
  sys.stiffness = kb.build();
  sys.mass = mb.build();
  return sys;
}

/// P1 element matrices on one triangle (exposed for tests and the boundary
/// flux diagnostics).
inline void element_matrices(const Vec2& p1, const Vec2& p2, const Vec2& p3,
                             std::array<std::array<double, 3>, 3>& ke,
                             std::array<std::array<double, 3>, 3>& me) {
  const double area = detail::signed_area(p1, p2, p3);
  if (!(area > 0.0)) throw InvertedElement("element_matrices: inverted triangle");
  const double b[3] = {p2.y - p3.y, p3.y - p1.y, p1.y - p2.y};
  const double c[3] = {p3.x - p2.x, p1.x - p3.x, p2.x - p1.x};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      ke[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
      me[i][j] = area / 12.0 * (i == j ? 2.0 : 1.0);
    }
}

/// Plain-text mesh dump: one line "<nodes> <triangles>", then node
/// coordinate lines "x y", then triangle index lines "i j k" (0-based).
inline void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << mesh.node_count() << ' ' << mesh.triangle_count() << '\n';
  out.precision(17);
  for (const auto& p : mesh.nodes) out << p.x << ' ' << p.y << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace eigperturb::fem
