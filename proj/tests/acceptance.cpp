// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerances in code; the FEM-validated
// scenarios also feed the final sum-rule criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "eigperturb/branches.hpp"
#include "eigperturb/dift.hpp"
#include "eigperturb/dift_examples.hpp"
#include "eigperturb/hadamard.hpp"
#include "oracles.hpp"

using namespace eigperturb;
using geometry::DomainSpec;
using geometry::PerturbFamily;
using linalg::Matrix;
using linalg::Vec3;

namespace {

int g_failures = 0;
std::vector<branches::SumRule> g_sum_rules;  // collected from validated scenarios

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

void report(int number, const std::string& title, const Check& c) {
  if (c.ok) {
    std::printf("[PASS] criterion %d: %s%s%s\n", number, title.c_str(),
                c.detail.empty() ? "" : " -- ", c.detail.c_str());
  } else {
    std::printf("[FAIL] criterion %d: %s -- %s\n", number, title.c_str(), c.detail.c_str());
    ++g_failures;
  }
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Disk prediction vs FEM for phi_t(z) = z + t z^3, k = 1.
// ---------------------------------------------------------------------------
void criterion1() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();

  const auto space = modes::disk_eigenspace(1, 1);
  const auto family = PerturbFamily::holomorphic_poly({{3, {1.0, 0.0}}});
  const auto speed = geometry::normal_speed(space.domain, family);
  const auto pencil = hadamard::assemble_quadrature(space, speed);
  const auto pred = hadamard::predict_slopes(pencil);

  c.require(pred.roots.size() == 2, "pencil dimension 2");
  c.require(pred.roots[0].simple && pred.roots[1].simple, "two simple roots");

  branches::BranchOptions opts;
  opts.mesh_levels = {16, 32, 64};
  opts.t_grid = {-2e-3, -1e-3, 1e-3, 2e-3};
  opts.expected_dim = 2;
  const auto table = branches::sample_branches(space.domain, family, space.lambda0, opts);
  const auto slopes = branches::estimate_slopes(table);
  const auto verdict = branches::compare(pred, slopes, 0.0, 0.02, pencil.A, pencil.B);
  g_sum_rules.push_back(verdict.sum_rule);

  double worst_rel = 0.0;
  for (const auto& m : verdict.matches) {
    if (m.informational) continue;
    worst_rel = std::max(worst_rel, std::abs(m.measured - m.predicted) / std::abs(m.predicted));
    c.require(m.pass, "slope " + fmt(m.measured) + " vs predicted " + fmt(m.predicted));
  }
  c.require(verdict.counts_ok, "branch counts match");

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(elapsed <= 120.0, "runtime " + fmt(elapsed) + " s exceeds 2 min");
  c.detail += (c.detail.empty() ? "" : "; ") + std::string("max rel slope error ") +
              fmt(worst_rel) + ", runtime " + fmt(elapsed) + " s";
  report(1, "disk z + t z^3 prediction vs FEM (rel 2%)", c);
}

// ---------------------------------------------------------------------------
// 2. Translation fields: A = 0 and zero measured slopes.
// ---------------------------------------------------------------------------
void criterion2() {
  Check c;
  const Vec3 dir{0.8, -0.6, 0.0};

  struct Case {
    std::string name;
    DomainSpec domain;
    modes::Eigenspace space;
  };
  const std::vector<Case> cases = {
      {"disk", DomainSpec::unit_disk(), modes::disk_eigenspace(1, 1)},
      {"square", DomainSpec::square(), modes::square_eigenspace(1, 2)},
      {"pair", DomainSpec::disjoint_pair(),
       modes::disjoint_pair_eigenspace(DomainSpec::disjoint_pair())}};

  for (const auto& cs : cases) {
    const auto family = PerturbFamily::translation(dir);
    const auto pencil =
        hadamard::assemble_quadrature(cs.space, geometry::normal_speed(cs.domain, family));
    c.require(pencil.A.max_abs() <= 1e-10,
              cs.name + ": |A| = " + fmt(pencil.A.max_abs()) + " > 1e-10");

    branches::BranchOptions opts;
    opts.mesh_levels = {8, 16};
    opts.expected_dim = cs.space.dimension();
    const auto table = branches::sample_branches(cs.domain, family, cs.space.lambda0, opts);
    const auto slopes = branches::estimate_slopes(table);
    const auto pred = hadamard::predict_slopes(pencil);
    const auto verdict =
        branches::compare(pred, slopes, 1e-4 * cs.space.lambda0, 0.0, pencil.A, pencil.B);
    g_sum_rules.push_back(verdict.sum_rule);
    for (const auto& s : slopes)
      c.require(std::abs(s.slope) <= 1e-4 * cs.space.lambda0,
                cs.name + ": slope " + fmt(s.slope));
  }
  report(2, "translation gives A = 0 (1e-10) and zero FEM slopes (1e-4 lambda0)", c);
}

// ---------------------------------------------------------------------------
// 3. Dilation exact law.
// ---------------------------------------------------------------------------
void criterion3() {
  Check c;
  const auto space = modes::disk_eigenspace(1, 1);
  const double lambda0 = space.lambda0;
  const auto family = PerturbFamily::dilation(1.0);
  const auto pencil =
      hadamard::assemble_quadrature(space, geometry::normal_speed(space.domain, family));

  c.require(max_abs_diff(pencil.A, Matrix::identity(2) * (2.0 * lambda0)) <= 1e-8,
            "A = 2 lambda0 Id (Rellich)");

  const auto pred = hadamard::predict_slopes(pencil);
  c.require(pred.simple_slopes().empty(), "double root tagged inconclusive");
  const auto info = pred.informational_slopes();
  c.require(info.size() == 2, "two informational slopes");
  // Exact branch lambda0 / (1+t)^2 differentiates to -2 lambda0 at t = 0.
  for (double s : info)
    c.require(std::abs(s - (-2.0 * lambda0)) <= 1e-8 * lambda0,
              "informational slope " + fmt(s));

  branches::BranchOptions opts;
  opts.mesh_levels = {16, 32};
  opts.expected_dim = 2;
  const auto table = branches::sample_branches(space.domain, family, lambda0, opts);
  const auto slopes = branches::estimate_slopes(table);
  const auto verdict = branches::compare(pred, slopes, 0.0, 0.01, pencil.A, pencil.B);
  g_sum_rules.push_back(verdict.sum_rule);
  for (const auto& s : slopes)
    c.require(std::abs(s.slope + 2.0 * lambda0) <= 0.01 * 2.0 * lambda0,
              "measured slope " + fmt(s.slope) + " vs -2 lambda0");
  report(3, "dilation law: A = 2 lambda0 Id, slopes -2 lambda0 (rel 1%)", c);
}

// ---------------------------------------------------------------------------
// 4. Square closed form vs quadrature on random edge families.
// ---------------------------------------------------------------------------
void criterion4() {
  Check c;
  const auto space = modes::square_eigenspace(1, 2);
  oracles::Rng rng(990713);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    PerturbFamily::EdgeProfiles prof;
    for (auto* edge : {&prof.bottom, &prof.top, &prof.left, &prof.right}) {
      edge->resize(6);
      for (auto& v : *edge) v = rng.uniform(-0.5, 0.5);
    }
    const auto speed =
        geometry::normal_speed(space.domain, PerturbFamily::square_edge_bump(prof));
    const auto quad = hadamard::assemble_quadrature(space, speed);
    const auto closed = hadamard::square_closed_form(space, speed);
    const double diff = max_abs_diff(quad.A, closed.pencil.A);
    worst = std::max(worst, diff);
    c.require(diff <= 1e-8, "trial " + std::to_string(trial) + ": |A_c - A_q| = " + fmt(diff));

    const auto eig = linalg::jacobi_eigen(closed.pencil.A);
    const bool gap_simple = eig.values[1] - eig.values[0] > 1e-8;
    c.require((closed.generic_offdiag || closed.generic_diag) == gap_simple,
              "trial " + std::to_string(trial) + ": genericity flags vs gap");
  }
  c.detail += (c.detail.empty() ? "" : "; ") + ("worst |A_c - A_q| = " + fmt(worst));
  report(4, "square closed form vs quadrature (1e-8) with genericity flags", c);
}

// ---------------------------------------------------------------------------
// 5. Square FEM baseline spectrum with h-convergence order >= 1.9.
// ---------------------------------------------------------------------------
void criterion5() {
  Check c;
  const std::vector<double> exact = {2, 5, 5, 8, 10, 10};
  std::vector<std::vector<double>> levels;
  for (int n : {16, 32, 64}) {
    const auto mesh = fem::mesh_domain(DomainSpec::square(), n);
    const auto sys = fem::assemble(mesh, PerturbFamily::identity(), 0.0);
    levels.push_back(fem::lowest_eigs(sys.stiffness, sys.mass, 6).values);
  }
  double worst_order = 1e9;
  for (int i = 0; i < 6; ++i) {
    const double e0 = levels[0][i] - exact[i];
    const double e1 = levels[1][i] - exact[i];
    const double e2 = levels[2][i] - exact[i];
    c.require(e0 > 0 && e1 > 0 && e2 > 0, "mode " + std::to_string(i) + " is an upper bound");
    const double order = std::log2(e1 / e2);
    worst_order = std::min(worst_order, order);
    c.require(order >= 1.9, "mode " + std::to_string(i) + " order " + fmt(order));
  }
  c.detail += (c.detail.empty() ? "" : "; ") + ("min observed order " + fmt(worst_order));
  report(5, "square FEM baseline {2,5,5,8,10,10}, order >= 1.9", c);
}

// ---------------------------------------------------------------------------
// 6. Ball n = 3 assembly.
// ---------------------------------------------------------------------------
void criterion6() {
  Check c;
  const auto space = modes::ball3d_second_eigenspace();
  const double tau = space.trace_constant * space.trace_constant;

  const auto harmonic = PerturbFamily::ball_quadratic_normal(
      0.0, {0, 0, 0}, {{{0.0, 0.5, 0.0}, {0.5, 0.0, 0.0}, {0.0, 0.0, 0.0}}});
  const auto cf =
      hadamard::ball3d_closed_form(space, geometry::normal_speed(space.domain, harmonic));

  // Independent oracle: integrate theta_1^2 theta_2^2 over the sphere.
  const double moment =
      quadrature::integrate_sphere([](const Vec3& th) { return th.x * th.x * th.y * th.y; });
  c.require(std::abs(cf.pencil.A(0, 1) - tau * moment) <= 1e-9,
            "C21 = " + fmt(cf.pencil.A(0, 1)) + " vs oracle " + fmt(tau * moment));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if ((i == 0 && j == 1) || (i == 1 && j == 0)) continue;
      c.require(std::abs(cf.residual(i, j)) <= 1e-10,
                "residual entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }

  for (const Vec3 dir : {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}, Vec3{0.36, -0.48, 0.8}}) {
    const auto ct = hadamard::ball3d_closed_form(
        space, geometry::normal_speed(space.domain, PerturbFamily::translation(dir)));
    c.require(ct.pencil.A.max_abs() <= 1e-10, "translation A vanishes");
  }
  report(6, "ball n=3 assembly: C21 oracle (1e-9), translations give A = 0 (1e-10)", c);
}

// ---------------------------------------------------------------------------
// 7. Disjoint pair with independent dilations.
// ---------------------------------------------------------------------------
void criterion7() {
  Check c;
  const auto domain = DomainSpec::disjoint_pair({3.0, 0.0});
  const auto space = modes::disjoint_pair_eigenspace(domain);
  const double lambda0 = space.lambda0;
  const double c1 = 1.0, c2 = 0.5;
  const auto family = PerturbFamily::per_component(domain, PerturbFamily::dilation(c1),
                                                   PerturbFamily::dilation(c2));
  const auto pencil =
      hadamard::assemble_quadrature(space, geometry::normal_speed(domain, family));
  c.require(std::abs(pencil.A(0, 0) - 2.0 * lambda0 * c1) <= 1e-8, "A11 = 2 lambda0 c1");
  c.require(std::abs(pencil.A(1, 1) - 2.0 * lambda0 * c2) <= 1e-8, "A22 = 2 lambda0 c2");
  c.require(std::abs(pencil.A(0, 1)) <= 1e-10, "A off-diagonal");

  const auto pred = hadamard::predict_slopes(pencil);
  c.require(pred.roots[0].simple && pred.roots[1].simple, "both roots simple");

  branches::BranchOptions opts;
  opts.mesh_levels = {16, 32};
  opts.expected_dim = 2;
  const auto table = branches::sample_branches(domain, family, lambda0, opts);
  const auto slopes = branches::estimate_slopes(table);
  const auto verdict = branches::compare(pred, slopes, 0.0, 0.02, pencil.A, pencil.B);
  g_sum_rules.push_back(verdict.sum_rule);
  for (const auto& m : verdict.matches)
    if (!m.informational)
      c.require(m.pass, "slope " + fmt(m.measured) + " vs " + fmt(m.predicted));
  c.require(verdict.counts_ok, "branch counts");
  report(7, "disjoint pair: diagonal Rellich A (1e-8), FEM slopes (rel 2%)", c);
}

// ---------------------------------------------------------------------------
// 8. Pencil oracle equivalence.
// ---------------------------------------------------------------------------
void criterion8() {
  Check c;
  oracles::Rng rng(424242);
  double worst = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    const int n = 2 + instance % 5;
    Matrix a(n, n), g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) a(i, j) = a(j, i) = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = rng.uniform(-1.0, 1.0);
    Matrix b = g.transposed() * g;
    for (int i = 0; i < n; ++i) b(i, i) += 0.75;

    const auto roots = pencil::generalized_roots(a, b);
    double bound = 1.0;
    for (double r : roots.roots) bound = std::max(bound, std::abs(r));
    const auto oracle = oracles::pencil_roots_by_bisection(a, b, 1.5 * bound + 1.0);
    if (oracle.size() != roots.roots.size()) {
      c.require(false, "instance " + std::to_string(instance) + ": root count " +
                           std::to_string(oracle.size()) + " vs " +
                           std::to_string(roots.roots.size()));
      continue;
    }
    for (size_t i = 0; i < oracle.size(); ++i) {
      const double diff = std::abs(oracle[i] - roots.roots[i]);
      worst = std::max(worst, diff);
      c.require(diff <= 1e-9, "instance " + std::to_string(instance) + " root " +
                                  std::to_string(i) + " diff " + fmt(diff));
    }
  }
  c.detail += (c.detail.empty() ? "" : "; ") + ("worst root diff " + fmt(worst));
  report(8, "pencil roots vs determinant bisection on 100 random instances (1e-9)", c);
}

// ---------------------------------------------------------------------------
// 9. Degenerate-IFT module.
// ---------------------------------------------------------------------------
void criterion9() {
  Check c;
  auto check_family = [&](const dift::examples::MatrixFamilyExample& ex, const std::string& tag) {
    const auto rep = dift::check_conditions(ex.problem);
    c.require(rep.all_ok(), tag + ": conditions: " + rep.failing());
    if (!rep.all_ok()) return;
    std::vector<double> grid;
    for (int i = 1; i <= 8; ++i) {
      grid.push_back(0.0125 * i);
      grid.push_back(-0.0125 * i);
    }
    const auto branch = dift::solve_branch(ex.problem, grid);
    double worst = 0.0;
    for (size_t i = 0; i < branch.t.size(); ++i) {
      const double lambda = ex.lambda0 + branch.x[i][0];
      const Matrix at = ex.a0 + ex.a1 * branch.t[i] + ex.a2 * (branch.t[i] * branch.t[i]);
      const auto eig = linalg::jacobi_eigen(at);
      double nearest = eig.values[0];
      for (double v : eig.values)
        if (std::abs(v - lambda) < std::abs(nearest - lambda)) nearest = v;
      worst = std::max(worst, std::abs(lambda - nearest));
    }
    c.require(worst <= 1e-9, tag + ": branch vs dense eigensolver, diff " + fmt(worst));
    c.require(branch.tangency_residual <= 1e-6,
              tag + ": tangency " + fmt(branch.tangency_residual));
  };
  check_family(dift::examples::matrix_family_2x2(0), "2x2 root 0");
  check_family(dift::examples::matrix_family_2x2(1), "2x2 root 1");
  check_family(dift::examples::matrix_family_3x3(0), "3x3 root 0");
  check_family(dift::examples::matrix_family_3x3(1), "3x3 root 1");

  const auto equal = dift::examples::matrix_family_2x2_equal();
  const auto rep = dift::check_conditions(equal.problem);
  c.require(rep.manifold_ok && rep.kernel_ok && rep.compat_ok, "equal-slope: (a)-(c) hold");
  c.require(!rep.transversal_ok, "equal-slope family rejected via condition (d)");
  report(9, "degenerate IFT: matrix families vs dense eigensolver (1e-9), (d) guard", c);
}

// ---------------------------------------------------------------------------
// 10. Sum rule over every validated scenario.
// ---------------------------------------------------------------------------
void criterion10() {
  Check c;
  c.require(!g_sum_rules.empty(), "validated scenarios collected");
  double worst = 0.0;
  for (size_t i = 0; i < g_sum_rules.size(); ++i) {
    const auto& s = g_sum_rules[i];
    const double err = std::abs(s.measured_sum - s.trace_target);
    worst = std::max(worst, err);
    c.require(s.pass, "scenario " + std::to_string(i) + ": |sum - (-trace)| = " + fmt(err) +
                          " > " + fmt(s.tolerance));
  }
  c.detail += (c.detail.empty() ? "" : "; ") +
              ("scenarios: " + std::to_string(g_sum_rules.size()) + ", worst residual " + fmt(worst));
  report(10, "sum rule: measured slope sum = -trace(B^-1 A) within combined uncertainty", c);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  if (g_failures > 0) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
