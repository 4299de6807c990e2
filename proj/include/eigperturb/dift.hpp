// Finite-dimensional degenerate implicit function theorem: given
// F: R x R^N -> R^P in chart coordinates where the solution manifold of
// F(0, .) = q is {0} x X2, a base point p, and a vector v with
// F_t(0,p) = L v, verify the four hypotheses numerically and continue the
// solution branch x(t) with x(0) = p by Newton iteration on the rescaled
// map J(t, y) = F(t, t(y1 - w), y2) / t.
#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigperturb/linalg.hpp"

namespace eigperturb::dift {

using linalg::Matrix;

struct ConditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NewtonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Vector = std::vector<double>;
using Map = std::function<Vector(double, const Vector&)>;

/// Problem data in chart coordinates: X = X1 + X2 with the solution
/// manifold of F(0,.) = q equal to {0} x X2 near p, and p's X1 block zero.
struct DiftProblem {
  std::string name;
  int n1 = 0;  // dim X1
  int n2 = 0;  // dim X2
  Map F;
  Vector p;  // base point (size n1 + n2), first n1 entries zero
  Vector q;  // target value
  Vector v;  // F_t(0, p) = L v
  double fd_step = 1e-6;
  double fd_step_mixed = 1e-4;

  int dim() const { return n1 + n2; }
};

namespace detail {

inline Vector axpy(const Vector& x, double a, const Vector& d) {
  Vector y = x;
  for (size_t i = 0; i < y.size(); ++i) y[i] += a * d[i];
  return y;
}

inline Vector sub(const Vector& a, const Vector& b) {
  Vector r = a;
  for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

inline double norm(const Vector& a) { return linalg::norm2(a); }

/// D_x F(t, x) by central differences, column by column.
inline Matrix jacobian_x(const Map& f, double t, const Vector& x, double h) {
  const Vector f0 = f(t, x);
  const int rows = static_cast<int>(f0.size());
  const int cols = static_cast<int>(x.size());
  Matrix jac(rows, cols);
  for (int j = 0; j < cols; ++j) {
    Vector xp = x, xm = x;
    const double step = h * std::max(1.0, std::abs(x[j]));
    xp[j] += step;
    xm[j] -= step;
    const Vector fp = f(t, xp), fm = f(t, xm);
    for (int i = 0; i < rows; ++i) jac(i, j) = (fp[i] - fm[i]) / (2.0 * step);
  }
  return jac;
}

inline Vector partial_t(const Map& f, double t, const Vector& x, double h) {
  const Vector fp = f(t + h, x), fm = f(t - h, x);
  Vector r(fp.size());
  for (size_t i = 0; i < r.size(); ++i) r[i] = (fp[i] - fm[i]) / (2.0 * h);
  return r;
}

/// Directional derivative D_x F(t, x)[d] with a norm-scaled step.
inline Vector directional(const Map& f, double t, const Vector& x, const Vector& d, double h) {
  const double nd = norm(d);
  if (nd == 0.0) return Vector(f(t, x).size(), 0.0);
  const double step = h / nd;
  const Vector fp = f(t, axpy(x, step, d)), fm = f(t, axpy(x, -step, d));
  Vector r(fp.size());
  for (size_t i = 0; i < r.size(); ++i) r[i] = (fp[i] - fm[i]) * nd / (2.0 * h);
  return r;
}

}  // namespace detail

struct ConditionReport {
  bool manifold_ok = false;     // (a) F(0, .) = q on sampled points of {0} x X2
  bool kernel_ok = false;       // (b) Ker(L) = {0} x X2
  bool compat_ok = false;       // (c) F_t(0, p) = L v
  bool transversal_ok = false;  // (d) [L|X1, G] nonsingular

  double manifold_residual = 0.0;
  double kernel_column_norm = 0.0;  // max |L e_j| over X2 directions
  double x1_min_singular = 0.0;     // injectivity of L on X1
  double compat_residual = 0.0;
  double transversal_ratio = 0.0;   // sigma_min / sigma_max of [L|X1, G]

  bool all_ok() const { return manifold_ok && kernel_ok && compat_ok && transversal_ok; }

  std::string failing() const {
    std::string s;
    if (!manifold_ok) s += "(a) manifold constancy; ";
    if (!kernel_ok) s += "(b) kernel = tangent space; ";
    if (!compat_ok) s += "(c) F_t in the image of L; ";
    if (!transversal_ok) s += "(d) transversal operator singular; ";
    return s;
  }
};

/// Build the operator [L|X1, G] with G the mixed second derivative
/// D(F_t - F_v)(0, p) restricted to X2, by symmetric 4-point differences.
inline Matrix transversal_operator(const DiftProblem& prob, const Matrix& l) {
  const int p_dim = l.rows();
  Matrix op(p_dim, prob.n1 + prob.n2);
  for (int j = 0; j < prob.n1; ++j)
    for (int i = 0; i < p_dim; ++i) op(i, j) = l(i, j);

  const double h = prob.fd_step_mixed;
  for (int j = 0; j < prob.n2; ++j) {
    Vector ep = prob.p, em = prob.p;
    ep[prob.n1 + j] += h;
    em[prob.n1 + j] -= h;
    // d/ds F_t(0, p + s e_j)
    const Vector ftp = detail::partial_t(prob.F, 0.0, ep, h);
    const Vector ftm = detail::partial_t(prob.F, 0.0, em, h);
    // d/ds D_xF(0, p + s e_j)[v]
    const Vector fvp = detail::directional(prob.F, 0.0, ep, prob.v, h);
    const Vector fvm = detail::directional(prob.F, 0.0, em, prob.v, h);
    for (int i = 0; i < p_dim; ++i)
      op(i, prob.n1 + j) = ((ftp[i] - ftm[i]) - (fvp[i] - fvm[i])) / (2.0 * h);
  }
  return op;
}

/// Numerically verify conditions (a)-(d) at (0, p).
inline ConditionReport check_conditions(const DiftProblem& prob) {
  if (static_cast<int>(prob.p.size()) != prob.dim() || prob.v.size() != prob.p.size())
    throw std::invalid_argument("check_conditions: inconsistent dimensions");
  ConditionReport rep;

  const Vector f0 = prob.F(0.0, prob.p);
  if (f0.size() != prob.q.size())
    throw std::invalid_argument("check_conditions: F and q dimensions differ");

  // (a): residual at p and at sampled X2 offsets.
  double res_a = detail::norm(detail::sub(f0, prob.q));
  for (int j = 0; j < prob.n2; ++j) {
    for (double s : {0.05, -0.08}) {
      Vector x = prob.p;
      x[prob.n1 + j] += s;
      res_a = std::max(res_a, detail::norm(detail::sub(prob.F(0.0, x), prob.q)));
    }
  }
  rep.manifold_residual = res_a;
  rep.manifold_ok = res_a <= 1e-8;

  // (b): columns of L over X2 vanish, and L restricted to X1 is injective.
  const Matrix l = detail::jacobian_x(prob.F, 0.0, prob.p, prob.fd_step);
  double lscale = std::max(l.max_abs(), 1e-12);
  double kmax = 0.0;
  for (int j = prob.n1; j < prob.dim(); ++j) {
    double cn = 0.0;
    for (int i = 0; i < l.rows(); ++i) cn += l(i, j) * l(i, j);
    kmax = std::max(kmax, std::sqrt(cn));
  }
  rep.kernel_column_norm = kmax;
  bool kernel_cols_ok = kmax <= 1e-8 * std::max(1.0, lscale);

  double x1_sv = 1.0;
  if (prob.n1 > 0) {
    Matrix lx1(l.rows(), prob.n1);
    for (int i = 0; i < l.rows(); ++i)
      for (int j = 0; j < prob.n1; ++j) lx1(i, j) = l(i, j);
    const auto sv = linalg::singular_values(lx1);
    x1_sv = sv.back();
    kernel_cols_ok = kernel_cols_ok && x1_sv > 1e-6 * std::max(1.0, sv.front());
  }
  rep.x1_min_singular = x1_sv;
  rep.kernel_ok = kernel_cols_ok;

  // (c): || F_t(0,p) - L v ||.
  const Vector ft = detail::partial_t(prob.F, 0.0, prob.p, prob.fd_step);
  Vector lv(l.rows(), 0.0);
  for (int i = 0; i < l.rows(); ++i)
    for (int j = 0; j < l.cols(); ++j) lv[i] += l(i, j) * prob.v[j];
  rep.compat_residual = detail::norm(detail::sub(ft, lv));
  rep.compat_ok = rep.compat_residual <= 1e-8 * std::max(1.0, detail::norm(ft));

  // (d): [L|X1, G] is square and nonsingular.
  const Matrix op = transversal_operator(prob, l);
  if (op.rows() != op.cols()) {
    rep.transversal_ok = false;
    rep.transversal_ratio = 0.0;
  } else if (op.rows() == 0) {
    rep.transversal_ok = true;
    rep.transversal_ratio = 1.0;
  } else {
    const auto sv = linalg::singular_values(op);
    rep.transversal_ratio = sv.back() / std::max(sv.front(), 1e-300);
    rep.transversal_ok = rep.transversal_ratio > 1e-6;
  }
  return rep;
}

struct NewtonDiag {
  double t = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool quadratic = true;
};

struct DiftBranch {
  std::vector<double> t;          // ascending grid
  std::vector<Vector> x;          // x(t) in chart coordinates
  Vector x_prime0;                // finite-difference branch derivative
  std::vector<NewtonDiag> diagnostics;
  double tangency_residual = 0.0;  // ||(x'(0) + v) restricted to X1||
  double max_residual = 0.0;       // max_t ||F(t, x(t)) - q||
};

namespace detail {

inline Vector j_eval(const DiftProblem& prob, double t, const Vector& y) {
  const int n1 = prob.n1;
  if (t != 0.0) {
    Vector x(prob.dim());
    for (int i = 0; i < n1; ++i) x[i] = t * (y[i] - prob.v[i]);
    for (int i = n1; i < prob.dim(); ++i) x[i] = y[i];
    Vector r = sub(prob.F(t, x), prob.q);
    for (auto& e : r) e /= t;
    return r;
  }
  // J(0, y) = F_t(0, (0, y2)) + D_xF(0, (0, y2))[(y1 - w, 0)]
  Vector base(prob.dim(), 0.0);
  for (int i = n1; i < prob.dim(); ++i) base[i] = y[i];
  Vector dir(prob.dim(), 0.0);
  for (int i = 0; i < n1; ++i) dir[i] = y[i] - prob.v[i];
  const Vector ft = partial_t(prob.F, 0.0, base, prob.fd_step);
  const Vector dd = directional(prob.F, 0.0, base, dir, prob.fd_step);
  Vector r(ft.size());
  for (size_t i = 0; i < r.size(); ++i) r[i] = ft[i] + dd[i];
  return r;
}

inline NewtonDiag newton_solve(const DiftProblem& prob, double t, Vector& y) {
  NewtonDiag diag;
  diag.t = t;
  const double tol = 1e-12;
  // J(0, .) is evaluated through finite differences of F, so its residual
  // bottoms out near the differencing noise; for t != 0 the evaluation is
  // exact and the full tolerance is reachable.
  const double noise_floor = t == 0.0 ? 1e-9 : 5e-12;

  auto fn = [&](const Vector& z) { return j_eval(prob, t, z); };
  Vector res = fn(y);
  double rn = norm(res);
  for (int it = 0; it < 50; ++it) {
    if (rn <= tol) break;
    Map wrapped = [&](double, const Vector& z) { return fn(z); };
    const Matrix jac = jacobian_x(wrapped, 0.0, y, prob.fd_step);
    Vector neg = res;
    for (auto& e : neg) e = -e;
    Vector step;
    try {
      step = linalg::lu_solve(jac, neg);
    } catch (const linalg::SingularMatrixError&) {
      throw NewtonError("solve_branch: singular Newton Jacobian at t = " + std::to_string(t));
    }
    // Damping: halve the step while the residual increases.
    double scale = 1.0;
    Vector y_next;
    Vector res_next;
    double rn_next;
    bool stalled = false;
    for (int half = 0;; ++half) {
      y_next = axpy(y, scale, step);
      res_next = fn(y_next);
      rn_next = norm(res_next);
      if (rn_next < rn || rn_next <= tol) break;
      if (half >= 30) {
        stalled = true;
        break;
      }
      scale *= 0.5;
    }
    if (stalled) {
      if (rn <= noise_floor) break;  // converged to the evaluation noise
      throw NewtonError("solve_branch: Newton stalled at t = " + std::to_string(t));
    }
    // Quadratic convergence check on full steps away from the noise floor.
    if (scale == 1.0 && rn < 1e-2 && rn > 100.0 * noise_floor &&
        rn_next > 20.0 * rn * rn + 1e-13)
      diag.quadratic = false;
    y = y_next;
    res = res_next;
    rn = rn_next;
    ++diag.iterations;
  }
  if (rn > noise_floor)
    throw NewtonError("solve_branch: Newton did not reach tolerance at t = " + std::to_string(t));
  diag.residual = rn;
  return diag;
}

}  // namespace detail

/// Continue the branch over a symmetric grid around 0. check_conditions must
/// pass; the solver marches outward from t = 0 re-using each previous
/// solution as the next initial guess.
inline DiftBranch solve_branch(const DiftProblem& prob, const std::vector<double>& t_grid) {
  const auto rep = check_conditions(prob);
  if (!rep.all_ok())
    throw ConditionError("solve_branch: hypotheses fail: " + rep.failing());

  std::vector<double> grid = t_grid;
  grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-15; }),
             grid.end());
  const int nt = static_cast<int>(grid.size());
  const int zero = static_cast<int>(std::lower_bound(grid.begin(), grid.end(), 0.0) - grid.begin());
  if (zero >= nt || grid[zero] != 0.0)
    throw std::invalid_argument("solve_branch: grid must contain t = 0");

  DiftBranch branch;
  branch.t = grid;
  branch.x.assign(nt, {});
  branch.diagnostics.assign(nt, {});

  // Solve at t = 0 from (0, p2).
  std::vector<Vector> y(nt);
  y[zero] = prob.p;  // chart coordinates: X1 block of p is zero
  branch.diagnostics[zero] = detail::newton_solve(prob, 0.0, y[zero]);

  for (int dir : {+1, -1}) {
    for (int i = zero + dir; i >= 0 && i < nt; i += dir) {
      y[i] = y[i - dir];
      branch.diagnostics[i] = detail::newton_solve(prob, grid[i], y[i]);
    }
  }

  // Recover x(t) = (t (y1 - w), y2) and the residual contract.
  for (int i = 0; i < nt; ++i) {
    Vector x(prob.dim());
    for (int j = 0; j < prob.n1; ++j) x[j] = grid[i] * (y[i][j] - prob.v[j]);
    for (int j = prob.n1; j < prob.dim(); ++j) x[j] = y[i][j];
    branch.x[i] = std::move(x);
    const double res = detail::norm(detail::sub(prob.F(grid[i], branch.x[i]), prob.q));
    branch.max_residual = std::max(branch.max_residual, res);
  }

  // Branch derivative at 0: central differences at the symmetric pairs,
  // extrapolated to h = 0 by Neville iteration in h^2 (up to the four
  // innermost pairs).
  auto sample = [&](double t) -> const Vector& {
    for (int i = 0; i < nt; ++i)
      if (std::abs(grid[i] - t) <= 1e-15) return branch.x[i];
    throw std::invalid_argument("solve_branch: missing grid point for the derivative");
  };
  std::vector<double> pos;
  for (double t : grid) {
    if (t <= 0.0) continue;
    for (double s : grid)
      if (std::abs(s + t) <= 1e-15) {
        pos.push_back(t);
        break;
      }
  }
  if (pos.empty()) throw std::invalid_argument("solve_branch: grid has no symmetric pair");
  std::sort(pos.begin(), pos.end());
  if (pos.size() > 4) pos.resize(4);

  const int n = prob.dim();
  const int np = static_cast<int>(pos.size());
  branch.x_prime0.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    std::vector<double> d(np), h2(np);
    for (int i = 0; i < np; ++i) {
      d[i] = (sample(pos[i])[j] - sample(-pos[i])[j]) / (2.0 * pos[i]);
      h2[i] = pos[i] * pos[i];
    }
    for (int level = 1; level < np; ++level)
      for (int i = 0; i + level < np; ++i)
        d[i] = (h2[i + level] * d[i] - h2[i] * d[i + 1]) / (h2[i + level] - h2[i]);
    branch.x_prime0[j] = d[0];
  }

  double tang = 0.0;
  for (int j = 0; j < prob.n1; ++j) {
    const double e = branch.x_prime0[j] + prob.v[j];
    tang += e * e;
  }
  branch.tangency_residual = std::sqrt(tang);
  return branch;
}

}  // namespace eigperturb::dift
