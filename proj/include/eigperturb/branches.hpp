// Eigenvalue branch tracking: sample the discrete spectrum in a window
// around lambda0 over a symmetric t-grid and a mesh ladder, Richardson-
// extrapolate in h, match branches by value continuation (eigenvector
// overlap across t = 0 breaks ties inside quasi-degenerate clusters),
// estimate lambda'(0) by Richardson-combined central differences, and
// compare the measured slopes against the pencil predictions.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "eigperturb/fem.hpp"
#include "eigperturb/hadamard.hpp"

namespace eigperturb::branches {

using geometry::DomainSpec;
using geometry::PerturbFamily;
using linalg::Matrix;

struct BranchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BranchOptions {
  double window = 0.0;                  // 0 -> 0.25 * lambda0
  std::vector<double> t_grid = {-2e-3, -1e-3, 1e-3, 2e-3};  // 0 added internally
  std::vector<int> mesh_levels = {16, 32, 64};
  int expected_dim = 0;                 // 0 = accept the observed cluster size
  uint64_t seed = 0x0b1a5eedULL;
};

struct BranchTable {
  double lambda0 = 0.0;
  double window = 0.0;
  std::vector<double> t_grid;      // ascending, contains 0
  std::vector<int> mesh_levels;    // ascending
  int cluster_size = 0;

  // level_values[l][ti] = eigenvalues inside the window, sorted ascending.
  std::vector<std::vector<std::vector<double>>> level_values;
  // extrapolated[b][ti], uncertainty[b][ti] for branch label b; the label ->
  // sorted-index assignment per t is in branch_index[b][ti].
  std::vector<std::vector<double>> extrapolated;
  std::vector<std::vector<double>> uncertainty;
  std::vector<std::vector<int>> branch_index;
  std::vector<double> observed_order;  // per t, from the three-level fit

  int t_index(double t) const {
    for (size_t i = 0; i < t_grid.size(); ++i)
      if (std::abs(t_grid[i] - t) <= 1e-15) return static_cast<int>(i);
    throw BranchError("BranchTable: t not on the grid");
  }
};

namespace detail {

inline uint64_t mix_seed(uint64_t base, int level, int ti) {
  uint64_t h = base ^ (0x9e3779b97f4a7c15ULL * (level + 1));
  h ^= (h >> 30);
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= static_cast<uint64_t>(ti + 1) * 0x94d049bb133111ebULL;
  return h ^ (h >> 27);
}

/// All permutations of {0..n-1} for the tiny matching problems (n <= 4).
inline std::vector<std::vector<int>> permutations(int n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::vector<int>> all;
  do {
    all.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return all;
}

struct LevelSolve {
  std::vector<double> values;              // in-window, sorted
  std::vector<std::vector<double>> vectors;  // finest level only
};

}  // namespace detail

/// Sample eigenvalue branches of the deformed domains phi_t(Omega) inside
/// the window around lambda0.
inline BranchTable sample_branches(const DomainSpec& domain, const PerturbFamily& family,
                                   double lambda0, const BranchOptions& opts = {}) {
  if (!domain.is_2d()) throw BranchError("sample_branches: FEM validation needs a 2D domain");
  BranchTable table;
  table.lambda0 = lambda0;
  table.window = opts.window > 0.0 ? opts.window : 0.25 * lambda0;
  table.mesh_levels = opts.mesh_levels;
  std::sort(table.mesh_levels.begin(), table.mesh_levels.end());
  if (table.mesh_levels.size() < 2) throw BranchError("sample_branches: need >= 2 mesh levels");

  table.t_grid = opts.t_grid;
  table.t_grid.push_back(0.0);
  std::sort(table.t_grid.begin(), table.t_grid.end());
  table.t_grid.erase(std::unique(table.t_grid.begin(), table.t_grid.end()), table.t_grid.end());

  const double lo = lambda0 - table.window, hi = lambda0 + table.window;
  const int nt = static_cast<int>(table.t_grid.size());
  const int nl = static_cast<int>(table.mesh_levels.size());

  std::vector<fem::Mesh> meshes;
  for (int l : table.mesh_levels) meshes.push_back(fem::mesh_domain(domain, l));

  // Reference mass (finest mesh, t = 0) for eigenvector overlaps.
  fem::SparseSym mass_ref;

  // Probe the coarsest level at t = 0 for the request count and the cluster.
  int request = std::max(opts.expected_dim + 2, 4);
  {
    const auto sys = fem::assemble(meshes[0], family, 0.0);
    for (;;) {
      fem::LanczosOptions lopts;
      lopts.seed = detail::mix_seed(opts.seed, -1, 0);
      const auto eig = fem::lowest_eigs(sys.stiffness, sys.mass, request, 0.0, lopts);
      if (eig.values.back() > hi * 1.05 || request >= std::min(30, sys.stiffness.n)) {
        int cluster = 0;
        for (double v : eig.values)
          if (v >= lo && v <= hi) ++cluster;
        table.cluster_size = cluster;
        break;
      }
      request += 4;
    }
  }
  if (table.cluster_size < 1)
    throw BranchError("sample_branches: window contains no eigenvalue at t = 0");
  if (opts.expected_dim > 0 && table.cluster_size != opts.expected_dim)
    throw BranchError("sample_branches: window captured multiplicity " +
                      std::to_string(table.cluster_size) + ", expected " +
                      std::to_string(opts.expected_dim));
  const int c = table.cluster_size;

  table.level_values.assign(nl, std::vector<std::vector<double>>(nt));
  std::vector<detail::LevelSolve> finest(nt);

  for (int l = 0; l < nl; ++l) {
    const bool is_finest = l == nl - 1;
    for (int ti = 0; ti < nt; ++ti) {
      const double t = table.t_grid[ti];
      const auto sys = fem::assemble(meshes[l], family, t);
      if (is_finest && t == 0.0) mass_ref = sys.mass;

      int m = request;
      fem::EigResult eig;
      for (;;) {
        fem::LanczosOptions lopts;
        lopts.seed = detail::mix_seed(opts.seed, l, ti);
        eig = fem::lowest_eigs(sys.stiffness, sys.mass, m, 0.0, lopts);
        if (eig.values.back() > hi * 1.02 || m >= std::min(34, sys.stiffness.n)) break;
        m += 4;
      }

      std::vector<double>& vals = table.level_values[l][ti];
      for (size_t i = 0; i < eig.values.size(); ++i) {
        if (eig.values[i] < lo || eig.values[i] > hi) continue;
        vals.push_back(eig.values[i]);
        if (is_finest) finest[ti].vectors.push_back(eig.vectors[i]);
      }
      if (static_cast<int>(vals.size()) != c)
        throw BranchError("sample_branches: cluster count changed to " +
                          std::to_string(vals.size()) + " at t = " + std::to_string(t) +
                          ", level " + std::to_string(table.mesh_levels[l]));
      if (is_finest) finest[ti].values = vals;
    }
  }

  // Richardson extrapolation in h per (t, sorted index).
  std::vector<std::vector<double>> ext(nt, std::vector<double>(c));
  std::vector<std::vector<double>> unc(nt, std::vector<double>(c));
  table.observed_order.assign(nt, 0.0);
  for (int ti = 0; ti < nt; ++ti) {
    double order_acc = 0.0;
    int order_cnt = 0;
    for (int i = 0; i < c; ++i) {
      std::vector<double> v(nl);
      for (int l = 0; l < nl; ++l) v[l] = table.level_values[l][ti][i];
      const double scale = std::max(1.0, std::abs(v[nl - 1]));
      const double d_last = v[nl - 1] - v[nl - 2];
      if (std::abs(d_last) <= 1e-12 * scale) {
        ext[ti][i] = v[nl - 1];
        unc[ti][i] = std::max(std::abs(v[nl - 1] - v[0]), 1e-12 * scale);
        continue;
      }
      double p = 2.0;
      if (nl >= 3) {
        const double d_prev = v[nl - 2] - v[nl - 3];
        if (std::abs(d_prev) > 1e-12 * scale && d_prev * d_last > 0.0) {
          const double measured = std::log2(d_prev / d_last);
          if (measured > 1.0 && measured < 4.0) p = measured;
          order_acc += measured;
          ++order_cnt;
        }
      }
      const double factor = std::pow(2.0, p) - 1.0;
      ext[ti][i] = v[nl - 1] + d_last / factor;
      if (nl >= 3) {
        const double ext_prev = v[nl - 2] + (v[nl - 2] - v[nl - 3]) / factor;
        unc[ti][i] = std::abs(ext[ti][i] - ext_prev) + 1e-11 * scale;
      } else {
        unc[ti][i] = std::abs(d_last) / factor + 1e-11 * scale;
      }
    }
    table.observed_order[ti] = order_cnt > 0 ? order_acc / order_cnt : 2.0;
  }

  // Branch labeling: labels = sorted order at t = 0; march outward on each
  // side assigning sorted values by minimal total deviation from a linear
  // prediction.
  table.branch_index.assign(c, std::vector<int>(nt, -1));
  const int zero_ti = table.t_index(0.0);
  for (int b = 0; b < c; ++b) table.branch_index[b][zero_ti] = b;

  const auto perms = detail::permutations(c);
  auto march = [&](int dir) {
    for (int step = 1;; ++step) {
      const int ti = zero_ti + dir * step;
      if (ti < 0 || ti >= nt) break;
      double best_cost = 1e300;
      const std::vector<int>* best = nullptr;
      for (const auto& perm : perms) {
        double cost = 0.0;
        for (int b = 0; b < c; ++b) {
          // Predict branch b at ti from its previous one or two samples.
          const int ti1 = zero_ti + dir * (step - 1);
          const double v1 = ext[ti1][table.branch_index[b][ti1]];
          double pred = v1;
          if (step >= 2) {
            const int ti2 = zero_ti + dir * (step - 2);
            const double v2 = ext[ti2][table.branch_index[b][ti2]];
            const double dt1 = table.t_grid[ti] - table.t_grid[ti1];
            const double dt21 = table.t_grid[ti1] - table.t_grid[ti2];
            pred = v1 + (v1 - v2) * dt1 / dt21;
          }
          cost += std::abs(ext[ti][perm[b]] - pred);
        }
        if (cost < best_cost) {
          best_cost = cost;
          best = &perm;
        }
      }
      for (int b = 0; b < c; ++b) table.branch_index[b][ti] = (*best)[b];
    }
  };
  march(+1);
  march(-1);

  // Join the two sides through the quasi-degenerate cluster at t = 0 with
  // eigenvector overlaps between the innermost stencil points.
  double cluster_width = 0.0;
  for (int i = 0; i + 1 < c; ++i)
    cluster_width = std::max(cluster_width, ext[zero_ti][i + 1] - ext[zero_ti][i]);
  if (c > 1 && cluster_width < table.window / 10.0 && zero_ti > 0 && zero_ti + 1 < nt &&
      !mass_ref.val.empty()) {
    const int tm = zero_ti - 1, tp = zero_ti + 1;
    Matrix overlap(c, c);
    std::vector<double> scratch(mass_ref.n);
    for (int i = 0; i < c; ++i) {
      mass_ref.apply(finest[tm].vectors[i], scratch);
      for (int j = 0; j < c; ++j)
        overlap(i, j) = std::abs(linalg::dot(scratch, finest[tp].vectors[j]));
    }
    // Relabel the negative side so each label's -h vector matches its +h one.
    double best_score = -1.0;
    const std::vector<int>* best = nullptr;
    for (const auto& perm : perms) {
      double score = 0.0;
      for (int b = 0; b < c; ++b)
        score += overlap(table.branch_index[perm[b]][tm], table.branch_index[b][tp]);
      if (score > best_score) {
        best_score = score;
        best = &perm;
      }
    }
    std::vector<std::vector<int>> relabeled = table.branch_index;
    for (int b = 0; b < c; ++b)
      for (int ti = 0; ti < zero_ti; ++ti) relabeled[b][ti] = table.branch_index[(*best)[b]][ti];
    table.branch_index = std::move(relabeled);
  }

  table.extrapolated.assign(c, std::vector<double>(nt));
  table.uncertainty.assign(c, std::vector<double>(nt));
  for (int b = 0; b < c; ++b)
    for (int ti = 0; ti < nt; ++ti) {
      table.extrapolated[b][ti] = ext[ti][table.branch_index[b][ti]];
      table.uncertainty[b][ti] = unc[ti][table.branch_index[b][ti]];
    }
  return table;
}

struct SlopeEstimate {
  int branch_id = 0;
  double slope = 0.0;
  double uncertainty = 0.0;
};

/// lambda'(0) per branch from central differences at the two smallest
/// symmetric step sizes, Richardson-combined; the uncertainty adds the
/// stencil disagreement and the mesh-extrapolation residual.
inline std::vector<SlopeEstimate> estimate_slopes(const BranchTable& table) {
  std::vector<double> steps;
  for (double t : table.t_grid)
    if (t > 0.0 && std::any_of(table.t_grid.begin(), table.t_grid.end(),
                               [t](double s) { return std::abs(s + t) <= 1e-15; }))
      steps.push_back(t);
  std::sort(steps.begin(), steps.end());
  if (steps.size() < 2)
    throw BranchError("estimate_slopes: need at least two symmetric stencil pairs");
  const double h1 = steps[0], h2 = steps[1];
  const double r2 = (h2 / h1) * (h2 / h1);

  std::vector<SlopeEstimate> out;
  for (size_t b = 0; b < table.extrapolated.size(); ++b) {
    const auto& v = table.extrapolated[b];
    const auto& u = table.uncertainty[b];
    const int ip1 = table.t_index(h1), im1 = table.t_index(-h1);
    const int ip2 = table.t_index(h2), im2 = table.t_index(-h2);
    const double d1 = (v[ip1] - v[im1]) / (2.0 * h1);
    const double d2 = (v[ip2] - v[im2]) / (2.0 * h2);
    SlopeEstimate est;
    est.branch_id = static_cast<int>(b);
    est.slope = (r2 * d1 - d2) / (r2 - 1.0);
    const double mesh_term = (u[ip1] + u[im1]) / (2.0 * h1);
    est.uncertainty = std::abs(d1 - d2) + mesh_term + 1e-9 * std::max(1.0, std::abs(table.lambda0));
    out.push_back(est);
  }
  return out;
}

struct BranchMatch {
  int branch_id = -1;
  double predicted = 0.0;
  double measured = 0.0;
  double uncertainty = 0.0;
  bool pass = false;
  bool informational = false;  // matched to a non-simple root, no pass/fail
};

struct SumRule {
  double measured_sum = 0.0;
  double trace_target = 0.0;  // -trace(B^-1 A)
  double tolerance = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<BranchMatch> matches;
  SumRule sum_rule;
  bool counts_ok = false;
  bool pass = false;
  std::string diagnostic;
};

/// Match the multiset of simple-root predictions against the measured
/// slopes (slope-nearest injective assignment); non-simple roots are
/// compared informationally against the remaining branches.
inline ValidationReport compare(const hadamard::SlopePrediction& prediction,
                                const std::vector<SlopeEstimate>& measured, double tol_abs,
                                double tol_rel, const Matrix& a, const Matrix& b) {
  ValidationReport report;
  const int nm = static_cast<int>(measured.size());

  std::vector<double> simple, multiple;
  for (const auto& r : prediction.roots) (r.simple ? simple : multiple).push_back(r.slope);

  report.counts_ok = static_cast<int>(prediction.roots.size()) == nm;
  if (static_cast<int>(simple.size()) > nm) {
    report.counts_ok = false;
    report.diagnostic = "more simple-root predictions than measured branches";
    report.pass = false;
    return report;
  }
  if (!report.counts_ok)
    report.diagnostic = "pencil dimension " + std::to_string(prediction.roots.size()) +
                        " does not match measured branch count " + std::to_string(nm);

  // Injective assignment of simple predictions to measured branches by
  // minimal total slope deviation (counts are tiny, enumerate).
  std::vector<int> midx(nm);
  std::iota(midx.begin(), midx.end(), 0);
  std::vector<int> best_assign;
  double best_cost = 1e300;
  std::vector<int> select(nm, 0);
  // Enumerate ordered picks of |simple| distinct measured indices.
  std::vector<int> pick;
  std::function<void()> recurse = [&]() {
    if (pick.size() == simple.size()) {
      double cost = 0.0;
      for (size_t i = 0; i < pick.size(); ++i)
        cost += std::abs(simple[i] - measured[pick[i]].slope);
      if (cost < best_cost) {
        best_cost = cost;
        best_assign = pick;
      }
      return;
    }
    for (int i = 0; i < nm; ++i) {
      if (select[i]) continue;
      select[i] = 1;
      pick.push_back(i);
      recurse();
      pick.pop_back();
      select[i] = 0;
    }
  };
  recurse();

  std::vector<bool> taken(nm, false);
  bool all_pass = true;
  for (size_t i = 0; i < simple.size(); ++i) {
    const auto& m = measured[best_assign[i]];
    taken[best_assign[i]] = true;
    BranchMatch bm;
    bm.branch_id = m.branch_id;
    bm.predicted = simple[i];
    bm.measured = m.slope;
    bm.uncertainty = m.uncertainty;
    bm.pass = std::abs(m.slope - simple[i]) <= tol_abs + tol_rel * std::abs(simple[i]);
    all_pass = all_pass && bm.pass;
    report.matches.push_back(bm);
  }

  // When distinct predicted slopes face measured slopes that all cluster
  // together, the stencil/mesh resolution could not separate the branches
  // (the discrete curves still carry the cluster-mean slope); say so rather
  // than reporting a bare mismatch.
  if (!all_pass && simple.size() >= 2) {
    const auto [pmin, pmax] = std::minmax_element(simple.begin(), simple.end());
    double mmin = 1e300, mmax = -1e300;
    for (size_t i = 0; i < simple.size(); ++i) {
      mmin = std::min(mmin, measured[best_assign[i]].slope);
      mmax = std::max(mmax, measured[best_assign[i]].slope);
    }
    if ((*pmax - *pmin) > 4.0 * (mmax - mmin)) {
      if (!report.diagnostic.empty()) report.diagnostic += "; ";
      report.diagnostic +=
          "measured slopes cluster near the prediction mean: the t-grid and mesh ladder "
          "cannot separate the predicted branches (widen t_grid or refine the ladder)";
    }
  }

  // Remaining measured branches: informational comparison against the
  // nearest non-simple root.
  for (int i = 0; i < nm; ++i) {
    if (taken[i]) continue;
    BranchMatch bm;
    bm.branch_id = measured[i].branch_id;
    bm.measured = measured[i].slope;
    bm.uncertainty = measured[i].uncertainty;
    bm.informational = true;
    if (multiple.empty()) {
      report.counts_ok = false;
      report.diagnostic = "measured branch without a matching pencil root";
      bm.predicted = std::numeric_limits<double>::quiet_NaN();
    } else {
      double best = multiple[0];
      for (double s : multiple)
        if (std::abs(s - measured[i].slope) < std::abs(best - measured[i].slope)) best = s;
      bm.predicted = best;
    }
    report.matches.push_back(bm);
  }

  // Sum rule: sum of measured slopes = -trace(B^-1 A) within combined
  // uncertainty.
  double trace = 0.0;
  {
    const auto lu = linalg::lu_factor(b);
    for (int j = 0; j < a.cols(); ++j) {
      std::vector<double> col(a.rows());
      for (int i = 0; i < a.rows(); ++i) col[i] = a(i, j);
      const auto x = lu.solve(col);
      trace += x[j];
    }
  }
  report.sum_rule.trace_target = -trace;
  double sum = 0.0, combined = 0.0;
  for (const auto& m : measured) {
    sum += m.slope;
    combined += m.uncertainty;
  }
  report.sum_rule.measured_sum = sum;
  report.sum_rule.tolerance = combined + 1e-8 * (1.0 + std::abs(trace));
  report.sum_rule.pass = std::abs(sum - report.sum_rule.trace_target) <= report.sum_rule.tolerance;

  report.pass = all_pass && report.counts_ok && report.sum_rule.pass;
  return report;
}

/// CSV dump: t, mesh_level, branch_id, lambda, extrapolated_lambda.
inline void write_branches_csv(std::ostream& out, const BranchTable& table) {
  out << "t,mesh_level,branch_id,lambda,extrapolated_lambda\n";
  out.precision(17);
  const int nt = static_cast<int>(table.t_grid.size());
  for (int ti = 0; ti < nt; ++ti)
    for (size_t l = 0; l < table.mesh_levels.size(); ++l)
      for (int b = 0; b < table.cluster_size; ++b)
        out << table.t_grid[ti] << ',' << table.mesh_levels[l] << ',' << b << ','
            << table.level_values[l][ti][table.branch_index[b][ti]] << ','
            << table.extrapolated[b][ti] << '\n';
}

}  // namespace eigperturb::branches
