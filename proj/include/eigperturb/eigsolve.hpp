// Sparse symmetric machinery for the finite-element validation engine:
// CSR storage, a profile (skyline) Cholesky factorization, and a
// shift-invert Lanczos iteration with full reorthogonalization for the
// lowest generalized eigenpairs of K u = lambda M u. Multiple eigenvalues
// are resolved by restarting Lanczos on a fresh random vector deflated
// against the converged set.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "eigperturb/linalg.hpp"

namespace eigperturb::fem {

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Compressed sparse row storage of a structurally symmetric matrix (both
/// triangles stored).
struct SparseSym {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  void apply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
      y[i] = s;
    }
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(n);
    apply(x, y);
    return y;
  }
};

/// Deterministic triplet accumulator; duplicate entries are summed.
class SparseBuilder {
 public:
  explicit SparseBuilder(int n) : n_(n) {}

  void add(int i, int j, double v) { entries_.push_back({i, j, v}); }

  SparseSym build() const {
    std::vector<size_t> order(entries_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (entries_[a].i != entries_[b].i) return entries_[a].i < entries_[b].i;
      return entries_[a].j < entries_[b].j;
    });

    SparseSym m;
    m.n = n_;
    m.row_ptr.assign(n_ + 1, 0);
    for (size_t idx = 0; idx < order.size(); ++idx) {
      const auto& e = entries_[order[idx]];
      if (idx > 0) {
        const auto& p = entries_[order[idx - 1]];
        if (p.i == e.i && p.j == e.j) {
          m.val.back() += e.v;
          continue;
        }
      }
      m.col.push_back(e.j);
      m.val.push_back(e.v);
      ++m.row_ptr[e.i + 1];
    }
    for (int i = 0; i < n_; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
    return m;
  }

 private:
  struct Entry {
    int i, j;
    double v;
  };
  int n_ = 0;
  std::vector<Entry> entries_;
};

/// Profile (skyline) Cholesky A = U^T U with U stored as packed column
/// segments. Fill stays within the column profile, which the structured
/// meshes keep narrow under their ring-major / row-major node orderings.
class SkylineCholesky {
 public:
  /// Factor the CSR matrix; throws SolveError when a pivot fails (matrix not
  /// positive definite).
  void factor(const SparseSym& a) {
    n_ = a.n;
    col_start_.assign(n_, 0);
    for (int i = 0; i < n_; ++i) {
      int first = i;
      for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) first = std::min(first, a.col[k]);
      col_start_[i] = first;
    }
    // The profile must be monotone enough for the factorization loops: entry
    // (i, j) with i < j requires col_start_[j] <= i, which holds by
    // construction since (j, i) is stored in row j.
    offset_.assign(n_ + 1, 0);
    for (int j = 0; j < n_; ++j) offset_[j + 1] = offset_[j] + (j - col_start_[j] + 1);
    u_.assign(offset_[n_], 0.0);

    // Scatter A's upper triangle into the packed columns.
    for (int i = 0; i < n_; ++i) {
      for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
        const int j = a.col[k];
        if (j < i) continue;  // keep (i <= j)
        u_[offset_[j] + (i - col_start_[j])] = a.val[k];
      }
    }

    for (int j = 0; j < n_; ++j) {
      double* colj = &u_[offset_[j]];
      const int rj = col_start_[j];
      for (int i = rj; i < j; ++i) {
        const int ri = col_start_[i];
        const int lo = std::max(ri, rj);
        const double* coli = &u_[offset_[i]];
        double s = colj[i - rj];
        for (int k = lo; k < i; ++k) s -= coli[k - ri] * colj[k - rj];
        colj[i - rj] = s / coli[i - ri];
      }
      double d = colj[j - rj];
      for (int k = rj; k < j; ++k) d -= colj[k - rj] * colj[k - rj];
      if (!(d > 0.0)) throw SolveError("SkylineCholesky: non-positive pivot");
      colj[j - rj] = std::sqrt(d);
    }
  }

  void solve(std::span<const double> b, std::span<double> x) const {
    // U^T y = b
    for (int j = 0; j < n_; ++j) {
      const int rj = col_start_[j];
      const double* colj = &u_[offset_[j]];
      double s = b[j];
      for (int k = rj; k < j; ++k) s -= colj[k - rj] * x[k];
      x[j] = s / colj[j - rj];
    }
    // U x = y
    for (int j = n_ - 1; j >= 0; --j) {
      const int rj = col_start_[j];
      const double* colj = &u_[offset_[j]];
      const double xj = x[j] / colj[j - rj];
      x[j] = xj;
      for (int k = rj; k < j; ++k) x[k] -= colj[k - rj] * xj;
    }
  }

  std::vector<double> solve(std::span<const double> b) const {
    std::vector<double> x(n_);
    solve(b, x);
    return x;
  }

 private:
  int n_ = 0;
  std::vector<int> col_start_;
  std::vector<size_t> offset_;
  std::vector<double> u_;
};

struct EigResult {
  std::vector<double> values;                 // ascending
  std::vector<std::vector<double>> vectors;   // M-orthonormal
  std::vector<double> residuals;              // ||K u - lambda M u|| / ||M u||
};

struct LanczosOptions {
  int max_iterations = 260;
  int max_restarts = 8;
  double ritz_tolerance = 1e-12;
  double residual_contract = 1e-8;
  uint64_t seed = 0x5eed0001ULL;
};

namespace detail {

inline double m_inner(const SparseSym& m, std::span<const double> x, std::span<const double> y,
                      std::vector<double>& scratch) {
  m.apply(y, scratch);
  return linalg::dot(x, scratch);
}

}  // namespace detail

/// Lowest `count` generalized eigenvalues of (K, M) by shift-invert Lanczos
/// on (K - sigma M)^-1 M with full reorthogonalization; sigma must stay
/// below the first eigenvalue (default 0 for Dirichlet stiffness).
inline EigResult lowest_eigs(const SparseSym& k, const SparseSym& m, int count, double sigma = 0.0,
                             const LanczosOptions& opts = {}) {
  const int n = k.n;
  if (count < 1) throw std::invalid_argument("lowest_eigs: count >= 1 required");
  if (count > n) throw std::invalid_argument("lowest_eigs: count exceeds system size");

  SparseSym shifted = k;
  if (sigma != 0.0) {
    // K and M share their pattern (same mesh adjacency), so the value arrays
    // line up entry by entry.
    for (size_t i = 0; i < shifted.val.size(); ++i) shifted.val[i] -= sigma * m.val[i];
  }
  SkylineCholesky chol;
  chol.factor(shifted);

  std::mt19937_64 gen(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::vector<double>> converged;  // M-orthonormal eigenvectors
  std::vector<double> conv_values;

  std::vector<double> scratch(n), mw(n);

  auto m_orthogonalize = [&](std::vector<double>& w, const std::vector<std::vector<double>>& basis) {
    for (int pass = 0; pass < 2 && !basis.empty(); ++pass) {
      m.apply(w, mw);
      for (const auto& u : basis) {
        const double c = linalg::dot(mw, u);
        for (int i = 0; i < n; ++i) w[i] -= c * u[i];
      }
    }
  };

  // One Lanczos run: converge up to `want` new eigenpairs, deflated against
  // everything already converged. Returns the number of pairs added.
  auto run_once = [&](int want) -> int {
    const int before = static_cast<int>(converged.size());

    // Fresh start vector, deflated against the converged set.
    std::vector<double> v(n);
    for (auto& x : v) x = gauss(gen);
    m_orthogonalize(v, converged);
    const double nv = std::sqrt(detail::m_inner(m, v, v, scratch));
    if (nv < 1e-14) return 0;
    for (auto& x : v) x /= nv;

    std::vector<std::vector<double>> basis = {v};
    std::vector<double> alpha, beta;
    std::vector<double> w(n);

    int iters = std::min(opts.max_iterations, n);

    for (int j = 0; j < iters; ++j) {
      // w = (K - sigma M)^-1 M v_j
      m.apply(basis[j], scratch);
      chol.solve(scratch, w);

      m.apply(w, mw);
      const double a = linalg::dot(mw, basis[j]);
      alpha.push_back(a);

      for (int i = 0; i < n; ++i) w[i] -= a * basis[j][i];
      if (j > 0)
        for (int i = 0; i < n; ++i) w[i] -= beta[j - 1] * basis[j - 1][i];

      // Full reorthogonalization (two passes) against the Lanczos basis and
      // the deflated converged vectors.
      for (int pass = 0; pass < 2; ++pass) {
        m.apply(w, mw);
        for (const auto& u : basis) {
          const double c = linalg::dot(mw, u);
          for (int i = 0; i < n; ++i) w[i] -= c * u[i];
        }
        m.apply(w, mw);
        for (const auto& u : converged) {
          const double c = linalg::dot(mw, u);
          for (int i = 0; i < n; ++i) w[i] -= c * u[i];
        }
      }

      const double b = std::sqrt(std::max(0.0, detail::m_inner(m, w, w, scratch)));
      const bool breakdown = b < 1e-13;

      if (!breakdown) {
        beta.push_back(b);
        std::vector<double> next = w;
        for (auto& x : next) x /= b;
        basis.push_back(std::move(next));
      }

      // Ritz extraction every few steps (and on breakdown / last step).
      const int jn = static_cast<int>(alpha.size());
      if (breakdown || j == iters - 1 || (jn >= want && jn % 4 == 0)) {
        std::vector<double> offd(beta.begin(), beta.begin() + std::max(0, jn - 1));
        const auto tri = linalg::tridiagonal_eigen(alpha, offd);
        // Largest theta = smallest lambda. Count converged from the top.
        int good = 0;
        for (int idx = jn - 1; idx >= 0 && good < want; --idx) {
          const double theta = tri.values[idx];
          if (theta <= 0.0) break;
          const double bound = breakdown ? 0.0 : std::abs(beta[jn - 1] * tri.vectors(jn - 1, idx));
          if (bound <= opts.ritz_tolerance * std::max(theta, 1e-30)) {
            ++good;
          } else {
            break;
          }
        }
        if (good >= want || breakdown || j == iters - 1) {
          // Assemble the Ritz vectors for the converged ones.
          for (int idx = jn - 1; idx >= jn - good && idx >= 0; --idx) {
            const double theta = tri.values[idx];
            if (theta <= 0.0) continue;
            std::vector<double> u(n, 0.0);
            for (int c = 0; c < jn; ++c) {
              const double y = tri.vectors(c, idx);
              const auto& vc = basis[c];
              for (int i = 0; i < n; ++i) u[i] += y * vc[i];
            }
            // Normalize in M and verify the explicit residual.
            const double nm = std::sqrt(detail::m_inner(m, u, u, scratch));
            if (nm < 1e-14) continue;
            for (auto& x : u) x /= nm;
            const double lambda = sigma + 1.0 / theta;

            k.apply(u, scratch);
            m.apply(u, mw);
            double rnum = 0.0, rden = 0.0;
            for (int i = 0; i < n; ++i) {
              const double r = scratch[i] - lambda * mw[i];
              rnum += r * r;
              rden += mw[i] * mw[i];
            }
            const double residual = std::sqrt(rnum) / std::sqrt(rden);
            if (residual > opts.residual_contract) continue;

            // Deduplicate against already converged vectors.
            m.apply(u, mw);
            bool dup = false;
            for (const auto& uc : converged)
              if (std::abs(linalg::dot(mw, uc)) > 0.9) dup = true;
            if (dup) continue;

            m_orthogonalize(u, converged);
            const double nm2 = std::sqrt(detail::m_inner(m, u, u, scratch));
            if (nm2 < 1e-7) continue;
            for (auto& x : u) x /= nm2;

            converged.push_back(std::move(u));
            conv_values.push_back(lambda);
          }
          break;  // stop this run after an extraction
        }
      }
      if (breakdown) break;
    }
    return static_cast<int>(converged.size()) - before;
  };

  for (int restart = 0; restart < opts.max_restarts; ++restart) {
    if (static_cast<int>(converged.size()) >= count) break;
    run_once(count - static_cast<int>(converged.size()));
  }
  if (static_cast<int>(converged.size()) < count)
    throw SolveError("lowest_eigs: Lanczos failed to converge to the requested count");

  // Verification probes: a single Krylov vector cannot see the second copy
  // of an exactly multiple eigenvalue, so the run above may have skipped one
  // and converged a higher mode instead. Probe the deflated operator for its
  // smallest remaining eigenvalue until it lies at or above the current
  // count-th value.
  for (int round = 0; round < opts.max_restarts; ++round) {
    std::vector<double> sel = conv_values;
    std::sort(sel.begin(), sel.end());
    const double top = sel[count - 1];
    const int added = run_once(1);
    if (added == 0) break;
    const double found = conv_values.back();
    if (found >= top - 1e-8 * std::max(1.0, std::abs(top))) break;  // nothing was missed
  }

  // Sort ascending by eigenvalue and recompute the final residuals.
  std::vector<int> order(converged.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return conv_values[a] < conv_values[b]; });

  EigResult res;
  for (int idx = 0; idx < count; ++idx) {
    const int i = order[idx];
    const auto& u = converged[i];
    k.apply(u, scratch);
    m.apply(u, mw);
    double rnum = 0.0, rden = 0.0;
    for (int jj = 0; jj < n; ++jj) {
      const double r = scratch[jj] - conv_values[i] * mw[jj];
      rnum += r * r;
      rden += mw[jj] * mw[jj];
    }
    res.values.push_back(conv_values[i]);
    res.vectors.push_back(u);
    res.residuals.push_back(std::sqrt(rnum) / std::sqrt(rden));
  }
  return res;
}

}  // namespace eigperturb::fem
