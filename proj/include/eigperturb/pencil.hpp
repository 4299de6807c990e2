// Solver for the small dense generalized symmetric-definite pencil
// det(A - sB) = 0: Cholesky reduction B = L L^T followed by a cyclic Jacobi
// eigensolve of L^-1 A L^-T, plus the LU-based characteristic polynomial
// evaluation used as an independent oracle.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "eigperturb/linalg.hpp"

namespace eigperturb::pencil {

using linalg::Matrix;

inline constexpr int kMaxDimension = 16;

struct NotPositiveDefinite : std::domain_error {
  using std::domain_error::domain_error;
};
struct IllConditionedWeight : std::domain_error {
  using std::domain_error::domain_error;
};

struct PencilRoots {
  std::vector<double> roots;   // ascending
  std::vector<double> gaps;    // consecutive differences
  std::vector<bool> simple;    // gap to both neighbors above tolerance
  Matrix vectors;              // B-orthonormal generalized eigenvectors (columns)
  double gap_tolerance = 0.0;
};

/// det(A - sB) by partial-pivot LU.
inline double char_poly_eval(const Matrix& a, const Matrix& b, double s) {
  if (!a.is_square() || a.rows() != b.rows() || !b.is_square())
    throw std::invalid_argument("char_poly_eval: shape mismatch");
  if (a.rows() > kMaxDimension) throw std::invalid_argument("char_poly_eval: dimension > 16");
  return linalg::lu_det(a - b * s);
}

/// Roots of det(A - sB) with simplicity classification. A root counts as
/// simple iff its gap to both neighbors exceeds
/// max(1e-8, 1e-6 * spectral radius).
inline PencilRoots generalized_roots(const Matrix& a, const Matrix& b) {
  const int n = a.rows();
  if (!a.is_square() || !b.is_square() || b.rows() != n)
    throw std::invalid_argument("generalized_roots: shape mismatch");
  if (n > kMaxDimension) throw std::invalid_argument("generalized_roots: dimension > 16");

  // Reject ill-conditioned weights before attempting the reduction.
  const auto beig = linalg::jacobi_eigen(b);
  if (!(beig.values.front() > 0.0))
    throw NotPositiveDefinite("generalized_roots: B is not positive definite");
  if (beig.values.back() / beig.values.front() > 1e8)
    throw IllConditionedWeight("generalized_roots: cond(B) exceeds 1e8");

  const auto chol = linalg::cholesky(b);
  if (!chol) throw NotPositiveDefinite("generalized_roots: Cholesky of B failed");
  const Matrix& l = *chol;

  // C = L^-1 A L^-T via two triangular solves.
  Matrix c(n, n);
  for (int col = 0; col < n; ++col) {
    // y = L^-1 a(:, col)
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
      double s = a(i, col);
      for (int k = 0; k < i; ++k) s -= l(i, k) * y[k];
      y[i] = s / l(i, i);
    }
    for (int i = 0; i < n; ++i) c(i, col) = y[i];
  }
  for (int row = 0; row < n; ++row) {
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
      double s = c(row, i);
      for (int k = 0; k < i; ++k) s -= l(i, k) * y[k];
      y[i] = s / l(i, i);
    }
    for (int i = 0; i < n; ++i) c(row, i) = y[i];
  }
  // Symmetrize away the round-off skew.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (c(i, j) + c(j, i));
      c(i, j) = v;
      c(j, i) = v;
    }

  const auto eig = linalg::jacobi_eigen(c);

  PencilRoots res;
  res.roots = eig.values;
  res.gaps.resize(std::max(0, n - 1));
  for (int i = 0; i + 1 < n; ++i) res.gaps[i] = res.roots[i + 1] - res.roots[i];

  double radius = 0.0;
  for (double r : res.roots) radius = std::max(radius, std::abs(r));
  res.gap_tolerance = std::max(1e-8, 1e-6 * radius);
  res.simple.resize(n, true);
  for (int i = 0; i < n; ++i) {
    if (i > 0 && res.gaps[i - 1] <= res.gap_tolerance) res.simple[i] = false;
    if (i + 1 < n && res.gaps[i] <= res.gap_tolerance) res.simple[i] = false;
  }

  // Generalized eigenvectors w = L^-T y.
  res.vectors = Matrix(n, n);
  for (int col = 0; col < n; ++col) {
    std::vector<double> w(n);
    for (int i = n - 1; i >= 0; --i) {
      double s = eig.vectors(i, col);
      for (int k = i + 1; k < n; ++k) s -= l(k, i) * w[k];
      w[i] = s / l(i, i);
    }
    for (int i = 0; i < n; ++i) res.vectors(i, col) = w[i];
  }
  return res;
}

}  // namespace eigperturb::pencil
