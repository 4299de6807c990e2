// Named example problems for the degenerate-IFT solver. The matrix family
//   F(t, lambda, u) = (|u|^2/2 - 1/2, (A0 + t A1 + t^2 A2) u - lambda u)
// with a double eigenvalue lambda0 of A0 is expressed in chart coordinates
// y = (dlambda, radial, other-eigenvector components..., angle) so that the
// solution manifold of F(0,.) = 0 is exactly the angle axis. The chart base
// point is the pencil eigenvector of A1 restricted to the eigenspace, which
// is the branch the theorem continues.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigperturb/dift.hpp"
#include "eigperturb/linalg.hpp"

namespace eigperturb::dift::examples {

using linalg::Matrix;

struct MatrixFamilyExample {
  DiftProblem problem;
  Matrix a0, a1, a2;
  double lambda0 = 0.0;
  double slope = 0.0;  // expected lambda'(0) = selected eigenvalue of A1 on E
  int root_index = 0;
};

/// Chart problem for A(t) = A0 + t A1 + t^2 A2 at a double eigenvalue
/// lambda0 of A0; root_index selects which restricted-pencil eigenvector
/// the branch passes through.
inline MatrixFamilyExample matrix_family(std::string name, Matrix a0, Matrix a1, Matrix a2,
                                         double lambda0, int root_index) {
  const int n = a0.rows();
  const auto eig0 = linalg::jacobi_eigen(a0);

  std::vector<std::vector<double>> e_basis;
  std::vector<std::vector<double>> others;
  std::vector<double> other_values;
  for (int j = 0; j < n; ++j) {
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = eig0.vectors(i, j);
    if (std::abs(eig0.values[j] - lambda0) <= 1e-9) {
      e_basis.push_back(col);
    } else {
      others.push_back(col);
      other_values.push_back(eig0.values[j]);
    }
  }
  if (e_basis.size() != 2)
    throw std::invalid_argument("matrix_family: lambda0 must be a double eigenvalue");

  // Restricted pencil S = (e_i^T A1 e_j) and its selected eigenvector.
  Matrix s(2, 2);
  for (int i = 0; i < 2; ++i) {
    const auto a1e = a1.apply(e_basis[i]);
    for (int j = 0; j < 2; ++j) s(i, j) = linalg::dot(a1e, e_basis[j]);
  }
  const auto seig = linalg::jacobi_eigen(s);
  if (root_index < 0 || root_index > 1)
    throw std::invalid_argument("matrix_family: root_index out of range");
  const double nu = seig.values[root_index];

  std::vector<double> ustar(n, 0.0), uperp(n, 0.0);
  for (int i = 0; i < n; ++i) {
    ustar[i] = seig.vectors(0, root_index) * e_basis[0][i] +
               seig.vectors(1, root_index) * e_basis[1][i];
    uperp[i] = -seig.vectors(1, root_index) * e_basis[0][i] +
               seig.vectors(0, root_index) * e_basis[1][i];
  }

  const int n_others = static_cast<int>(others.size());
  const int n1 = 2 + n_others;  // (dlambda, radial, other components...)
  const int n2 = 1;             // angle

  MatrixFamilyExample ex;
  ex.a0 = a0;
  ex.a1 = a1;
  ex.a2 = a2;
  ex.lambda0 = lambda0;
  ex.slope = nu;
  ex.root_index = root_index;

  DiftProblem prob;
  prob.name = std::move(name);
  prob.n1 = n1;
  prob.n2 = n2;
  prob.p.assign(n1 + n2, 0.0);
  prob.q.assign(1 + n, 0.0);

  prob.F = [a0, a1, a2, lambda0, ustar, uperp, others, n, n_others](
               double t, const std::vector<double>& y) {
    const double dl = y[0], rad = y[1], ang = y[2 + n_others];
    std::vector<double> u(n, 0.0);
    const double cc = std::cos(ang), ss = std::sin(ang);
    for (int i = 0; i < n; ++i) u[i] = (1.0 + rad) * (cc * ustar[i] + ss * uperp[i]);
    for (int k = 0; k < n_others; ++k)
      for (int i = 0; i < n; ++i) u[i] += y[2 + k] * others[k][i];

    std::vector<double> out(1 + n, 0.0);
    out[0] = 0.5 * (linalg::dot(u, u) - 1.0);
    const double lambda = lambda0 + dl;
    for (int i = 0; i < n; ++i) {
      double row = -lambda * u[i];
      for (int j = 0; j < n; ++j)
        row += (a0(i, j) + t * a1(i, j) + t * t * a2(i, j)) * u[j];
      out[1 + i] = row;
    }
    return out;
  };

  // v solves L v = F_t(0, p) = (0, A1 u*): the eigenspace part of A1 u* is
  // nu u* (pencil eigenvector), the rest decomposes over the other
  // eigenvectors of A0.
  prob.v.assign(n1 + n2, 0.0);
  prob.v[0] = -nu;
  const auto a1u = a1.apply(ustar);
  for (int k = 0; k < n_others; ++k)
    prob.v[2 + k] = linalg::dot(a1u, others[k]) / (other_values[k] - lambda0);

  ex.problem = std::move(prob);
  return ex;
}

inline MatrixFamilyExample matrix_family_2x2(int root_index = 0) {
  Matrix a1(2, 2);
  a1(0, 0) = 1.0;
  a1(1, 1) = 2.0;
  return matrix_family("dift.matrix_family_2x2", Matrix::identity(2), a1, Matrix(2, 2), 1.0,
                       root_index);
}

inline MatrixFamilyExample matrix_family_2x2_offdiag(int root_index = 1) {
  Matrix a1(2, 2);
  a1(0, 1) = a1(1, 0) = 1.0;
  return matrix_family("dift.matrix_family_2x2_offdiag", Matrix::identity(2), a1, Matrix(2, 2),
                       1.0, root_index);
}

/// Equal slopes on the eigenspace: condition (d) degenerates, mirroring a
/// double pencil root.
inline MatrixFamilyExample matrix_family_2x2_equal() {
  return matrix_family("dift.matrix_family_2x2_equal", Matrix::identity(2), Matrix::identity(2),
                       Matrix(2, 2), 1.0, 0);
}

inline MatrixFamilyExample matrix_family_3x3(int root_index = 0) {
  Matrix a0(3, 3);
  a0(0, 0) = a0(1, 1) = 1.0;
  a0(2, 2) = 3.0;
  Matrix a1(3, 3);
  a1(0, 0) = 0.3;
  a1(0, 1) = a1(1, 0) = 0.2;
  a1(0, 2) = a1(2, 0) = -0.1;
  a1(1, 1) = -0.4;
  a1(1, 2) = a1(2, 1) = 0.5;
  a1(2, 2) = 0.2;
  Matrix a2(3, 3);
  a2(0, 0) = 0.1;
  a2(0, 2) = a2(2, 0) = 0.3;
  a2(1, 1) = -0.2;
  a2(1, 2) = a2(2, 1) = 0.1;
  a2(2, 2) = 0.4;
  return matrix_family("dift.matrix_family_3x3", a0, a1, a2, 1.0, root_index);
}

/// F(t, x) = x - t with the point manifold M = {0}: the branch is x(t) = t.
inline DiftProblem trivial_linear() {
  DiftProblem prob;
  prob.name = "dift.trivial_linear";
  prob.n1 = 1;
  prob.n2 = 0;
  prob.p = {0.0};
  prob.q = {0.0};
  prob.v = {-1.0};
  prob.F = [](double t, const std::vector<double>& x) {
    return std::vector<double>{x[0] - t};
  };
  return prob;
}

inline std::vector<std::string> catalog() {
  return {"dift.matrix_family_2x2", "dift.matrix_family_2x2_equal",
          "dift.matrix_family_2x2_offdiag", "dift.matrix_family_3x3", "dift.trivial_linear"};
}

}  // namespace eigperturb::dift::examples
