#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "eigperturb/pencil.hpp"
#include "oracles.hpp"

using namespace eigperturb;
using namespace eigperturb::pencil;
using linalg::Matrix;
using Catch::Approx;

namespace {
Matrix diag(std::initializer_list<double> d) {
  Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
  int i = 0;
  for (double v : d) m(i, i) = v, ++i;
  return m;
}

Matrix random_symmetric(oracles::Rng& rng, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m(i, j) = m(j, i) = rng.uniform(-1.0, 1.0);
  return m;
}

Matrix random_spd(oracles::Rng& rng, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  Matrix spd = m.transposed() * m;
  for (int i = 0; i < n; ++i) spd(i, i) += 0.75;
  return spd;
}
}  // namespace

TEST_CASE("generalized roots of diagonal pencils") {
  const auto r = generalized_roots(diag({1, 2, 3}), Matrix::identity(3));
  REQUIRE(r.roots.size() == 3);
  CHECK(r.roots[0] == Approx(1.0));
  CHECK(r.roots[1] == Approx(2.0));
  CHECK(r.roots[2] == Approx(3.0));
  CHECK(r.simple[0]);
  CHECK(r.simple[1]);
  CHECK(r.simple[2]);
}

TEST_CASE("generalized roots with a non-identity weight") {
  // det(I - sB) with B = diag(1,2): roots {1, 1/2}.
  const auto r = generalized_roots(Matrix::identity(2), diag({1, 2}));
  REQUIRE(r.roots.size() == 2);
  CHECK(r.roots[0] == Approx(0.5));
  CHECK(r.roots[1] == Approx(1.0));
}

TEST_CASE("char_poly_eval basics") {
  CHECK(char_poly_eval(diag({2}), Matrix::identity(1), 2.0) == Approx(0.0).margin(1e-15));
  const Matrix zero(3, 3);
  CHECK(char_poly_eval(zero, Matrix::identity(3), 2.0) == Approx(-8.0));
  CHECK(char_poly_eval(zero, Matrix::identity(3), -1.5) == Approx(1.5 * 1.5 * 1.5));

  // 2x2 symbolic cross-check: det(A - sI) = s^2 - (a+c)s + (ac - b^2).
  oracles::Rng rng(41);
  for (int i = 0; i < 20; ++i) {
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), c = rng.uniform(-2, 2);
    const double s = rng.uniform(-3, 3);
    Matrix m(2, 2);
    m(0, 0) = a;
    m(0, 1) = m(1, 0) = b;
    m(1, 1) = c;
    const double expected = s * s - (a + c) * s + (a * c - b * b);
    REQUIRE(char_poly_eval(m, Matrix::identity(2), s) == Approx(expected).margin(1e-12));
  }
}

TEST_CASE("oracle equivalence against determinant bisection") {
  oracles::Rng rng(42);
  for (int instance = 0; instance < 100; ++instance) {
    const int n = 2 + instance % 5;
    const Matrix a = random_symmetric(rng, n);
    const Matrix b = random_spd(rng, n);
    const auto roots = generalized_roots(a, b);

    double bound = 0.0;
    for (double r : roots.roots) bound = std::max(bound, std::abs(r));
    const auto oracle = oracles::pencil_roots_by_bisection(a, b, bound * 1.5 + 1.0);
    REQUIRE(oracle.size() == roots.roots.size());
    for (size_t i = 0; i < oracle.size(); ++i)
      REQUIRE(std::abs(oracle[i] - roots.roots[i]) <= 1e-9);
  }
}

TEST_CASE("residual contract for generalized eigenpairs") {
  oracles::Rng rng(43);
  for (int n : {2, 4, 6}) {
    const Matrix a = random_symmetric(rng, n);
    const Matrix b = random_spd(rng, n);
    const auto r = generalized_roots(a, b);
    const double na = a.frobenius_norm(), nb = b.frobenius_norm();
    for (int j = 0; j < n; ++j) {
      std::vector<double> w(n);
      for (int i = 0; i < n; ++i) w[i] = r.vectors(i, j);
      const auto aw = a.apply(w);
      const auto bw = b.apply(w);
      double res = 0.0;
      for (int i = 0; i < n; ++i) {
        const double v = aw[i] - r.roots[j] * bw[i];
        res += v * v;
      }
      REQUIRE(std::sqrt(res) <= 1e-10 * (na + std::abs(r.roots[j]) * nb));
    }
  }
}

TEST_CASE("congruence invariance") {
  oracles::Rng rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 4;
    const Matrix a = random_symmetric(rng, n);
    const Matrix b = random_spd(rng, n);
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(-1.0, 1.0) + (i == j ? 1.5 : 0.0);
    const Matrix at = m.transposed() * a * m;
    const Matrix bt = m.transposed() * b * m;
    const auto r1 = generalized_roots(a, b);
    const auto r2 = generalized_roots(at, bt);
    for (size_t i = 0; i < r1.roots.size(); ++i)
      REQUIRE(std::abs(r1.roots[i] - r2.roots[i]) <= 1e-9 * std::max(1.0, std::abs(r1.roots[i])));
  }
}

TEST_CASE("shift covariance") {
  oracles::Rng rng(45);
  const int n = 5;
  const Matrix a = random_symmetric(rng, n);
  const Matrix b = random_spd(rng, n);
  const double c = 0.773;
  const auto base = generalized_roots(a, b);
  const auto shifted = generalized_roots(a + b * c, b);
  for (int i = 0; i < n; ++i)
    REQUIRE(std::abs(shifted.roots[i] - (base.roots[i] + c)) <= 1e-12 * std::max(1.0, std::abs(base.roots[i]) + c));
}

TEST_CASE("simplicity classification uses the gap tolerance") {
  // Roots {1, 1 + 5e-9, 3}: the close pair is tagged multiple, 3 is simple.
  Matrix a = diag({1.0, 1.0 + 5e-9, 3.0});
  const auto r = generalized_roots(a, Matrix::identity(3));
  CHECK(!r.simple[0]);
  CHECK(!r.simple[1]);
  CHECK(r.simple[2]);
}

TEST_CASE("error paths") {
  Matrix indef = Matrix::identity(2);
  indef(1, 1) = -1.0;
  CHECK_THROWS_AS(generalized_roots(Matrix::identity(2), indef), NotPositiveDefinite);

  Matrix ill = diag({1.0, 1e-9});
  CHECK_THROWS_AS(generalized_roots(Matrix::identity(2), ill), IllConditionedWeight);

  Matrix big = Matrix::identity(17);
  CHECK_THROWS_AS(generalized_roots(big, big), std::invalid_argument);
}
