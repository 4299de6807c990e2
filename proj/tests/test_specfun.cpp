#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "eigperturb/specfun.hpp"
#include "oracles.hpp"

using namespace eigperturb;
using Catch::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

// Frozen oracle values. The zeros were recomputed with the series oracle +
// bisection below; the spherical zero comes from bisecting tan(x) - x.
constexpr double kJ01 = 2.404825557695773;   // first zero of J_0
constexpr double kJ11 = 3.831705970207512;   // first zero of J_1
constexpr double kJ02 = 5.520078110286311;   // second zero of J_0
constexpr double kSphJ1Zero = 4.493409457909064;
}  // namespace

TEST_CASE("bessel_j values at the origin") {
  CHECK(specfun::bessel_j(0, 0.0) == 1.0);
  CHECK(specfun::bessel_j(1, 0.0) == 0.0);
  CHECK(specfun::bessel_j(7, 0.0) == 0.0);
}

TEST_CASE("bessel_j matches the series oracle across the crossover") {
  // The library switches evaluation strategy at x = 12; the independent
  // series oracle stays accurate to ~1e-13 absolute up to x ~ 12, so compare
  // on both sides of the switch.
  for (int k : {0, 1, 2, 5, 11, 20}) {
    for (double x : {0.3, 1.7, 4.0, 9.5, 11.9, 12.1, 12.5}) {
      CAPTURE(k, x);
      CHECK(specfun::bessel_j(k, x) == Approx(oracles::bessel_series(k, x)).margin(5e-13));
    }
  }
}

TEST_CASE("bessel_j root of J_0 from the series oracle") {
  const double root = oracles::bisect([](double x) { return oracles::bessel_series(0, x); }, 2.0, 3.0);
  CHECK(root == Approx(kJ01).margin(1e-12));
  CHECK(specfun::bessel_j(0, kJ01) == Approx(0.0).margin(1e-10));
}

TEST_CASE("bessel_j domain errors") {
  CHECK_THROWS_AS(specfun::bessel_j(0, -0.5), std::domain_error);
  CHECK_THROWS_AS(specfun::bessel_j(0, 100.5), std::domain_error);
  CHECK_THROWS_AS(specfun::bessel_j(-1, 1.0), std::domain_error);
  CHECK_THROWS_AS(specfun::bessel_j(23, 1.0), std::domain_error);
}

TEST_CASE("bessel_j_prime at the origin") {
  CHECK(specfun::bessel_j_prime(0, 0.0) == 0.0);
  CHECK(specfun::bessel_j_prime(1, 0.0) == 0.5);
}

TEST_CASE("bessel_j_prime agrees with a finite difference of bessel_j") {
  // Frozen from the finite-difference oracle: J_1'(j_{1,1}) = J_0(j_{1,1}).
  CHECK(specfun::bessel_j_prime(1, kJ11) == Approx(-0.402759395702553).margin(1e-8));
  for (int k : {0, 1, 3, 8}) {
    for (double x : {0.7, 3.2, 15.0, 40.0}) {
      const double fd = oracles::fd_derivative(
          [k](double y) { return specfun::bessel_j(k, y); }, x, 1e-6);
      CAPTURE(k, x);
      CHECK(specfun::bessel_j_prime(k, x) == Approx(fd).margin(2e-9));
    }
  }
}

TEST_CASE("recurrence consistency on a grid") {
  // |J_k' - (J_{k-1} - J_{k+1})/2| on [0, 50]; the prime uses the recurrence
  // internally, so this pins the wiring (exact zero) rather than accuracy.
  for (int k : {1, 4, 20}) {
    for (int i = 0; i < 1000; ++i) {
      const double x = 50.0 * i / 999.0;
      const double lhs = specfun::bessel_j_prime(k, x);
      const double rhs = 0.5 * (specfun::bessel_j(k - 1, x) - specfun::bessel_j(k + 1, x));
      REQUIRE(std::abs(lhs - rhs) <= 1e-12);
    }
  }
}

TEST_CASE("three-term recurrence (Wronskian-type) check") {
  // J_{k+1}(x) = (2k/x) J_k(x) - J_{k-1}(x) on [0.5, 50].
  for (int k : {1, 2, 7, 19}) {
    for (int i = 0; i < 200; ++i) {
      const double x = 0.5 + (50.0 - 0.5) * i / 199.0;
      const double lhs = specfun::bessel_j(k + 1, x);
      const double rhs = (2.0 * k / x) * specfun::bessel_j(k, x) - specfun::bessel_j(k - 1, x);
      REQUIRE(std::abs(lhs - rhs) <= 1e-10);
    }
  }
}

TEST_CASE("bessel_zero frozen values and residuals") {
  CHECK(specfun::bessel_zero(0, 1).value == Approx(kJ01).margin(1e-10));
  CHECK(specfun::bessel_zero(1, 1).value == Approx(kJ11).margin(1e-10));
  CHECK(specfun::bessel_zero(0, 2).value == Approx(kJ02).margin(1e-10));
  for (int k : {0, 1, 5, 20}) {
    for (int m : {1, 2, 20}) {
      const auto z = specfun::bessel_zero(k, m);
      CAPTURE(k, m);
      CHECK(std::abs(specfun::bessel_j(k, z.value)) <= 1e-11);
    }
  }
}

TEST_CASE("bessel_zero ordering and interlacing") {
  for (int k : {0, 3, 19}) {
    double prev = 0.0;
    for (int m = 1; m <= 20; ++m) {
      const double j = specfun::bessel_zero(k, m).value;
      REQUIRE(j > prev);
      prev = j;
    }
  }
  // j_{k,m} < j_{k+1,m} < j_{k,m+1}
  for (int k : {0, 1, 10}) {
    for (int m : {1, 2, 5}) {
      const double a = specfun::bessel_zero(k, m).value;
      const double b = specfun::bessel_zero(k + 1, m).value;
      const double c = specfun::bessel_zero(k, m + 1).value;
      CAPTURE(k, m);
      CHECK(a < b);
      CHECK(b < c);
    }
  }
}

TEST_CASE("bessel_zero values are bracketed by sign changes") {
  for (int k : {0, 2, 12}) {
    for (int m : {1, 3, 10}) {
      const double j = specfun::bessel_zero(k, m).value;
      const double eps = 1e-6;
      const double left = specfun::bessel_j(k, j - eps);
      const double right = specfun::bessel_j(k, j + eps);
      CAPTURE(k, m);
      CHECK((left < 0.0) != (right < 0.0));
    }
  }
}

TEST_CASE("bessel_zero range errors") {
  CHECK_THROWS_AS(specfun::bessel_zero(21, 1), std::domain_error);
  CHECK_THROWS_AS(specfun::bessel_zero(0, 0), std::domain_error);
  CHECK_THROWS_AS(specfun::bessel_zero(0, 21), std::domain_error);
}

TEST_CASE("spherical_j1 values") {
  CHECK(specfun::spherical_j1(0.0) == 0.0);
  // sin(pi)/pi^2 - cos(pi)/pi = 1/pi.
  CHECK(specfun::spherical_j1(kPi) == Approx(1.0 / kPi).margin(1e-14));
  // Series/direct agreement around the internal switch at x = 0.5.
  for (double x : {0.1, 0.49, 0.51, 1.0}) {
    const double direct = std::sin(x) / (x * x) - std::cos(x) / x;
    CHECK(specfun::spherical_j1(x) == Approx(direct).margin(1e-15));
  }
}

TEST_CASE("spherical_j1 first zero solves tan(x) = x") {
  const double oracle = oracles::bisect([](double x) { return std::tan(x) - x; }, 3.15, 4.71);
  CHECK(oracle == Approx(kSphJ1Zero).margin(1e-12));
  const double z = specfun::spherical_j1_first_zero();
  CHECK(z == Approx(kSphJ1Zero).margin(1e-10));
  CHECK(std::abs(specfun::spherical_j1(z)) <= 1e-13);
}
