// Bessel functions of the first kind, their derivatives and zeros, plus the
// spherical Bessel j1 needed by the ball eigenspace. Evaluation combines the
// ascending power series (x <= 12) with Miller's backward recurrence beyond;
// no external special-function dependency. Documented range: 0 <= x <= 100,
// order <= 22 internally (zeros tabulated for k <= 20, m <= 20).
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace eigperturb::specfun {

inline constexpr double kMaxArgument = 100.0;
inline constexpr int kMaxOrder = 22;       // evaluation cap (recurrences need k+2)
inline constexpr int kMaxZeroOrder = 20;   // zero table range
inline constexpr int kMaxZeroIndex = 20;
inline constexpr double kSeriesCrossover = 12.0;

namespace detail {

// Ascending power series; accurate in absolute error for x <= 12 where the
// largest term stays within ~4 digits of the result.
inline double bessel_series(int k, double x) {
  double term = 1.0;
  const double half = 0.5 * x;
  for (int i = 1; i <= k; ++i) term *= half / i;
  double sum = term;
  const double q = 0.25 * x * x;
  for (int m = 1; m <= 80; ++m) {
    term *= -q / (static_cast<double>(m) * (m + k));
    sum += term;
    if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
  }
  return sum;
}

// Miller's backward recurrence normalized by J_0 + 2*sum J_{2m} = 1.
// Returns J_0..J_kmax at a single argument; valid for x > a few, where the
// downward growth stays far from overflow.
inline std::vector<double> bessel_miller(int kmax, double x) {
  const int start = std::max(kmax, static_cast<int>(x)) + 52;
  std::vector<double> f(start + 2, 0.0);
  f[start + 1] = 0.0;
  f[start] = 1e-30;
  double even_sum = 0.0;  // 2 * sum of f_{2m}, m >= 1
  for (int m = start; m >= 1; --m) {
    f[m - 1] = (2.0 * m / x) * f[m] - f[m + 1];
    if (((m - 1) & 1) == 0 && m - 1 > 0) even_sum += 2.0 * f[m - 1];
    if (std::abs(f[m - 1]) > 1e280) {
      for (int i = m - 1; i <= start + 1; ++i) f[i] *= 1e-280;
      even_sum *= 1e-280;
    }
  }
  const double scale = f[0] + even_sum;
  std::vector<double> out(kmax + 1);
  for (int k = 0; k <= kmax; ++k) out[k] = f[k] / scale;
  return out;
}

inline void check_range(int k, double x, const char* who) {
  if (k < 0 || k > kMaxOrder)
    throw std::domain_error(std::string(who) + ": order out of range [0, 22]");
  if (!(x >= 0.0) || x > kMaxArgument)
    throw std::domain_error(std::string(who) + ": argument out of range [0, 100]");
}

}  // namespace detail

/// J_k(x) on the documented range, absolute error below 1e-12.
inline double bessel_j(int k, double x) {
  detail::check_range(k, x, "bessel_j");
  if (x <= kSeriesCrossover) return detail::bessel_series(k, x);
  return detail::bessel_miller(k, x)[k];
}

/// J_k'(x) via J_0' = -J_1 and J_k' = (J_{k-1} - J_{k+1}) / 2.
inline double bessel_j_prime(int k, double x) {
  if (k < 0 || k > kMaxOrder - 1)
    throw std::domain_error("bessel_j_prime: order out of range [0, 21]");
  if (k == 0) return -bessel_j(1, x);
  return 0.5 * (bessel_j(k - 1, x) - bessel_j(k + 1, x));
}

struct BesselZero {
  int order = 0;   // k
  int index = 0;   // m (1-based)
  double value = 0.0;
};

/// m-th positive zero of J_k, bracketed by a pi/4 scan and bisected to 1e-13.
inline BesselZero bessel_zero(int k, int m) {
  if (k < 0 || k > kMaxZeroOrder) throw std::domain_error("bessel_zero: order out of range [0, 20]");
  if (m < 1 || m > kMaxZeroIndex) throw std::domain_error("bessel_zero: index out of range [1, 20]");

  const double step = 0.25 * M_PI;
  // J_k is positive on (0, j_{k,1}); start the scan just above the origin so
  // the k >= 1 root at x = 0 is not picked up.
  double a = (k == 0) ? 0.5 : std::max(1.0, static_cast<double>(k));
  double fa = bessel_j(k, a);
  int found = 0;
  for (;;) {
    const double b = a + step;
    if (b > kMaxArgument) throw std::domain_error("bessel_zero: zero beyond supported range");
    const double fb = bessel_j(k, b);
    if ((fa < 0.0) != (fb < 0.0) || fb == 0.0) {
      ++found;
      if (found == m) {
        double lo = a, hi = b, flo = fa;
        for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = bessel_j(k, mid);
          if ((flo < 0.0) != (fm < 0.0)) {
            hi = mid;
          } else {
            lo = mid;
            flo = fm;
          }
        }
        return {k, m, 0.5 * (lo + hi)};
      }
    }
    a = b;
    fa = fb;
  }
}

/// Spherical Bessel j1(x) = sin(x)/x^2 - cos(x)/x with the removable
/// singularity at the origin handled by its series.
inline double spherical_j1(double x) {
  if (!(x >= 0.0)) throw std::domain_error("spherical_j1: negative argument");
  if (x < 0.5) {
    // j1(x) = sum_m (-1)^m (2m+2)/(2m+3)! x^(2m+1)
    double term = x / 3.0;
    double sum = term;
    const double x2 = x * x;
    for (int m = 1; m <= 12; ++m) {
      term *= -x2 * (2.0 * m + 2.0) / ((2.0 * m) * (2.0 * m + 2.0) * (2.0 * m + 3.0));
      sum += term;
      if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
    }
    return sum;
  }
  return std::sin(x) / (x * x) - std::cos(x) / x;
}

/// First positive zero of j1, i.e. the root of tan(x) = x on (pi, 3pi/2).
inline double spherical_j1_first_zero() {
  // Bisect sin(x) - x cos(x), which changes sign exactly at the root and is
  // continuous across the bracket.
  double lo = 3.15, hi = 4.71;
  auto g = [](double x) { return std::sin(x) - x * std::cos(x); };
  double glo = g(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((glo < 0.0) != (gm < 0.0)) {
      hi = mid;
    } else {
      lo = mid;
      glo = gm;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace eigperturb::specfun
