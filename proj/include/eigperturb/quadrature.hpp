// Quadrature on the boundary structures used by the assembly formulas:
// trapezoidal sums on [0, 2pi] (spectrally accurate for smooth periodic
// integrands), Fourier coefficients of sampled boundary speeds, composite
// 8-point Gauss-Legendre on finite intervals, and a Gauss x trapezoid
// product rule on the unit sphere.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "eigperturb/linalg.hpp"

namespace eigperturb::quadrature {

using linalg::Vec3;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Default resolutions; overridable through the scenario config.
struct Resolutions {
  int periodic_nodes = 1024;
  int interval_panels = 64;
  int sphere_polar = 64;
  int sphere_azimuth = 128;

  Resolutions halved() const {
    return {std::max(4, periodic_nodes / 2), std::max(1, interval_panels / 2),
            std::max(4, sphere_polar / 2), std::max(4, sphere_azimuth / 2)};
  }
};

/// Values of a 2pi-periodic function at theta_i = 2pi i / N.
struct PeriodicSamples {
  std::vector<double> values;

  explicit PeriodicSamples(std::vector<double> v) : values(std::move(v)) {
    const int n = static_cast<int>(values.size());
    if (n < 4 || n % 2 != 0)
      throw std::invalid_argument("PeriodicSamples: node count must be even and >= 4");
    for (double x : values)
      if (!std::isfinite(x)) throw std::invalid_argument("PeriodicSamples: non-finite value");
  }

  static PeriodicSamples sample(const std::function<double(double)>& f, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = f(kTwoPi * i / n);
    return PeriodicSamples(std::move(v));
  }

  int node_count() const { return static_cast<int>(values.size()); }
};

/// Trapezoidal rule (2pi/N) sum f(theta_i) over one period.
inline double integrate_periodic(const std::function<double(double)>& f, int n) {
  if (n < 4 || n % 2 != 0)
    throw std::invalid_argument("integrate_periodic: node count must be even and >= 4");
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f(kTwoPi * i / n);
  return s * (kTwoPi / n);
}

/// (integral of delta * cos(m theta), integral of delta * sin(m theta)).
/// |delta_hat(m)|^2 is the sum of the squares of the two parts.
inline std::pair<double, double> fourier_coeffs(const PeriodicSamples& samples, int m) {
  const int n = samples.node_count();
  if (m < 0) throw std::invalid_argument("fourier_coeffs: negative mode");
  if (m >= n / 2) throw std::invalid_argument("fourier_coeffs: mode aliases (m >= N/2)");
  double c = 0.0, s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double th = kTwoPi * i / n;
    c += samples.values[i] * std::cos(m * th);
    s += samples.values[i] * std::sin(m * th);
  }
  const double w = kTwoPi / n;
  return {c * w, s * w};
}

// 8-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 4> kGauss8Nodes = {
    0.1834346424956498049394761, 0.5255324099163289858177390,
    0.7966664774136267395915539, 0.9602898564975362316835609};
inline constexpr std::array<double, 4> kGauss8Weights = {
    0.3626837833783619829651504, 0.3137066458778872873379622,
    0.2223810344533744705443560, 0.1012285362903762591525314};

/// Composite 8-point Gauss-Legendre; exact for polynomials of degree <= 15
/// per panel.
inline double integrate_interval(const std::function<double(double)>& f, double a, double b,
                                 int n_panels) {
  if (!(a < b)) throw std::invalid_argument("integrate_interval: requires a < b");
  if (n_panels < 1) throw std::invalid_argument("integrate_interval: requires n_panels >= 1");
  const double h = (b - a) / n_panels;
  double total = 0.0;
  for (int p = 0; p < n_panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    const double half = 0.5 * h;
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
      s += kGauss8Weights[i] * (f(mid + half * kGauss8Nodes[i]) + f(mid - half * kGauss8Nodes[i]));
    }
    total += s * half;
  }
  return total;
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::vector<std::pair<double, double>> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
  std::vector<std::pair<double, double>> rule(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule[i] = {-x, w};
    rule[n - 1 - i] = {x, w};
  }
  return rule;
}

/// Surface integral over the unit sphere S^2: Gauss-Legendre in the polar
/// cosine times trapezoid in azimuth. Exact for spherical polynomials of
/// degree below min(2*n_polar, n_azimuth).
inline double integrate_sphere(const std::function<double(const Vec3&)>& f, int n_polar = 64,
                               int n_azimuth = 128) {
  if (n_polar < 2 || n_azimuth < 4)
    throw std::invalid_argument("integrate_sphere: resolution too small");
  const auto polar = gauss_legendre(n_polar);
  double total = 0.0;
  for (const auto& [z, wz] : polar) {
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double ring = 0.0;
    for (int j = 0; j < n_azimuth; ++j) {
      const double phi = kTwoPi * j / n_azimuth;
      ring += f({r * std::cos(phi), r * std::sin(phi), z});
    }
    total += wz * ring * (kTwoPi / n_azimuth);
  }
  return total;
}

}  // namespace eigperturb::quadrature
