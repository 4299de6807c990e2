// Small dense linear algebra kernels shared across the library: vectors,
// a row-major matrix, LU with partial pivoting, dense Cholesky, a cyclic
// Jacobi symmetric eigensolver, one-sided Jacobi SVD and a QL solver for
// symmetric tridiagonal matrices. Everything here is sized for desk-scale
// problems (dimensions in the tens to low hundreds).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eigperturb::linalg {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_ = 0.0) : x(x_), y(y_), z(z_) {}
  explicit Vec3(const Vec2& v) : x(v.x), y(v.y), z(0.0) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vec2 xy() const { return {x, y}; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix operator*(const Matrix& o) const {
    if (cols_ != o.rows_) throw std::invalid_argument("Matrix multiply: shape mismatch");
    Matrix r(rows_, o.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        const double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (int j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
      }
    return r;
  }

  Matrix operator+(const Matrix& o) const {
    Matrix r = *this;
    for (size_t i = 0; i < data_.size(); ++i) r.data_[i] += o.data_[i];
    return r;
  }

  Matrix operator-(const Matrix& o) const {
    Matrix r = *this;
    for (size_t i = 0; i < data_.size(); ++i) r.data_[i] -= o.data_[i];
    return r;
  }

  Matrix operator*(double s) const {
    Matrix r = *this;
    for (double& v : r.data_) v *= s;
    return r;
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_square() const { return rows_ == cols_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// LU factorization with partial pivoting (in-place, row permutation).
struct LuFactors {
  Matrix lu;
  std::vector<int> perm;
  int sign = 1;
  bool singular = false;

  double det() const {
    if (singular) return 0.0;
    double d = sign;
    for (int i = 0; i < lu.rows(); ++i) d *= lu(i, i);
    return d;
  }

  std::vector<double> solve(std::span<const double> b) const {
    if (singular) throw SingularMatrixError("LU solve: singular matrix");
    const int n = lu.rows();
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = b[perm[i]];
    for (int i = 1; i < n; ++i) {
      double s = x[i];
      for (int j = 0; j < i; ++j) s -= lu(i, j) * x[j];
      x[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = x[i];
      for (int j = i + 1; j < n; ++j) s -= lu(i, j) * x[j];
      x[i] = s / lu(i, i);
    }
    return x;
  }
};

inline LuFactors lu_factor(Matrix a) {
  if (!a.is_square()) throw std::invalid_argument("lu_factor: matrix not square");
  const int n = a.rows();
  LuFactors f;
  f.perm.resize(n);
  for (int i = 0; i < n; ++i) f.perm[i] = i;

  std::vector<int> rows(n);
  for (int i = 0; i < n; ++i) rows[i] = i;

  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(a(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(a(i, k));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best == 0.0) {
      f.singular = true;
      f.lu = std::move(a);
      return f;
    }
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(rows[k], rows[piv]);
      f.sign = -f.sign;
    }
    for (int i = k + 1; i < n; ++i) {
      a(i, k) /= a(k, k);
      const double m = a(i, k);
      if (m == 0.0) continue;
      for (int j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
    }
  }
  for (int i = 0; i < n; ++i) f.perm[i] = rows[i];
  f.lu = std::move(a);
  return f;
}

inline double lu_det(const Matrix& a) { return lu_factor(a).det(); }

inline std::vector<double> lu_solve(const Matrix& a, std::span<const double> b) {
  return lu_factor(a).solve(b);
}

/// Lower-triangular Cholesky factor of a symmetric matrix, or nullopt when
/// the matrix is not positive definite.
inline std::optional<Matrix> cholesky(const Matrix& a) {
  if (!a.is_square()) throw std::invalid_argument("cholesky: matrix not square");
  const int n = a.rows();
  Matrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return std::nullopt;
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column i pairs with values[i]
};

/// Cyclic Jacobi rotations for a dense symmetric matrix. Tolerance is on the
/// off-diagonal Frobenius norm relative to the full norm.
inline SymmetricEigen jacobi_eigen(Matrix a, double tol = 1e-13, int max_sweeps = 50) {
  if (!a.is_square()) throw std::invalid_argument("jacobi_eigen: matrix not square");
  const int n = a.rows();
  Matrix v = Matrix::identity(n);
  const double scale = std::max(a.frobenius_norm(), 1e-300);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += 2.0 * a(p, q) * a(p, q);
    if (std::sqrt(off) <= tol * scale) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (int i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  SymmetricEigen res;
  res.values.resize(n);
  for (int i = 0; i < n; ++i) res.values[i] = a(i, i);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) { return res.values[i] < res.values[j]; });

  std::vector<double> sorted(n);
  Matrix vs(n, n);
  for (int j = 0; j < n; ++j) {
    sorted[j] = res.values[order[j]];
    for (int i = 0; i < n; ++i) vs(i, j) = v(i, order[j]);
  }
  res.values = std::move(sorted);
  res.vectors = std::move(vs);
  return res;
}

/// Singular values (descending) by one-sided Jacobi orthogonalization of the
/// columns. Accurate for small matrices; used for rank and kernel checks.
inline std::vector<double> singular_values(Matrix a) {
  const int m = a.rows(), n = a.cols();
  if (m < n) a = a.transposed();
  const int rows = a.rows(), cols = a.cols();

  for (int sweep = 0; sweep < 60; ++sweep) {
    double max_cos = 0.0;
    for (int p = 0; p < cols - 1; ++p) {
      for (int q = p + 1; q < cols; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < rows; ++i) {
          app += a(i, p) * a(i, p);
          aqq += a(i, q) * a(i, q);
          apq += a(i, p) * a(i, q);
        }
        if (app == 0.0 || aqq == 0.0) continue;
        const double cosine = std::abs(apq) / std::sqrt(app * aqq);
        max_cos = std::max(max_cos, cosine);
        if (cosine < 1e-15) continue;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < rows; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
      }
    }
    if (max_cos < 1e-15) break;
  }

  std::vector<double> sv(cols);
  for (int j = 0; j < cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) s += a(i, j) * a(i, j);
    sv[j] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<double>());
  return sv;
}

/// QL with implicit shifts for a symmetric tridiagonal matrix; diag has the
/// diagonal, off the subdiagonal (off.size() == diag.size() - 1). Returns
/// eigenvalues ascending with eigenvectors of the tridiagonal matrix.
inline SymmetricEigen tridiagonal_eigen(std::vector<double> diag, std::vector<double> off) {
  const int n = static_cast<int>(diag.size());
  if (static_cast<int>(off.size()) != std::max(0, n - 1))
    throw std::invalid_argument("tridiagonal_eigen: off-diagonal size mismatch");
  Matrix z = Matrix::identity(n);
  std::vector<double> e = std::move(off);
  e.resize(n, 0.0);

  auto pythag = [](double a, double b) { return std::hypot(a, b); };

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
        if (std::abs(e[m]) <= 1e-16 * dd) break;
      }
      if (m != l) {
        if (iter++ == 60) throw std::runtime_error("tridiagonal_eigen: too many iterations");
        double g = (diag[l + 1] - diag[l]) / (2.0 * e[l]);
        double r = pythag(g, 1.0);
        g = diag[m] - diag[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        for (int i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = pythag(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            diag[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = diag[i + 1] - p;
          r = (diag[i] - g) * s + 2.0 * c * b;
          p = s * r;
          diag[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * f;
            z(k, i) = c * z(k, i) - s * f;
          }
        }
        if (r == 0.0 && m - 1 >= l) continue;
        diag[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }

  SymmetricEigen res;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) { return diag[i] < diag[j]; });
  res.values.resize(n);
  res.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    res.values[j] = diag[order[j]];
    for (int i = 0; i < n; ++i) res.vectors(i, j) = z(i, order[j]);
  }
  return res;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace eigperturb::linalg
