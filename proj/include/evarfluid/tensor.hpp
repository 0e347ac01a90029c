#pragma once

// Pointwise 3-vector / 3x3-matrix algebra and kinematic decompositions of a
// velocity gradient.
//
// Gradient orientation used throughout the library:
//   [grad v]_{ij} = d v_i / d x_j   (row = component, column = direction)
// so that (div M)_i = d_j M_{ij} and curl v = (G32 - G23, G13 - G31, G21 - G12).

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>

namespace evf {

struct Vec3 {
  std::array<double, 3> c{0.0, 0.0, 0.0};

  constexpr Vec3() = default;
  constexpr Vec3(double x, double y, double z) : c{x, y, z} {}

  constexpr double& operator[](std::size_t i) { return c[i]; }
  constexpr double operator[](std::size_t i) const { return c[i]; }

  constexpr Vec3& operator+=(const Vec3& o) {
    for (std::size_t i = 0; i < 3; ++i) c[i] += o.c[i];
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    for (std::size_t i = 0; i < 3; ++i) c[i] -= o.c[i];
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    for (auto& x : c) x *= s;
    return *this;
  }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(Vec3 a) { return a *= -1.0; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }

constexpr double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
constexpr double norm_sq(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm_sq(a)); }
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a[0]) && std::isfinite(a[1]) && std::isfinite(a[2]);
}

/// Row-major 3x3 matrix; `m(i, j)` is row i, column j.
struct Mat3 {
  std::array<double, 9> a{};

  constexpr Mat3() = default;
  constexpr Mat3(double a00, double a01, double a02, double a10, double a11,
                 double a12, double a20, double a21, double a22)
      : a{a00, a01, a02, a10, a11, a12, a20, a21, a22} {}

  static constexpr Mat3 identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }
  static constexpr Mat3 diagonal(double d) { return {d, 0, 0, 0, d, 0, 0, 0, d}; }
  /// Matrix whose columns are the given vectors.
  static constexpr Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    return {c0[0], c1[0], c2[0], c0[1], c1[1], c2[1], c0[2], c1[2], c2[2]};
  }
  static constexpr Mat3 outer(const Vec3& u, const Vec3& w) {
    Mat3 m;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) m(i, j) = u[i] * w[j];
    return m;
  }

  constexpr double& operator()(std::size_t i, std::size_t j) { return a[3 * i + j]; }
  constexpr double operator()(std::size_t i, std::size_t j) const { return a[3 * i + j]; }

  constexpr Vec3 row(std::size_t i) const { return {a[3 * i], a[3 * i + 1], a[3 * i + 2]}; }
  constexpr Vec3 col(std::size_t j) const { return {a[j], a[3 + j], a[6 + j]}; }

  constexpr Mat3& operator+=(const Mat3& o) {
    for (std::size_t k = 0; k < 9; ++k) a[k] += o.a[k];
    return *this;
  }
  constexpr Mat3& operator-=(const Mat3& o) {
    for (std::size_t k = 0; k < 9; ++k) a[k] -= o.a[k];
    return *this;
  }
  constexpr Mat3& operator*=(double s) {
    for (auto& x : a) x *= s;
    return *this;
  }
  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Mat3 operator+(Mat3 a, const Mat3& b) { return a += b; }
constexpr Mat3 operator-(Mat3 a, const Mat3& b) { return a -= b; }
constexpr Mat3 operator-(Mat3 a) { return a *= -1.0; }
constexpr Mat3 operator*(double s, Mat3 a) { return a *= s; }
constexpr Mat3 operator*(Mat3 a, double s) { return a *= s; }

constexpr Mat3 operator*(const Mat3& x, const Mat3& y) {
  Mat3 r;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += x(i, k) * y(k, j);
      r(i, j) = s;
    }
  return r;
}

constexpr Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {m(0, 0) * v[0] + m(0, 1) * v[1] + m(0, 2) * v[2],
          m(1, 0) * v[0] + m(1, 1) * v[1] + m(1, 2) * v[2],
          m(2, 0) * v[0] + m(2, 1) * v[1] + m(2, 2) * v[2]};
}

constexpr Mat3 transpose(const Mat3& m) {
  return {m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1), m(0, 2), m(1, 2), m(2, 2)};
}
constexpr double trace(const Mat3& m) { return m(0, 0) + m(1, 1) + m(2, 2); }
constexpr double det(const Mat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}
/// Inverse by cofactors; caller guarantees det != 0.
constexpr Mat3 inverse(const Mat3& m) {
  const double d = det(m);
  Mat3 r{m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1), m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2),
         m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1), m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2),
         m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0), m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2),
         m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0), m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1),
         m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)};
  return (1.0 / d) * r;
}

/// M1 : M2 = sum_ij [M1]_ij [M2]_ij
constexpr double contract(const Mat3& x, const Mat3& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < 9; ++k) s += x.a[k] * y.a[k];
  return s;
}
constexpr double frobenius_sq(const Mat3& m) { return contract(m, m); }

inline double max_abs(const Mat3& m) {
  double r = 0.0;
  for (double x : m.a) r = std::fmax(r, std::fabs(x));
  return r;
}
inline bool is_finite(const Mat3& m) {
  for (double x : m.a)
    if (!std::isfinite(x)) return false;
  return true;
}

struct GradientDecomposition {
  Mat3 d_plus;   // symmetric part (strain rate)
  Mat3 d_minus;  // antisymmetric part (vorticity tensor)
  double divergence = 0.0;
};

constexpr GradientDecomposition decompose_gradient(const Mat3& g) {
  const Mat3 gt = transpose(g);
  return {0.5 * (g + gt), 0.5 * (g - gt), trace(g)};
}

constexpr Vec3 curl_from_gradient(const Mat3& g) {
  return {g(2, 1) - g(1, 2), g(0, 2) - g(2, 0), g(1, 0) - g(0, 1)};
}

}  // namespace evf
