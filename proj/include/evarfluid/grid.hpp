#pragma once

// Periodic structured grids and the scalar/vector/tensor fields that live on
// them. A 2D grid is a 3D grid with dims[2] == 1 (z-derivatives vanish).
//
// Storage is row-major with z fastest: flat = (i * ny + j) * nz + k, and grid
// point (i, j, k) sits at (i hx, j hy, k hz).

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "evarfluid/tensor.hpp"

namespace evf {

struct Grid {
  std::array<std::size_t, 3> dims{64, 64, 1};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};

  /// Throws Error(invalid-grid) unless every active axis has >= 4 points and
  /// all lengths are positive. An axis with one point is inactive.
  static Grid make(std::size_t nx, std::size_t ny, std::size_t nz, double lx, double ly,
                   double lz = 1.0);
  void validate() const;

  std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
  bool is_2d() const { return dims[2] == 1; }
  bool active(std::size_t axis) const { return dims[axis] > 1; }
  double spacing(std::size_t axis) const { return lengths[axis] / static_cast<double>(dims[axis]); }
  double cell_volume() const { return spacing(0) * spacing(1) * spacing(2); }
  double volume() const { return lengths[0] * lengths[1] * lengths[2]; }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * dims[1] + j) * dims[2] + k;
  }
  std::array<std::size_t, 3> unflatten(std::size_t flat) const {
    return {flat / (dims[1] * dims[2]), (flat / dims[2]) % dims[1], flat % dims[2]};
  }
  Vec3 coord(std::size_t flat) const;
  std::string describe() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Throws Error(grid-mismatch) when the grids differ.
void require_same_grid(const Grid& a, const Grid& b);

struct ScalarField {
  Grid grid;
  std::vector<double> data;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double value = 0.0) : grid(g), data(g.size(), value) {}

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  std::size_t size() const { return data.size(); }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  bool all_finite() const;
  double min() const;
  double max() const;
  double max_abs() const;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);
/// Pointwise product.
ScalarField operator*(const ScalarField& a, const ScalarField& b);

/// Structure-of-arrays vector field: c[axis][flat].
struct VectorField {
  Grid grid;
  std::array<std::vector<double>, 3> c;

  VectorField() = default;
  explicit VectorField(const Grid& g, const Vec3& value = {});

  Vec3 at(std::size_t i) const { return {c[0][i], c[1][i], c[2][i]}; }
  void set(std::size_t i, const Vec3& v) {
    c[0][i] = v[0];
    c[1][i] = v[1];
    c[2][i] = v[2];
  }
  std::size_t size() const { return grid.size(); }
  ScalarField component(std::size_t axis) const;
  void set_component(std::size_t axis, const ScalarField& f);

  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(double s);
  bool all_finite() const;
  double max_abs() const;
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);
/// Scalar times vector, pointwise.
VectorField operator*(const ScalarField& s, const VectorField& v);

/// Per-point 3x3 matrices; m[3 * i + j][flat] is entry (i, j).
struct TensorField {
  Grid grid;
  std::array<std::vector<double>, 9> m;

  TensorField() = default;
  explicit TensorField(const Grid& g);

  Mat3 at(std::size_t p) const;
  void set(std::size_t p, const Mat3& v);
  std::size_t size() const { return grid.size(); }
};

}  // namespace evf
