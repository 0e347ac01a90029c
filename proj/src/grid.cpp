#include "evarfluid/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evarfluid/error.hpp"
#include "evarfluid/parallel.hpp"

namespace evf {

Grid Grid::make(std::size_t nx, std::size_t ny, std::size_t nz, double lx, double ly, double lz) {
  Grid g;
  g.dims = {nx, ny, nz};
  g.lengths = {lx, ly, lz};
  g.validate();
  return g;
}

void Grid::validate() const {
  for (std::size_t a = 0; a < 3; ++a) {
    if (dims[a] == 0 || (dims[a] > 1 && dims[a] < 4)) {
      std::ostringstream os;
      os << "grid axis " << a << " has " << dims[a] << " points; need 1 (inactive) or >= 4";
      throw Error(errc::invalid_grid, os.str());
    }
    if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a]))
      throw Error(errc::invalid_grid, "grid lengths must be positive and finite");
  }
  if (dims[0] == 1 || dims[1] == 1)
    throw Error(errc::invalid_grid, "the x and y axes must be active");
}

Vec3 Grid::coord(std::size_t flat) const {
  const auto ijk = unflatten(flat);
  return {static_cast<double>(ijk[0]) * spacing(0), static_cast<double>(ijk[1]) * spacing(1),
          static_cast<double>(ijk[2]) * spacing(2)};
}

std::string Grid::describe() const {
  std::ostringstream os;
  os << dims[0] << "x" << dims[1];
  if (!is_2d()) os << "x" << dims[2];
  return os.str();
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b))
    throw Error(errc::grid_mismatch, "fields live on different grids (" + a.describe() + " vs " +
                                         b.describe() + ")");
}

namespace {

template <class F>
void each(std::size_t n, F&& f) {
  par::for_each(n, std::forward<F>(f));
}

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double max_abs_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// ScalarField

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(grid, o.grid);
  each(size(), [&](std::size_t i) { data[i] += o.data[i]; });
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(grid, o.grid);
  each(size(), [&](std::size_t i) { data[i] -= o.data[i]; });
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  each(size(), [&](std::size_t i) { data[i] *= s; });
  return *this;
}

bool ScalarField::all_finite() const { return finite_all(data); }
double ScalarField::min() const { return *std::min_element(data.begin(), data.end()); }
double ScalarField::max() const { return *std::max_element(data.begin(), data.end()); }
double ScalarField::max_abs() const { return max_abs_of(data); }

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid);
  ScalarField r(a.grid);
  each(a.size(), [&](std::size_t i) { r.data[i] = a.data[i] * b.data[i]; });
  return r;
}

// ---------------------------------------------------------------------------
// VectorField

VectorField::VectorField(const Grid& g, const Vec3& value) : grid(g) {
  for (std::size_t a = 0; a < 3; ++a) c[a].assign(g.size(), value[a]);
}

ScalarField VectorField::component(std::size_t axis) const {
  ScalarField f(grid);
  f.data = c[axis];
  return f;
}

void VectorField::set_component(std::size_t axis, const ScalarField& f) {
  require_same_grid(grid, f.grid);
  c[axis] = f.data;
}

VectorField& VectorField::operator+=(const VectorField& o) {
  require_same_grid(grid, o.grid);
  for (std::size_t a = 0; a < 3; ++a) each(size(), [&](std::size_t i) { c[a][i] += o.c[a][i]; });
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
  require_same_grid(grid, o.grid);
  for (std::size_t a = 0; a < 3; ++a) each(size(), [&](std::size_t i) { c[a][i] -= o.c[a][i]; });
  return *this;
}

VectorField& VectorField::operator*=(double s) {
  for (std::size_t a = 0; a < 3; ++a) each(size(), [&](std::size_t i) { c[a][i] *= s; });
  return *this;
}

bool VectorField::all_finite() const {
  return finite_all(c[0]) && finite_all(c[1]) && finite_all(c[2]);
}

double VectorField::max_abs() const {
  return std::max({max_abs_of(c[0]), max_abs_of(c[1]), max_abs_of(c[2])});
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }

VectorField operator*(const ScalarField& s, const VectorField& v) {
  require_same_grid(s.grid, v.grid);
  VectorField r(v.grid);
  for (std::size_t a = 0; a < 3; ++a)
    each(v.size(), [&](std::size_t i) { r.c[a][i] = s.data[i] * v.c[a][i]; });
  return r;
}

// ---------------------------------------------------------------------------
// TensorField

TensorField::TensorField(const Grid& g) : grid(g) {
  for (auto& comp : m) comp.assign(g.size(), 0.0);
}

Mat3 TensorField::at(std::size_t p) const {
  Mat3 r;
  for (std::size_t k = 0; k < 9; ++k) r.a[k] = m[k][p];
  return r;
}

void TensorField::set(std::size_t p, const Mat3& v) {
  for (std::size_t k = 0; k < 9; ++k) m[k][p] = v.a[k];
}

}  // namespace evf
