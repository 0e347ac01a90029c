#include "evarfluid/operators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "evarfluid/error.hpp"
#include "evarfluid/parallel.hpp"

namespace evf {

using cplx = std::complex<double>;

Backend backend_from_string(const std::string& name) {
  if (name == "spectral") return Backend::spectral;
  if (name == "fd4") return Backend::fd4;
  throw Error(errc::invalid_argument, "unknown backend '" + name + "' (spectral | fd4)");
}

std::string to_string(Backend b) { return b == Backend::spectral ? "spectral" : "fd4"; }

Operators::Operators(const Grid& g, Backend backend)
    : grid_(g), backend_(backend), fft_(std::make_shared<const SpectralTransform>(g)) {}

namespace {

// Fourth-order centered difference along one axis with periodic wrap.
void fd4_derivative(const Grid& g, const std::vector<double>& f, std::size_t axis,
                    std::vector<double>& out) {
  out.assign(g.size(), 0.0);
  if (!g.active(axis)) return;
  const auto n = static_cast<std::int64_t>(g.dims[axis]);
  const double inv = 1.0 / (12.0 * g.spacing(axis));
  par::for_each(g.size(), [&](std::size_t p) {
    auto ijk = g.unflatten(p);
    const auto at = [&](std::int64_t off) {
      auto q = ijk;
      q[axis] = static_cast<std::size_t>(((static_cast<std::int64_t>(ijk[axis]) + off) % n + n) % n);
      return f[g.index(q[0], q[1], q[2])];
    };
    out[p] = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) * inv;
  });
}

void fd4_second(const Grid& g, const std::vector<double>& f, std::size_t axis,
                std::vector<double>& out) {
  const auto n = static_cast<std::int64_t>(g.dims[axis]);
  const double h = g.spacing(axis);
  const double inv = 1.0 / (12.0 * h * h);
  par::for_each(g.size(), [&](std::size_t p) {
    auto ijk = g.unflatten(p);
    const auto at = [&](std::int64_t off) {
      auto q = ijk;
      q[axis] = static_cast<std::size_t>(((static_cast<std::int64_t>(ijk[axis]) + off) % n + n) % n);
      return f[g.index(q[0], q[1], q[2])];
    };
    out[p] += (-at(2) + 16.0 * at(1) - 30.0 * f[p] + 16.0 * at(-1) - at(-2)) * inv;
  });
}

// Multiplies a half-complex spectrum by i k_axis.
void apply_derivative(const SpectralTransform& t, std::vector<cplx>& s, std::size_t axis) {
  const auto& k = t.derivative_wavenumbers(axis);
  par::for_each(s.size(), [&](std::size_t c) {
    s[c] *= cplx(0.0, k[t.unflatten(c)[axis]]);
  });
}

}  // namespace

ScalarField Operators::derivative(const ScalarField& f, std::size_t axis) const {
  require_same_grid(grid_, f.grid);
  ScalarField out(grid_);
  if (!grid_.active(axis)) return out;
  if (backend_ == Backend::fd4) {
    fd4_derivative(grid_, f.data, axis, out.data);
    return out;
  }
  std::vector<cplx> s;
  fft_->forward(f.data, s);
  apply_derivative(*fft_, s, axis);
  fft_->inverse(s, out.data);
  return out;
}

VectorField Operators::grad(const ScalarField& f) const {
  require_same_grid(grid_, f.grid);
  VectorField out(grid_);
  if (backend_ == Backend::fd4) {
    for (std::size_t a = 0; a < 3; ++a) fd4_derivative(grid_, f.data, a, out.c[a]);
    return out;
  }
  std::vector<cplx> s, d;
  fft_->forward(f.data, s);
  for (std::size_t a = 0; a < 3; ++a) {
    if (!grid_.active(a)) continue;
    d = s;
    apply_derivative(*fft_, d, a);
    fft_->inverse(d, out.c[a]);
  }
  return out;
}

ScalarField Operators::div(const VectorField& u) const {
  require_same_grid(grid_, u.grid);
  ScalarField out(grid_);
  if (backend_ == Backend::fd4) {
    std::vector<double> d;
    for (std::size_t a = 0; a < 3; ++a) {
      if (!grid_.active(a)) continue;
      fd4_derivative(grid_, u.c[a], a, d);
      for (std::size_t i = 0; i < d.size(); ++i) out.data[i] += d[i];
    }
    return out;
  }
  std::vector<cplx> acc(fft_->complex_size(), cplx(0.0, 0.0)), s;
  for (std::size_t a = 0; a < 3; ++a) {
    if (!grid_.active(a)) continue;
    fft_->forward(u.c[a], s);
    apply_derivative(*fft_, s, a);
    for (std::size_t c = 0; c < s.size(); ++c) acc[c] += s[c];
  }
  fft_->inverse(acc, out.data);
  return out;
}

TensorField Operators::grad_tensor(const VectorField& u) const {
  require_same_grid(grid_, u.grid);
  TensorField out(grid_);
  for (std::size_t i = 0; i < 3; ++i) {
    const VectorField gi = grad(u.component(i));
    for (std::size_t j = 0; j < 3; ++j) out.m[3 * i + j] = gi.c[j];
  }
  return out;
}

VectorField Operators::div_tensor(const TensorField& m) const {
  require_same_grid(grid_, m.grid);
  VectorField out(grid_);
  for (std::size_t i = 0; i < 3; ++i) {
    VectorField row(grid_);
    for (std::size_t j = 0; j < 3; ++j) row.c[j] = m.m[3 * i + j];
    out.c[i] = div(row).data;
  }
  return out;
}

ScalarField Operators::laplacian(const ScalarField& f) const {
  require_same_grid(grid_, f.grid);
  ScalarField out(grid_);
  if (backend_ == Backend::fd4) {
    for (std::size_t a = 0; a < 3; ++a)
      if (grid_.active(a)) fd4_second(grid_, f.data, a, out.data);
    return out;
  }
  std::vector<cplx> s;
  fft_->forward(f.data, s);
  const auto& t = *fft_;
  par::for_each(s.size(), [&](std::size_t c) {
    const auto idx = t.unflatten(c);
    double k2 = 0.0;
    for (std::size_t a = 0; a < 3; ++a) k2 += t.wavenumbers(a)[idx[a]] * t.wavenumbers(a)[idx[a]];
    s[c] *= -k2;
  });
  fft_->inverse(s, out.data);
  return out;
}

VectorField Operators::laplacian(const VectorField& u) const {
  VectorField out(grid_);
  for (std::size_t a = 0; a < 3; ++a) out.c[a] = laplacian(u.component(a)).data;
  return out;
}

HelmholtzSplit Operators::helmholtz_split(const VectorField& u) const {
  require_same_grid(grid_, u.grid);
  const auto& t = *fft_;
  std::array<std::vector<cplx>, 3> uh;
  for (std::size_t a = 0; a < 3; ++a) t.forward(u.c[a], uh[a]);

  // phi_hat = (i k . u_hat) / (-|k|^2) with the first-derivative wavenumbers,
  // so that div(u - grad phi) vanishes mode by mode.
  std::vector<cplx> phi(t.complex_size());
  par::for_each(phi.size(), [&](std::size_t c) {
    const auto idx = t.unflatten(c);
    cplx divh(0.0, 0.0);
    double k2 = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      const double k = t.derivative_wavenumbers(a)[idx[a]];
      divh += cplx(0.0, k) * uh[a][c];
      k2 += k * k;
    }
    phi[c] = k2 > 0.0 ? divh / -k2 : cplx(0.0, 0.0);
  });

  HelmholtzSplit out;
  out.potential = ScalarField(grid_);
  out.gradient_part = VectorField(grid_);
  out.solenoidal = VectorField(grid_);
  t.inverse(phi, out.potential.data);
  std::vector<cplx> d;
  for (std::size_t a = 0; a < 3; ++a) {
    if (!grid_.active(a)) continue;
    d = phi;
    apply_derivative(t, d, a);
    t.inverse(d, out.gradient_part.c[a]);
  }
  out.solenoidal = u - out.gradient_part;
  return out;
}

VectorField Operators::project(const VectorField& u) const {
  return helmholtz_split(u).solenoidal;
}

ScalarField Operators::inverse_laplacian(const ScalarField& f) const {
  require_same_grid(grid_, f.grid);
  const auto& t = *fft_;
  std::vector<cplx> s;
  t.forward(f.data, s);
  par::for_each(s.size(), [&](std::size_t c) {
    const auto idx = t.unflatten(c);
    double k2 = 0.0;
    for (std::size_t a = 0; a < 3; ++a) k2 += t.wavenumbers(a)[idx[a]] * t.wavenumbers(a)[idx[a]];
    s[c] = k2 > 0.0 ? s[c] / -k2 : cplx(0.0, 0.0);
  });
  ScalarField out(grid_);
  t.inverse(s, out.data);
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature on the grid

double integrate(const ScalarField& f) {
  return f.grid.cell_volume() * par::ordered_sum(f.size(), [&](std::size_t i) { return f[i]; });
}

double mean(const ScalarField& f) { return integrate(f) / f.grid.volume(); }

double inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid);
  return a.grid.cell_volume() *
         par::ordered_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double inner(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid);
  return a.grid.cell_volume() * par::ordered_sum(a.size(), [&](std::size_t i) {
           return a.c[0][i] * b.c[0][i] + a.c[1][i] * b.c[1][i] + a.c[2][i] * b.c[2][i];
         });
}

double inner(const TensorField& a, const TensorField& b) {
  require_same_grid(a.grid, b.grid);
  return a.grid.cell_volume() * par::ordered_sum(a.size(), [&](std::size_t i) {
           double s = 0.0;
           for (std::size_t k = 0; k < 9; ++k) s += a.m[k][i] * b.m[k][i];
           return s;
         });
}

Vec3 integrate(const VectorField& u) {
  Vec3 r;
  for (std::size_t a = 0; a < 3; ++a) r[a] = integrate(u.component(a));
  return r;
}

ScalarField sample(const Grid& g, const std::function<double(const Vec3&)>& f) {
  ScalarField out(g);
  par::for_each(g.size(), [&](std::size_t i) { out[i] = f(g.coord(i)); });
  return out;
}

VectorField sample(const Grid& g, const std::function<Vec3(const Vec3&)>& f) {
  VectorField out(g);
  par::for_each(g.size(), [&](std::size_t i) { out.set(i, f(g.coord(i))); });
  return out;
}

// ---------------------------------------------------------------------------
// Band-limited random fields

ScalarField random_band_limited(const Grid& g, std::uint64_t seed, double amplitude) {
  const SpectralTransform t(g);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cplx> s(t.complex_size());
  for (std::size_t c = 0; c < s.size(); ++c) {
    const double re = normal(rng), im = normal(rng);
    const auto idx = t.unflatten(c);
    bool keep = true;
    bool is_mean = true;
    for (std::size_t a = 0; a < 3; ++a) {
      const std::size_t m = t.mode_index(a)[idx[a]];
      if (g.active(a) && m > g.dims[a] / 3) keep = false;
      if (m != 0) is_mean = false;
    }
    s[c] = keep && !is_mean ? cplx(re, im) : cplx(0.0, 0.0);
  }
  ScalarField out(g);
  t.inverse(s, out.data);
  const double m = out.max_abs();
  if (m > 0.0) out *= amplitude / m;
  return out;
}

VectorField random_band_limited_vector(const Grid& g, std::uint64_t seed, double amplitude,
                                       bool planar) {
  VectorField out(g);
  const std::size_t ncomp = (planar && g.is_2d()) ? 2 : 3;
  for (std::size_t a = 0; a < ncomp; ++a)
    out.c[a] = random_band_limited(g, seed * 3 + a + 1, amplitude).data;
  return out;
}

}  // namespace evf
