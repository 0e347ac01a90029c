#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "evarfluid/error.hpp"
#include "evarfluid/io.hpp"
#include "evarfluid/kernels.hpp"
#include "evarfluid/operators.hpp"
#include "evarfluid/parallel.hpp"

using namespace evf;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double max_diff(const ScalarField& a, const ScalarField& b) { return (a - b).max_abs(); }
double max_diff(const VectorField& a, const VectorField& b) { return (a - b).max_abs(); }

}  // namespace

TEST_CASE("grid layout and validation") {
  const Grid g = Grid::make(8, 6, 4, 2.0, 3.0, 1.0);
  CHECK(g.size() == 192);
  CHECK(g.index(1, 2, 3) == (1 * 6 + 2) * 4 + 3);
  const auto ijk = g.unflatten(g.index(5, 4, 2));
  CHECK(ijk == std::array<std::size_t, 3>{5, 4, 2});
  CHECK(g.coord(g.index(1, 2, 0))[1] == doctest::Approx(1.0));
  CHECK(g.cell_volume() == doctest::Approx(0.25 * 0.5 * 0.25));
  CHECK_THROWS_AS(Grid::make(3, 8, 1, 1, 1), Error);
  CHECK_THROWS_AS(Grid::make(8, 8, 1, -1, 1), Error);
  CHECK_THROWS_AS(ScalarField(g) + ScalarField(Grid::make(8, 8, 1, 1, 1)), Error);
}

TEST_CASE("derivatives of closed-form fields") {
  const double L = 2.0;
  const Grid g = Grid::make(32, 32, 1, L, L);
  const double k = kTwoPi / L;
  for (Backend b : {Backend::spectral, Backend::fd4}) {
    const Operators ops(g, b);
    const auto c = ScalarField(g, 3.5);
    CHECK(ops.grad(c).max_abs() < 1e-12);

    const auto f = sample(g, [&](const Vec3& x) { return std::sin(k * x[0]); });
    const auto fx = sample(g, [&](const Vec3& x) { return k * std::cos(k * x[0]); });
    const double tol = b == Backend::spectral ? 1e-12 : 2e-4;
    CHECK(max_diff(ops.grad(f).component(0), fx) <= tol);
    CHECK(ops.grad(f).component(1).max_abs() <= 1e-12);

    const auto u = sample(g, [&](const Vec3& x) { return Vec3{std::sin(k * x[1]), 0, 0}; });
    CHECK(ops.div(u).max_abs() < 1e-12);
    const TensorField gu = ops.grad_tensor(u);
    const auto expect = sample(g, [&](const Vec3& x) { return k * std::cos(k * x[1]); });
    for (std::size_t e = 0; e < 9; ++e) {
      ScalarField comp(g);
      comp.data = gu.m[e];
      if (e == 1)
        CHECK(max_diff(comp, expect) <= tol);
      else
        CHECK(comp.max_abs() <= 1e-12);
    }
  }
  CHECK(to_string(backend_from_string("fd4")) == "fd4");
  CHECK_THROWS_AS(backend_from_string("chebyshev"), Error);
}

TEST_CASE("fd4 converges at fourth order") {
  double prev = 0.0;
  for (std::size_t n : {16, 32, 64}) {
    const Grid g = Grid::make(n, n, 1, 1.0, 1.0);
    const Operators ops(g, Backend::fd4);
    const auto f =
        sample(g, [](const Vec3& x) { return std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]); });
    const auto lap = sample(g, [](const Vec3& x) {
      return -2 * kTwoPi * kTwoPi * std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
    });
    const double err = max_diff(ops.laplacian(f), lap);
    if (prev > 0.0) CHECK(std::log2(prev / err) == doctest::Approx(4.0).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("integration on the grid") {
  const double L = 3.0;
  const Grid g = Grid::make(16, 16, 1, L, L);
  CHECK(integrate(ScalarField(g, 1.0)) == doctest::Approx(L * L));
  const double k = kTwoPi / L;
  CHECK(std::fabs(integrate(sample(g, [&](const Vec3& x) { return std::sin(k * x[0]); }))) < 1e-14);
  const auto s2 = sample(g, [&](const Vec3& x) { return std::pow(std::sin(k * x[0]), 2); });
  CHECK(std::fabs(integrate(s2) - L * L / 2) < 1e-13);
}

TEST_CASE("operator identities on band-limited fields") {
  for (const Grid& g : {Grid::make(32, 32, 1, 1.0, 2.0), Grid::make(12, 12, 8, 1.0, 1.0, 1.0)}) {
    for (Backend b : {Backend::spectral, Backend::fd4}) {
      const Operators ops(g, b);
      const auto f = random_band_limited(g, 11);
      const auto u = random_band_limited_vector(g, 12, 1.0, false);
      const auto phi = random_band_limited_vector(g, 13, 1.0, false);
      // discrete divergence theorem
      CHECK(std::fabs(integrate(ops.div(u))) < 1e-12);
      // integration by parts, vector and tensor
      const double lhs = inner(ops.div(u), f);
      const double rhs = -inner(u, ops.grad(f));
      CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::max(1.0, std::fabs(lhs)));
      const TensorField m = ops.grad_tensor(u);
      const double tl = inner(ops.div_tensor(m), phi);
      const double tr = -inner(m, ops.grad_tensor(phi));
      CHECK(std::fabs(tl - tr) <= 1e-12 * std::max(1.0, std::fabs(tl)));
      if (b == Backend::spectral) {
        CHECK(max_diff(ops.div(ops.grad(f)), ops.laplacian(f)) <= 1e-10 * ops.laplacian(f).max_abs());
      }
    }
  }
}

TEST_CASE("Helmholtz split") {
  const double L = 1.0, k = kTwoPi / L;
  const Grid g = Grid::make(32, 32, 1, L, L);
  const Operators ops(g);

  const auto pot = sample(g, [&](const Vec3& x) { return std::sin(k * x[0]); });
  const auto pure = ops.grad(pot);
  const auto s1 = ops.helmholtz_split(pure);
  CHECK(s1.solenoidal.max_abs() < 1e-12);
  CHECK(max_diff(s1.potential, pot) < 1e-12);

  const auto shear = sample(g, [&](const Vec3& x) { return Vec3{std::cos(k * x[1]), 0, 0}; });
  CHECK(max_diff(ops.helmholtz_split(shear).solenoidal, shear) < 1e-12);

  const auto phi = sample(g, [&](const Vec3& x) { return std::sin(k * x[0]) * std::sin(k * x[1]); });
  const auto mixed = shear + ops.grad(phi);
  const auto s3 = ops.helmholtz_split(mixed);
  CHECK(max_diff(s3.solenoidal, shear) < 1e-12);
  CHECK(max_diff(s3.gradient_part, ops.grad(phi)) < 1e-12);
  CHECK(max_diff(s3.potential, phi) < 1e-12);

  const auto u = random_band_limited_vector(g, 99);
  const auto s = ops.helmholtz_split(u);
  CHECK(ops.div(s.solenoidal).max_abs() < 1e-12);
  CHECK(std::fabs(inner(s.solenoidal, s.gradient_part)) <= 1e-12 * inner(u, u));
  CHECK(std::fabs(mean(s.potential)) < 1e-14);
  const auto twice = ops.helmholtz_split(s.solenoidal);
  CHECK(max_diff(twice.solenoidal, s.solenoidal) < 1e-13);
  CHECK(twice.gradient_part.max_abs() < 1e-13);

  const auto lap = ops.laplacian(phi);
  CHECK(max_diff(ops.inverse_laplacian(lap), phi) < 1e-12);
}

TEST_CASE("band-limited generator") {
  const Grid g = Grid::make(24, 24, 1, 1, 1);
  const auto a = random_band_limited(g, 5);
  const auto b = random_band_limited(g, 5);
  CHECK(a.data == b.data);
  CHECK(a.max_abs() == doctest::Approx(1.0));
  CHECK(std::fabs(mean(a)) < 1e-14);
  std::vector<std::complex<double>> s;
  const Operators ops(g);
  const auto& t = ops.transform();
  t.forward(a.data, s);
  for (std::size_t c = 0; c < s.size(); ++c) {
    const auto idx = t.unflatten(c);
    if (t.mode_index(0)[idx[0]] > 8 || t.mode_index(1)[idx[1]] > 8) CHECK(std::abs(s[c]) < 1e-12);
  }
  CHECK(random_band_limited_vector(g, 1).component(2).max_abs() == 0.0);
}

TEST_CASE("parallel kernels match the serial reference bit for bit") {
  const Grid g = Grid::make(32, 32, 1, 1, 1);
  const Operators ops(g);
  const auto v = random_band_limited_vector(g, 7, 2.0);
  const auto sigma = random_band_limited(g, 8);
  const TensorField gv = ops.grad_tensor(v);
  ConstitutiveSet cs{ConstitutiveFunction::power_law(1.0, 1.5), ConstitutiveFunction::newtonian(0.3),
                     ConstitutiveFunction::power_law(0.5, 0.8), ConstitutiveFunction::newtonian(1),
                     ConstitutiveFunction::power_law(1, 2)};
  const int saved = par::max_threads();
  for (int threads : {1, 2, 4}) {
    par::set_max_threads(threads);
    const auto s = kernels::stress_field(gv, sigma, cs);
    const auto r = reference::stress_field(gv, sigma, cs);
    for (std::size_t e = 0; e < 9; ++e) CHECK(s.m[e] == r.m[e]);
    CHECK(kernels::dissipation_field(gv, cs).data == reference::dissipation_field(gv, cs).data);
    const auto fl = kernels::flux_field(v, cs.e5);
    const auto fr = reference::flux_field(v, cs.e5);
    for (std::size_t a = 0; a < 3; ++a) CHECK(fl.c[a] == fr.c[a]);
    CHECK(kernels::viscous_energy_field(gv, cs).data == reference::viscous_energy_field(gv, cs).data);
    CHECK(integrate(kernels::dissipation_field(gv, cs)) ==
          integrate(reference::dissipation_field(gv, cs)));
  }
  par::set_max_threads(saved);
}

TEST_CASE("snapshot round trip") {
  const Grid g = Grid::make(6, 8, 1, 1.5, 2.5);
  const auto f = random_band_limited(g, 3);
  const auto dir = std::filesystem::temp_directory_path() / "evarfluid_snapshot_test";
  io::write_snapshot(dir / "rho_000001", "rho", f, 0.125);
  const auto s = io::read_snapshot(dir / "rho_000001");
  CHECK(s.field_name == "rho");
  CHECK(s.time == 0.125);
  CHECK(s.field.grid == g);
  CHECK(s.field.data == f.data);
  CHECK(std::filesystem::file_size(dir / "rho_000001.bin") == 8 * g.size());
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  std::filesystem::remove_all(dir);
}
