#include <cmath>
#include <numbers>

#include "doctest.h"
#include "evarfluid/error.hpp"
#include "evarfluid/variational.hpp"

using namespace evf;

namespace {

constexpr double kPi = std::numbers::pi;
using CF = ConstitutiveFunction;

ConstitutiveSet e1_only(const CF& e1) {
  auto cs = ConstitutiveSet::inviscid();
  cs.e1 = e1;
  return cs;
}

}  // namespace

TEST_CASE("functional names") {
  for (auto k : {FunctionalKind::E_D1, FunctionalKind::E_D2, FunctionalKind::E_D3,
                 FunctionalKind::E_DW, FunctionalKind::E_TD, FunctionalKind::E_GD})
    CHECK(functional_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(functional_kind_from_string("E_X"), Error);
}

TEST_CASE("functional values on closed-form states") {
  const double L = 1.7;
  const Grid g = Grid::make(32, 32, 1, L, L);
  const Operators ops(g);
  const double k = 2 * kPi / L;

  auto s = VariationalState::rest(g);
  const auto newt = ConstitutiveSet::newtonian(1.0, 0.0, 0.0, 1.0, 1.0);
  CHECK(EnergyFunctional(FunctionalKind::E_DW, newt, ops).evaluate(s) == 0.0);

  s.v = sample(g, [&](const Vec3& x) { return Vec3{std::sin(k * x[1]), 0, 0}; });
  const double ed = EnergyFunctional(FunctionalKind::E_DW, newt, ops).evaluate(s);
  CHECK(ed == doctest::Approx(-kPi * kPi).epsilon(1e-12));
  CHECK(EnergyFunctional(FunctionalKind::E_D1, newt, ops).evaluate(s) ==
        doctest::Approx(-kPi * kPi).epsilon(1e-12));

  s.theta = sample(g, [&](const Vec3& x) { return std::sin(k * x[0]); });
  CHECK(EnergyFunctional(FunctionalKind::E_TD, newt, ops).evaluate(s) ==
        doctest::Approx(-2 * kPi * kPi).epsilon(1e-12));
}

TEST_CASE("Gateaux derivative basics") {
  const Grid g = Grid::make(16, 16, 1, 1, 1);
  const Operators ops(g);
  auto s = VariationalState::rest(g);
  s.v = random_band_limited_vector(g, 1);
  Direction zero;
  zero.vec = VectorField(g);
  const EnergyFunctional e(FunctionalKind::E_DW, ConstitutiveSet::newtonian(1, 1, 1), ops);
  CHECK(gateaux(e, s, zero, {1e-2, 1e-3}).value == 0.0);

  // quadratic: every epsilon gives the same derivative
  Direction d;
  d.vec = random_band_limited_vector(g, 2);
  const auto r = gateaux(e, s, d, {1e-1, 1e-2, 1e-3});
  CHECK(std::fabs(r.central[0] - r.central[2]) <= 1e-12 * std::fabs(r.central[0]));

  // f(e) = e^3 + 2e: central difference error is exactly e^2
  const auto cubic = gateaux([](double x) { return x * x * x + 2 * x; }, {0.1, 0.05, 0.025});
  CHECK(cubic.central[0] == doctest::Approx(2.01));
  CHECK(cubic.value == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(cubic.observed_order == doctest::Approx(2.0));
  CHECK(cubic.converged);
  CHECK_THROWS_AS(gateaux([](double x) { return x; }, {}), Error);
}

TEST_CASE("strong-form forces on closed-form states") {
  const double L = 1.0, k = 2 * kPi / L;
  const Grid g = Grid::make(32, 32, 1, L, L);
  const Operators ops(g);
  auto s = VariationalState::rest(g);
  s.force = sample(g, [](const Vec3& x) { return Vec3{std::cos(2 * kPi * x[0]), 1, 0}; });
  s.rho = sample(g, [](const Vec3& x) { return 2 + std::sin(2 * kPi * x[1]); });
  const auto cs = ConstitutiveSet::newtonian(0.7, 0.0, 0.0);
  CHECK((strong_force_momentum(s, cs, ops) - s.rho * s.force).max_abs() < 1e-13);

  s = VariationalState::rest(g);
  s.v = sample(g, [&](const Vec3& x) { return Vec3{std::sin(k * x[1]), 0, 0}; });
  CHECK((strong_force_momentum(s, cs, ops) - (-0.7 * k * k) * s.v).max_abs() < 1e-10);

  s = VariationalState::rest(g);
  s.sigma = sample(g, [&](const Vec3& x) { return std::sin(k * x[0]); });
  CHECK((strong_force_momentum(s, cs, ops) + ops.grad(s.sigma)).max_abs() < 1e-13);
}

TEST_CASE("Euler-Lagrange residuals: quadratic energies are exact") {
  const Grid g = Grid::make(64, 64, 1, 1, 1);
  const Operators ops(g);
  auto s = VariationalState::rest(g);
  s.v = random_band_limited_vector(g, 21);
  s.sigma = random_band_limited(g, 22);
  s.rho = ScalarField(g, 1.5);
  s.force = random_band_limited_vector(g, 23);
  const auto cs = ConstitutiveSet::newtonian(0.4, 0.3, 0.2, 0.5, 0.6);

  const auto probes = velocity_probes(ops, 10, 5, false);
  const auto rep = verify_euler_lagrange(EnergyFunctional(FunctionalKind::E_DW, cs, ops), s, probes);
  CHECK(rep.pass);
  CHECK(rep.max_relative_residual <= 1e-10);

  const auto sol = velocity_probes(ops, 10, 6, true);
  CHECK(ops.div(sol[3].vec).max_abs() < 1e-12);
  for (auto k : {FunctionalKind::E_D1, FunctionalKind::E_D2, FunctionalKind::E_D3}) {
    const auto r = verify_euler_lagrange(EnergyFunctional(k, cs, ops), s, sol);
    CHECK(r.pass);
    CHECK(r.max_relative_residual <= 1e-10);
  }

  s.theta = random_band_limited(g, 31);
  s.concentration = random_band_limited(g, 32);
  const auto sp = scalar_probes(g, 5, 7);
  CHECK(verify_euler_lagrange(EnergyFunctional(FunctionalKind::E_TD, cs, ops), s, sp).pass);
  CHECK(verify_euler_lagrange(EnergyFunctional(FunctionalKind::E_GD, cs, ops), s, sp).pass);
}

TEST_CASE("Euler-Lagrange residuals: power laws converge at second order in epsilon") {
  const Grid g = Grid::make(32, 32, 1, 1, 1);
  const Operators ops(g);
  auto s = VariationalState::rest(g);
  s.v = random_band_limited_vector(g, 41, 0.5);
  s.theta = random_band_limited(g, 42);
  const auto probes = velocity_probes(ops, 4, 9, false);
  for (double p : {1.5, 2.0}) {
    const auto rep =
        verify_euler_lagrange(EnergyFunctional(FunctionalKind::E_D1, e1_only(CF::power_law(1, p)), ops),
                              s, probes);
    CHECK(rep.order_checked);
    CHECK(rep.pass);
    CHECK(rep.min_order >= 1.9);
    CHECK(rep.max_order <= 2.1);
    for (const auto& pr : rep.probes) CHECK(pr.richardson_residual < pr.residuals.back());
  }
  ConstitutiveSet cs = ConstitutiveSet::inviscid();
  cs.e4 = CF::power_law(1.0, 1.5);
  const auto rep = verify_euler_lagrange(EnergyFunctional(FunctionalKind::E_TD, cs, ops), s,
                                         scalar_probes(g, 4, 3));
  CHECK(rep.pass);
  CHECK(rep.order_checked);
}

TEST_CASE("all-zero state gives zero residuals") {
  const Grid g = Grid::make(16, 16, 1, 1, 1);
  const Operators ops(g);
  const auto s = VariationalState::rest(g);
  ConstitutiveSet cs{CF::power_law(1, 1.5), CF::power_law(1, 2), CF::power_law(1, 1.5),
                     CF::power_law(1, 2), CF::power_law(1, 2)};
  const auto rep =
      verify_euler_lagrange(EnergyFunctional(FunctionalKind::E_DW, cs, ops), s, velocity_probes(ops, 3, 1, false));
  CHECK(rep.max_relative_residual < 1e-14);
  CHECK(rep.pass);
}

TEST_CASE("constrained momentum balance recovers a zero-mean pressure") {
  const Grid g = Grid::make(32, 32, 1, 1, 1);
  const Operators ops(g);
  const VectorField v = ops.project(random_band_limited_vector(g, 51));
  ScalarField rho = random_band_limited(g, 52, 0.3);
  for (double& x : rho.data) x += 1.0;
  const ScalarField q = random_band_limited(g, 53);
  const auto probes = velocity_probes(ops, 4, 54, true);

  const auto newt = verify_constrained(ConstitutiveSet::newtonian(0.5, 0.0, 0.3), ops, v, rho, q, probes);
  CHECK(newt.pass);
  CHECK(newt.solenoidal_residual <= 1e-10);
  CHECK(newt.sigma_error <= 1e-10);
  CHECK(newt.control_solenoidal > 1e-2);
  CHECK(newt.control_premise > 1e-4);

  ConstitutiveSet pl = ConstitutiveSet::inviscid();
  pl.e1 = CF::power_law(1.0, 1.5);
  pl.e3 = CF::power_law(0.5, 2.0);
  const auto rp = verify_constrained(pl, ops, v, rho, q, probes);
  CHECK(rp.pass);
  CHECK(rp.premise_max < 1e-6);
}

TEST_CASE("discrete integration by parts") {
  const Grid g = Grid::make(32, 32, 1, 1, 1);
  for (Backend b : {Backend::spectral, Backend::fd4}) {
    const Operators ops(g, b);
    const TensorField m = ops.grad_tensor(random_band_limited_vector(g, 61));
    CHECK(integration_by_parts_residual(ops, m, random_band_limited_vector(g, 62)) <= 1e-12);
  }
}

TEST_CASE("Newtonian reduction coefficients") {
  const double mu1 = 0.3, mu2 = 0.5, mu3 = 0.7;
  const auto cs = ConstitutiveSet::newtonian(mu1, mu2, mu3);
  const auto c = newtonian_reduction_oracle(cs);
  CHECK(c.laplacian == doctest::Approx(mu1 + mu3));
  CHECK(c.grad_div == doctest::Approx(mu1 + 2 * mu2 - mu3));

  const Grid g = Grid::make(32, 32, 1, 1, 1);
  const Operators ops(g);
  const auto rep = verify_newtonian_reduction(cs, ops, random_band_limited_vector(g, 71));
  CHECK(rep.max_error <= 1e-10);
  // the coefficient mu1 + mu2 - mu3 does not reproduce the assembled operator
  const VectorField v = random_band_limited_vector(g, 72);
  const VectorField alt = (mu1 + mu3) * ops.laplacian(v) + (mu1 + mu2 - mu3) * ops.grad(ops.div(v));
  const VectorField assembled = strong_force_momentum([&] {
    auto s = VariationalState::rest(g);
    s.v = v;
    return s;
  }(), cs, ops);
  CHECK((assembled - alt).max_abs() > 1e-3 * assembled.max_abs());
}

TEST_CASE("dissipation sign coherence") {
  const Grid g = Grid::make(32, 32, 1, 1, 1);
  const Operators ops(g);
  const VectorField v = random_band_limited_vector(g, 81);
  for (double p : {1.0, 1.5, 2.0}) {
    const auto r = dissipation_sign_check(e1_only(CF::power_law(1.0, p)), ops, v);
    CHECK(r.gateaux < 0.0);
    CHECK(r.gateaux == doctest::Approx(r.minus_dissipation).epsilon(1e-8));
    CHECK(r.homogeneous == doctest::Approx(r.minus_dissipation).epsilon(1e-12));
  }
}
