#include <cmath>
#include <random>

#include "doctest.h"
#include "evarfluid/constitutive.hpp"
#include "evarfluid/error.hpp"

using namespace evf;

namespace {

using CF = ConstitutiveFunction;

Mat3 shear_gradient() {
  Mat3 g;
  g(0, 1) = 1.0;
  return g;
}

ConstitutiveSet only_e1(const CF& e1) {
  auto cs = ConstitutiveSet::inviscid();
  cs.e1 = e1;
  return cs;
}

}  // namespace

TEST_CASE("builtin families") {
  const CF n = CF::newtonian(1.0);
  CHECK(n.eval(3.0) == 6.0);
  CHECK(n.deriv(3.0) == 2.0);

  const CF p = CF::power_law(1.0, 2.0);
  CHECK(p.eval(0.5) == doctest::Approx(0.25));
  CHECK(p.deriv(0.5) == doctest::Approx(1.0));

  const CF z = CF::zero();
  CHECK(z.eval(7.0) == 0.0);
  CHECK(z.deriv(7.0) == 0.0);
  CHECK(z.is_zero());
  CHECK(p.param("p") == 2.0);
  CHECK(p.param("missing", -3.0) == -3.0);
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(CF::newtonian(-1.0), Error);
  CHECK_THROWS_AS(CF::power_law(-1.0, 2.0), Error);
  CHECK_THROWS_AS(CF::power_law(1.0, 0.0), Error);
  try {
    CF::newtonian(-1.0);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("invalid constitutive parameters") != std::string::npos);
  }
}

TEST_CASE("derivatives match centered differences on a log grid") {
  for (const CF& f : {CF::newtonian(0.7), CF::power_law(1.0, 1.5), CF::power_law(2.0, 2.0),
                      CF::power_law(0.5, 0.6)}) {
    for (double r = 1e-3; r < 1e3; r *= 3.7) {
      const double h = 1e-5 * r;
      const double fd = (f.eval(r + h) - f.eval(r - h)) / (2 * h);
      CHECK(std::fabs(fd - f.deriv(r)) <= 1e-6 * std::fabs(f.deriv(r)));
    }
  }
  CHECK(CF::newtonian(1.3).deriv(123.0) == 2.6);
}

TEST_CASE("shear-thinning derivative is clamped at the origin") {
  const CF f = CF::power_law(1.0, 0.5, 1e-12);
  CHECK(std::isfinite(f.deriv(0.0)));
  CHECK(f.deriv(0.0) == doctest::Approx(0.5 * std::pow(1e-12, -0.5)));
}

TEST_CASE("stress") {
  const auto cs = ConstitutiveSet::newtonian(0.3, 0.4, 0.5);
  const Mat3 rest = stress(decompose_gradient(Mat3{}), 2.0, cs);
  CHECK(rest == Mat3::diagonal(-2.0));

  const auto dec = decompose_gradient(shear_gradient());
  const Mat3 s = stress(dec, 0.0, ConstitutiveSet::newtonian(0.3, 0.0, 0.5));
  CHECK(max_abs(s - (0.6 * dec.d_plus + 1.0 * dec.d_minus)) < 1e-15);

  const Mat3 sp = stress(dec, 0.0, only_e1(CF::power_law(1.0, 2.0)));
  CHECK(max_abs(sp - dec.d_plus) < 1e-15);
}

TEST_CASE("dissipation density") {
  const auto cs = ConstitutiveSet::newtonian(1.0, 0.0, 1.0);
  CHECK(dissipation_density(decompose_gradient(Mat3{}), cs) == 0.0);
  CHECK(dissipation_density(decompose_gradient(shear_gradient()), cs) == doctest::Approx(2.0));

  const double a = 0.7, mu1 = 0.3, mu2 = 0.9;
  const auto dil = decompose_gradient(Mat3::diagonal(a));
  CHECK(dissipation_density(dil, ConstitutiveSet::newtonian(mu1, mu2, 0.0)) ==
        doctest::Approx(2 * mu1 * 3 * a * a + 2 * mu2 * 9 * a * a));
}

TEST_CASE("nonlinear flux") {
  CHECK(nonlinear_flux(Vec3{}, CF::newtonian(1.0)) == Vec3{});
  CHECK(nonlinear_flux(Vec3{1, 0, 0}, CF::newtonian(1.0)) == Vec3{2, 0, 0});
  const Vec3 q = nonlinear_flux(Vec3{3, 4, 0}, CF::power_law(1.0, 2.0));
  CHECK(q[0] == doctest::Approx(150.0));
  CHECK(q[1] == doctest::Approx(200.0));
}

TEST_CASE("energy densities") {
  const auto cs = ConstitutiveSet::newtonian(1.0, 0.0, 0.0);
  const auto zero = energy_densities(0.0, {}, decompose_gradient(Mat3{}), 0.0, {}, {}, {}, cs);
  CHECK(zero.kinetic == 0.0);
  CHECK(zero.viscous == 0.0);
  CHECK(zero.work == 0.0);

  const auto d = energy_densities(2.0, {1, 0, 0}, decompose_gradient(Mat3{}), 0.0, {0, 0, -1},
                                  {}, {}, cs);
  CHECK(d.kinetic == 1.0);
  CHECK(d.work == 0.0);

  const auto s =
      energy_densities(1.0, {}, decompose_gradient(shear_gradient()), 0.0, {}, {}, {}, cs);
  CHECK(s.viscous == doctest::Approx(0.5));

  CHECK_THROWS_AS(energy_densities(-1.0, {}, decompose_gradient(Mat3{}), 0, {}, {}, {}, cs),
                  Error);
}

TEST_CASE("dissipation sign and stress consistency on random gradients") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  ConstitutiveSet cs{CF::power_law(1.0, 1.5), CF::newtonian(0.2), CF::power_law(0.4, 0.7),
                     CF::zero(), CF::zero()};
  for (int n = 0; n < 200; ++n) {
    Mat3 g;
    for (auto& x : g.a) x = u(rng);
    const auto dec = decompose_gradient(g);
    const double ed = dissipation_density(dec, cs);
    CHECK(ed >= 0.0);
    const double sd = contract(stress(dec, 0.0, cs), dec.d_plus + dec.d_minus);
    CHECK(std::fabs(sd - ed) <= 1e-13 * std::max(1.0, std::fabs(ed)));
  }
}

TEST_CASE("stress from energy derivatives") {
  const Mat3 shear = shear_gradient();
  const auto lin = stress_from_energy_check(shear, ConstitutiveSet::newtonian(1.0, 0.0, 0.0), 1e-3);
  CHECK(max_abs(lin.analytic[0] + 2.0 * decompose_gradient(shear).d_plus) < 1e-15);
  CHECK(lin.discrepancy(0) < 1e-10);

  const auto at_rest = stress_from_energy_check(Mat3{}, ConstitutiveSet::newtonian(1, 1, 1, 1, 1), 1e-3);
  for (int k = 0; k < 5; ++k) CHECK(at_rest.discrepancy(k) < 1e-12);

  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const auto quartic = stress_from_energy_check(shear, only_e1(CF::power_law(1.0, 2.0)), h);
    CHECK(quartic.discrepancy(0) <= 10 * h * h);
  }

  CHECK_THROWS_AS(stress_from_energy_check(shear, ConstitutiveSet::inviscid(), 0.0), Error);
}

TEST_CASE("kink points are reported as not applicable") {
  const auto cs = only_e1(CF::power_law(1.0, 0.5));
  const auto chk = stress_from_energy_check(Mat3{}, cs, 1e-3);
  CHECK_FALSE(chk.applicable[0]);
  CHECK(chk.discrepancy(0) == 0.0);
}
