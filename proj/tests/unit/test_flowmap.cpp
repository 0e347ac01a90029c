#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "evarfluid/error.hpp"
#include "evarfluid/flowmap.hpp"

using namespace evf;

namespace {

const std::array<MapKind, 4> kAllMaps{MapKind::identity, MapKind::shear, MapKind::rotation,
                                      MapKind::dilation};

ConstitutiveSet all_newtonian() { return ConstitutiveSet::newtonian(0.5, 0.5, 0.5, 0.5, 0.5); }

}  // namespace

TEST_CASE("catalog maps start at the identity and have consistent derivatives") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (MapKind kind : kAllMaps) {
    const FlowMap fm = builtin_map(kind, 0.8);
    CHECK(map_kind_from_string(to_string(kind)) == kind);
    for (int n = 0; n < 10; ++n) {
      const Vec3 xi{u(rng), u(rng), u(rng)};
      const double t = u(rng);
      CHECK(norm(fm.map(xi, 0.0) - xi) < 1e-15);
      const double h = 1e-5;
      for (std::size_t j = 0; j < 3; ++j) {
        Vec3 p = xi, m = xi;
        p[j] += h;
        m[j] -= h;
        const Vec3 col = (1.0 / (2 * h)) * (fm.map(p, t) - fm.map(m, t));
        CHECK(norm(col - fm.jacobian(xi, t).col(j)) <= 1e-6 * std::max(1.0, norm(col)));
        const Vec3 vcol = (1.0 / (2 * h)) * (fm.velocity(p, t) - fm.velocity(m, t));
        CHECK(norm(vcol - fm.velocity_jacobian(xi, t).col(j)) <= 1e-6 * std::max(1.0, norm(vcol)));
      }
      const Vec3 vt = (1.0 / (2 * h)) * (fm.map(xi, t + h) - fm.map(xi, t - h));
      CHECK(norm(vt - fm.velocity(xi, t)) <= 1e-6 * std::max(1.0, norm(vt)));
      // closed-form Eulerian gradient agrees with the chain rule
      const Mat3 chain = fm.velocity_jacobian(xi, t) * inverse(fm.jacobian(xi, t));
      CHECK(max_abs(chain - eulerian_gradient(fm, xi, t)) < 1e-13);
    }
  }
  CHECK_THROWS_AS(map_kind_from_string("twist"), Error);
}

TEST_CASE("catalog map closed forms") {
  const FlowMap id = builtin_map(MapKind::identity);
  CHECK(id.jacobian({0.1, 0.2, 0.3}, 4.0) == Mat3::identity());
  CHECK(id.velocity({0.1, 0.2, 0.3}, 4.0) == Vec3{});

  const double t = 1.7;
  const Mat3 f = builtin_map(MapKind::shear, 1.0).jacobian({0.4, 0.4, 0.4}, t);
  CHECK(f.col(0) == Vec3{1, 0, 0});
  CHECK(f.col(1) == Vec3{t, 1, 0});
  CHECK(f.col(2) == Vec3{0, 0, 1});

  const double a = 0.3;
  CHECK(max_abs(builtin_map(MapKind::dilation, a).jacobian({}, t) -
                Mat3::diagonal(std::exp(a * t))) < 1e-15);
}

TEST_CASE("metric package") {
  const MetricData idm = metric_at(builtin_map(MapKind::identity), {0.5, 0.5, 0.5}, 2.0);
  CHECK(idm.g_lower == Mat3::identity());
  CHECK(idm.g_upper == Mat3::identity());
  CHECK(idm.jacobian == 1.0);
  CHECK(idm.g_dot_lower == Mat3{});

  const MetricData sm = metric_at(builtin_map(MapKind::shear, 1.0), {0.2, 0.3, 0.4}, 2.0);
  CHECK(sm.g_lower == Mat3{1, 2, 0, 2, 5, 0, 0, 0, 1});
  CHECK(sm.jacobian == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(transpose(sm.g_lower) == sm.g_lower);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(sm.g_dot_lower(i, j) ==
            dot(sm.g_dot[i], sm.g[j]) + dot(sm.g[i], sm.g_dot[j]));

  const double a = 0.4, t = 1.3;
  const MetricData dm = metric_at(builtin_map(MapKind::dilation, a), {0.2, 0.3, 0.4}, t);
  CHECK(dm.jacobian == doctest::Approx(std::exp(3 * a * t)).epsilon(1e-14));

  CHECK_THROWS_AS(metric_at(builtin_map(MapKind::dilation, -20.0), {0.5, 0.5, 0.5}, 1.0), Error);
}

TEST_CASE("metric identities at probe points") {
  const auto id = verify_metric_identities(builtin_map(MapKind::identity), {0.1, 0.2, 0.3}, 0.5);
  CHECK(id.max_algebraic() == 0.0);
  CHECK(id.jacobian_rate == 0.0);

  const auto sh = verify_metric_identities(builtin_map(MapKind::shear, 1.0), {0.3, 0.7, 0.1}, 1.0);
  CHECK(sh.max_algebraic() <= 1e-10);
  CHECK(sh.jacobian_rate <= 1e-10);

  const auto rot = verify_metric_identities(builtin_map(MapKind::rotation, 1.0), {0.3, 0.7, 0.1},
                                            std::numbers::pi / 3);
  CHECK(rot.max_algebraic() <= 1e-10);
  CHECK(rot.jacobian_rate <= 1e-10);

  const auto dil = verify_metric_identities(builtin_map(MapKind::dilation, 0.5), {0.3, 0.7, 0.1}, 0.8);
  CHECK(dil.max_algebraic() <= 1e-12);
  CHECK(dil.jacobian_rate <= 1e-9);
}

TEST_CASE("pullback pairs") {
  const QuadratureRule q(Box{}, 8);
  const auto cs = all_newtonian();
  for (PullbackKind k : {PullbackKind::W1, PullbackKind::D1, PullbackKind::D2, PullbackKind::D3}) {
    const auto p = pullback_energy_pair(builtin_map(MapKind::identity), 0.7, k, q, cs);
    CHECK(p.lhs == 0.0);
    CHECK(p.rhs == 0.0);
  }

  const auto d1 = pullback_energy_pair(builtin_map(MapKind::shear, 1.0), 1.0, PullbackKind::D1, q, cs);
  CHECK(d1.lhs == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(d1.rel_err() < 1e-12);

  const auto d3 =
      pullback_energy_pair(builtin_map(MapKind::rotation, 1.0), 0.6, PullbackKind::D3, q, cs);
  CHECK(d3.lhs == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(d3.rel_err() < 1e-12);
  CHECK_FALSE(d3.quadrature_warning);

  PullbackFields fields;
  fields.theta = {[](const Vec3& x, double) { return std::sin(x[0]) * std::cos(2 * x[1]); },
                  [](const Vec3& x, double) {
                    return Vec3{std::cos(x[0]) * std::cos(2 * x[1]),
                                -2 * std::sin(x[0]) * std::sin(2 * x[1]), 0};
                  }};
  fields.sigma = fields.theta;
  ConstitutiveSet pl{ConstitutiveFunction::power_law(1, 2), ConstitutiveFunction::power_law(1, 2),
                     ConstitutiveFunction::power_law(1, 2), ConstitutiveFunction::power_law(1, 2),
                     ConstitutiveFunction::power_law(1, 2)};
  for (MapKind m : {MapKind::shear, MapKind::rotation, MapKind::dilation})
    for (PullbackKind k : {PullbackKind::W1, PullbackKind::D2, PullbackKind::D4}) {
      const auto p = pullback_energy_pair(builtin_map(m, 0.9), 0.8, k, q, pl, fields);
      CHECK(p.rel_err() < 1e-8);
    }
}

TEST_CASE("divergence identities") {
  const QuadratureRule q(Box{}, 6);
  const auto one = ScalarFn::constant(1.0);
  const auto id = divergence_identity_pair(builtin_map(MapKind::identity), 1.0, one, q);
  CHECK(id.lhs == 0.0);
  CHECK(id.rhs_metric == 0.0);

  const double a = 0.3, t = 0.9;
  const auto dil = divergence_identity_pair(builtin_map(MapKind::dilation, a), t, one, q);
  const double expect = 3 * a * std::exp(3 * a * t);
  CHECK(dil.lhs == doctest::Approx(expect).epsilon(1e-13));
  CHECK(dil.rhs_metric == doctest::Approx(expect).epsilon(1e-13));
  CHECK(dil.rhs_rate == doctest::Approx(expect).epsilon(1e-9));

  const auto sh = divergence_identity_pair(builtin_map(MapKind::shear, 1.0), t, one, q);
  CHECK(std::fabs(sh.lhs) < 1e-15);
  CHECK(std::fabs(sh.rhs_metric) < 1e-15);
  CHECK(std::fabs(sh.rhs_rate) < 1e-9);
}

TEST_CASE("mass pullback solves the continuity equation") {
  auto rho0 = [](const Vec3& xi) { return 1.0 + 0.5 * xi[0] * xi[1]; };
  const Vec3 xi{0.3, 0.6, 0.2};
  CHECK(mass_pullback(builtin_map(MapKind::identity), rho0, xi, 3.0) == rho0(xi));
  const double a = 0.25, t = 1.1;
  CHECK(mass_pullback(builtin_map(MapKind::dilation, a), rho0, xi, t) ==
        doctest::Approx(rho0(xi) * std::exp(-3 * a * t)).epsilon(1e-14));
  CHECK(mass_pullback(builtin_map(MapKind::shear, 1.0), rho0, xi, t) ==
        doctest::Approx(rho0(xi)).epsilon(1e-14));

  const FlowMap fm = builtin_map(MapKind::dilation, 0.7);
  const double r1 = std::fabs(continuity_residual(fm, rho0, xi, t, 1e-2));
  const double r2 = std::fabs(continuity_residual(fm, rho0, xi, t, 5e-3));
  CHECK(r1 > 0.0);
  CHECK(std::log2(r1 / r2) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("action variation") {
  const Box box{};
  const QuadratureRule q(box, 6);
  auto rho0 = [](const Vec3& xi) { return 1.0 + 0.3 * std::sin(xi[0]); };

  Perturbation none;
  none.y = none.y_t = [](const Vec3&, double) { return Vec3{}; };
  none.y_jacobian = [](const Vec3&, double) { return Mat3{}; };
  ActionVariationOptions opts;
  opts.time_nodes = 8;
  const auto zero = action_variation_check(builtin_map(MapKind::shear, 1.0), none, rho0, q, opts);
  CHECK(std::fabs(zero.force_pairing) < 1e-15);
  for (double d : zero.derivatives) CHECK(std::fabs(d) < 1e-15);

  const auto pert = Perturbation::bump(box, opts.horizon, {0, 1, 0}, {1, 0.5, 0});
  for (MapKind m : {MapKind::shear, MapKind::dilation}) {
    const auto r = action_variation_check(builtin_map(m, 0.8), pert, rho0, q, opts);
    CHECK(r.fitted_slope == doctest::Approx(2.0).epsilon(0.075));
  }

  Perturbation bad = pert;
  bad.y = [](const Vec3&, double) { return Vec3{1, 0, 0}; };
  CHECK_THROWS_AS(action_variation_check(builtin_map(MapKind::shear), bad, rho0, q, opts), Error);
}

TEST_CASE("action variation with a barotropic potential") {
  const Box box{};
  const QuadratureRule q(box, 6);
  auto rho0 = [](const Vec3& xi) { return 1.0 + 0.3 * std::sin(3 * xi[0]) * xi[1]; };
  ActionVariationOptions opts;
  opts.time_nodes = 8;
  opts.chemical_potential = ConstitutiveFunction::power_law(1.0, 2.0);
  const auto pert = Perturbation::bump(box, opts.horizon, {0.5, 1, 0}, {1, 0, 0.5});
  const auto r = action_variation_check(builtin_map(MapKind::dilation, 0.5), pert, rho0, q, opts);
  CHECK(r.fitted_slope == doctest::Approx(2.0).epsilon(0.075));
}

TEST_CASE("loglog slope") {
  CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
}
