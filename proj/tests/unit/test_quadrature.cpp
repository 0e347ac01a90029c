#include <cmath>

#include "doctest.h"
#include "evarfluid/quadrature.hpp"

using namespace evf;

TEST_CASE("Gauss-Legendre weights and exactness in 1D") {
  for (std::size_t n = 1; n <= 12; ++n) {
    const GaussLegendre1D g(n, -1.0, 2.0);
    double wsum = 0.0;
    for (double w : g.weights) wsum += w;
    CHECK(wsum == doctest::Approx(3.0).epsilon(1e-14));
    for (std::size_t d = 0; d <= 2 * n - 1; ++d) {
      const double exact = (std::pow(2.0, d + 1) - std::pow(-1.0, d + 1)) / (d + 1);
      const double got = g.integrate([&](double x) { return std::pow(x, d); });
      CHECK(std::fabs(got - exact) <= 1e-12 * std::max(1.0, std::fabs(exact)));
    }
  }
}

TEST_CASE("tensor-product rule") {
  const Box box{{0, -1, 0.5}, {2, 1, 1.5}};
  const QuadratureRule q(box, 4);
  CHECK(q.order() == 7);
  CHECK(q.size() == 64);
  double wsum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    wsum += q.weight(i);
    CHECK(box.contains(q.node(i)));
  }
  CHECK(wsum == doctest::Approx(box.volume()).epsilon(1e-14));

  // x^7 y^6 z^5 over the box
  auto f = [](const Vec3& p) { return std::pow(p[0], 7) * std::pow(p[1], 6) * std::pow(p[2], 5); };
  const double exact = (std::pow(2.0, 8) / 8) * (2.0 / 7) *
                       ((std::pow(1.5, 6) - std::pow(0.5, 6)) / 6);
  CHECK(q.integrate(f) == doctest::Approx(exact).epsilon(1e-13));
  CHECK(std::fabs(q.integrate(f) - q.integrate_serial(f)) < 1e-13 * std::fabs(exact));
  CHECK(q.refined().nodes_per_axis() == 8);
}
