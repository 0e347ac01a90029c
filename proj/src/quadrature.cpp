#include "evarfluid/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "evarfluid/error.hpp"

namespace evf {

namespace {

// Returns (P_n(x), P_n'(x)) by the three-term recurrence.
std::pair<double, double> legendre(std::size_t n, double x) {
  double p0 = 1.0, p1 = x;
  for (std::size_t k = 2; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
    p0 = p1;
    p1 = p2;
  }
  const double dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace

GaussLegendre1D::GaussLegendre1D(std::size_t n, double a, double b) {
  if (n == 0) throw Error(errc::invalid_argument, "Gauss-Legendre rule needs at least one node");
  nodes.resize(n);
  weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  if (n == 1) {
    nodes[0] = mid;
    weights[0] = b - a;
    return;
  }
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = mid - half * x;
    nodes[n - 1 - i] = mid + half * x;
    weights[i] = half * w;
    weights[n - 1 - i] = half * w;
  }
}

QuadratureRule::QuadratureRule(const Box& box, std::size_t nodes_per_axis)
    : box_(box),
      n_(nodes_per_axis),
      axes_{GaussLegendre1D(nodes_per_axis, box.lo[0], box.hi[0]),
            GaussLegendre1D(nodes_per_axis, box.lo[1], box.hi[1]),
            GaussLegendre1D(nodes_per_axis, box.lo[2], box.hi[2])} {}

Vec3 QuadratureRule::node(std::size_t flat) const {
  const std::size_t i = flat / (n_ * n_), j = (flat / n_) % n_, k = flat % n_;
  return {axes_[0].nodes[i], axes_[1].nodes[j], axes_[2].nodes[k]};
}

double QuadratureRule::weight(std::size_t flat) const {
  const std::size_t i = flat / (n_ * n_), j = (flat / n_) % n_, k = flat % n_;
  return axes_[0].weights[i] * axes_[1].weights[j] * axes_[2].weights[k];
}

}  // namespace evf
