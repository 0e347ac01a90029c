#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "evarfluid/parallel.hpp"
#include "evarfluid/tensor.hpp"

namespace evf {

struct Box {
  Vec3 lo{0.0, 0.0, 0.0};
  Vec3 hi{1.0, 1.0, 1.0};

  double volume() const { return (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]); }
  bool contains(const Vec3& p) const {
    for (std::size_t i = 0; i < 3; ++i)
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
    return true;
  }
};

/// Gauss-Legendre nodes and weights on [a, b].
struct GaussLegendre1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  GaussLegendre1D(std::size_t n, double a = -1.0, double b = 1.0);
  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

/// Tensor-product Gauss-Legendre rule on an axis-aligned box. Exact for
/// polynomials of degree <= 2n-1 in each variable.
class QuadratureRule {
 public:
  QuadratureRule(const Box& box, std::size_t nodes_per_axis);

  const Box& box() const { return box_; }
  std::size_t nodes_per_axis() const { return n_; }
  int order() const { return static_cast<int>(2 * n_ - 1); }
  std::size_t size() const { return n_ * n_ * n_; }

  Vec3 node(std::size_t flat) const;
  double weight(std::size_t flat) const;

  /// One refinement level: twice the nodes per axis.
  QuadratureRule refined() const { return {box_, 2 * n_}; }

  /// Deterministic (thread-count independent) sum of w_q f(xi_q).
  template <class F>
  double integrate(F&& f) const {
    return par::ordered_sum(size(), [&](std::size_t q) { return weight(q) * f(node(q)); });
  }

  /// Serial reference of integrate().
  template <class F>
  double integrate_serial(F&& f) const {
    double s = 0.0;
    for (std::size_t q = 0; q < size(); ++q) s += weight(q) * f(node(q));
    return s;
  }

 private:
  Box box_;
  std::size_t n_;
  std::array<GaussLegendre1D, 3> axes_;
};

}  // namespace evf
