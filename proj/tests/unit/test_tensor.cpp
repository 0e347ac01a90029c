#include <random>

#include "doctest.h"
#include "evarfluid/tensor.hpp"

using namespace evf;

namespace {

Mat3 random_matrix(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Mat3 m;
  for (auto& x : m.a) x = u(rng);
  return m;
}

}  // namespace

TEST_CASE("decompose_gradient on the basic cases") {
  const auto zero = decompose_gradient(Mat3{});
  CHECK(zero.d_plus == Mat3{});
  CHECK(zero.d_minus == Mat3{});
  CHECK(zero.divergence == 0.0);

  const auto id = decompose_gradient(Mat3::identity());
  CHECK(id.d_plus == Mat3::identity());
  CHECK(id.d_minus == Mat3{});
  CHECK(id.divergence == 3.0);

  Mat3 shear;
  shear(0, 1) = 1.0;
  const auto s = decompose_gradient(shear);
  CHECK(frobenius_sq(s.d_plus) == doctest::Approx(0.5));
  CHECK(frobenius_sq(s.d_minus) == doctest::Approx(0.5));
  CHECK(s.divergence == 0.0);
}

TEST_CASE("curl from gradient") {
  CHECK(curl_from_gradient(Mat3{}) == Vec3{});

  Mat3 rot;
  rot(0, 1) = -1.0;
  rot(1, 0) = 1.0;
  const Vec3 c = curl_from_gradient(rot);
  CHECK(c == Vec3{0, 0, 2});
  CHECK(norm_sq(c) == 4.0);
  CHECK(2.0 * frobenius_sq(decompose_gradient(rot).d_minus) == doctest::Approx(4.0));

  Mat3 shear;
  shear(0, 1) = 1.0;
  CHECK(curl_from_gradient(shear) == Vec3{0, 0, -1});
}

TEST_CASE("frobenius norm") {
  CHECK(frobenius_sq(Mat3{}) == 0.0);
  CHECK(frobenius_sq(Mat3::identity()) == 3.0);
  Mat3 m;
  m(0, 1) = m(1, 0) = 0.5;
  CHECK(frobenius_sq(m) == 0.5);
}

TEST_CASE("decomposition properties on random gradients") {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 200; ++n) {
    const Mat3 g = random_matrix(rng);
    const auto d = decompose_gradient(g);
    CHECK(max_abs(d.d_plus + d.d_minus - g) <= 1e-15 * max_abs(g));
    CHECK(transpose(d.d_plus) == d.d_plus);
    CHECK(transpose(d.d_minus) == -d.d_minus);
    CHECK(std::fabs(contract(d.d_plus, d.d_minus)) < 1e-14);
    CHECK(trace(d.d_minus) == 0.0);
    CHECK(trace(d.d_plus) == doctest::Approx(d.divergence).epsilon(1e-15));
    CHECK(frobenius_sq(g) ==
          doctest::Approx(frobenius_sq(d.d_plus) + frobenius_sq(d.d_minus)).epsilon(1e-14));
    const double curl_sq = norm_sq(curl_from_gradient(g));
    CHECK(std::fabs(2.0 * frobenius_sq(d.d_minus) - curl_sq) <= 1e-14 * std::max(1.0, curl_sq));
  }
}

TEST_CASE("inverse and determinant") {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 50; ++n) {
    const Mat3 m = random_matrix(rng) + 5.0 * Mat3::identity();
    CHECK(max_abs(m * inverse(m) - Mat3::identity()) < 1e-13);
    CHECK(det(transpose(m)) == doctest::Approx(det(m)));
  }
  const Vec3 a{1, 2, 3}, b{-1, 0, 4};
  CHECK(dot(cross(a, b), a) == 0.0);
  CHECK(Mat3::from_columns(a, b, Vec3{}).col(1) == b);
}
