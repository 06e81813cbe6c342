#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "heis/group.hpp"

using namespace heis;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// group law written out in real coordinates (s, x_1..x_n, y_1..y_n)
GroupPoint law_real(const GroupPoint& a, const GroupPoint& b) {
  int n = a.n;
  double s = a.s + b.s;
  for (int j = 0; j < n; ++j) {
    double x = a.x(j), y = a.x(n + j), xp = b.x(j), yp = b.x(n + j);
    s += 2.0 * (y * xp - x * yp);
  }
  GroupPoint r(n);
  r.s = s;
  for (int j = 0; j < 2 * n; ++j) r.set_x(j, a.x(j) + b.x(j));
  return r;
}

GroupPoint rand_point(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-2, 2);
  GroupPoint g(n);
  g.s = u(rng);
  for (int j = 0; j < 2 * n; ++j) g.set_x(j, u(rng));
  return g;
}

double diff(const GroupPoint& a, const GroupPoint& b) {
  double d = std::abs(a.s - b.s);
  for (int j = 0; j < 2 * a.n; ++j) d = std::max(d, std::abs(a.x(j) - b.x(j)));
  return d;
}

}  // namespace

TEST_CASE("law agrees with the real-coordinate formula", "[group]") {
  std::mt19937_64 rng(11);
  for (int n = 1; n <= 3; ++n)
    for (int i = 0; i < 200; ++i) {
      auto a = rand_point(rng, n), b = rand_point(rng, n);
      REQUIRE(diff(multiply(a, b), law_real(a, b)) <= 1e-13);
    }
}

TEST_CASE("associativity, identity, inverse", "[group]") {
  std::mt19937_64 rng(12);
  for (int n = 1; n <= 2; ++n)
    for (int i = 0; i < 200; ++i) {
      auto a = rand_point(rng, n), b = rand_point(rng, n), c = rand_point(rng, n);
      CHECK(diff(multiply(multiply(a, b), c), multiply(a, multiply(b, c))) <= 1e-12);
      CHECK(diff(multiply(a, inverse(a)), GroupPoint::identity(n)) <= 1e-15);
      CHECK(diff(multiply(GroupPoint::identity(n), a), a) == 0.0);
    }
}

TEST_CASE("homogeneous norm values", "[group]") {
  CHECK_THAT(norm(GroupPoint(0.0, {cplx(1, 0)})), WithinAbs(1.0, 1e-15));
  CHECK_THAT(norm(GroupPoint(1.0, {cplx(0, 0)})), WithinAbs(1.0, 1e-15));
  // |z|^2 = 4, s = 3: (16 + 9)^(1/4)
  CHECK_THAT(norm(GroupPoint(3.0, {cplx(2, 0)})), WithinRel(std::sqrt(5.0), 1e-14));
  CHECK_THAT(norm(GroupPoint(-3.0, {cplx(0, 1), cplx(std::sqrt(3.0), 0)})), WithinRel(std::sqrt(5.0), 1e-14));
  CHECK(norm(GroupPoint::identity(2)) == 0.0);
}

TEST_CASE("dilations are automorphisms and scale the norm", "[group]") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    auto a = rand_point(rng, 2), b = rand_point(rng, 2);
    double r = 0.25 + 3.0 * (i % 7) / 7.0;
    CHECK(diff(dilate(r, multiply(a, b)), multiply(dilate(r, a), dilate(r, b))) <= 1e-12);
    CHECK_THAT(norm(dilate(r, a)), WithinRel(r * norm(a), 1e-13));
  }
  CHECK_THROWS_AS(dilate(0.0, GroupPoint(1)), input_error);
  CHECK_THROWS_AS(dilate(-1.0, GroupPoint(1)), input_error);
}

TEST_CASE("distance is symmetric and left invariant", "[group]") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 100; ++i) {
    auto g = rand_point(rng, 1), h = rand_point(rng, 1), k = rand_point(rng, 1);
    CHECK_THAT(distance(g, h), WithinRel(distance(h, g), 1e-12));
    CHECK_THAT(distance(multiply(k, g), multiply(k, h)), WithinRel(distance(g, h), 1e-11));
  }
}

TEST_CASE("box dilation scales volume by r^Q", "[group]") {
  CoordBox b;
  b.n = 1;
  b.lo[0] = -1; b.hi[0] = 3;
  b.lo[1] = 0;  b.hi[1] = 1;
  b.lo[2] = -2; b.hi[2] = 0.5;
  CHECK_THAT(dilate(2.0, b).volume(), WithinRel(16.0 * b.volume(), 1e-15));
}

TEST_CASE("bad dimensions are rejected", "[group]") {
  CHECK_THROWS_AS(GroupPoint(0), input_error);
  CHECK_THROWS_AS(GroupPoint(kMaxN + 1), input_error);
  CHECK_THROWS_AS(multiply(GroupPoint(1), GroupPoint(2)), input_error);
  CHECK_THROWS_AS(BiDilation(1.0, 0.0), input_error);
  CHECK(GroupParams::of(3).Q == 8);
}
