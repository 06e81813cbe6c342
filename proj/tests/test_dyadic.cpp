#include <catch_amalgamated.hpp>

#include <random>

#include "dyadic_oracle.hpp"

using namespace heis;
using Catch::Matchers::WithinRel;

namespace {

DyadicCube random_cube(std::mt19937_64& g, int factor, int maxk) {
  int k = static_cast<int>(g() % (maxk + 1));
  DyadicCube c;
  c.factor = factor;
  for (int l = 0; l < k; ++l) {
    auto ch = c.children();
    c = ch[g() % ch.size()];
  }
  return c;
}

}  // namespace

TEST_CASE("cube tree structure", "[dyadic]") {
  DyadicParams p;
  DyadicCube root;
  auto kids = root.children();
  REQUIRE(kids.size() == 16);
  double sum = 0;
  for (auto& k : kids) {
    sum += k.measure(p);
    CHECK(k.parent() == root);
    CHECK(k.within(root));
    CHECK(root.contains(k.center(p), p));
    CHECK(cube_containing(1, 1, k.center(p), p) == k);
  }
  CHECK_THAT(sum, WithinRel(root.measure(p), 1e-15));
  CHECK_THAT(root.measure(p), WithinRel(8.0, 1e-15));
  CHECK(root.descendants_at(2).size() == 256);

  // negative indices floor correctly
  GroupPoint g(-0.1, {cplx(-0.01, 0.3)});
  DyadicCube c = cube_containing(1, 2, g, p);
  CHECK(c.contains(g, p));
  CHECK(c.parent().contains(g, p));
  CHECK(c.parent() == cube_containing(1, 1, g, p));
}

TEST_CASE("axioms in the bounded window, rejection outside", "[dyadic]") {
  DyadicParams p;
  CoordBox w;
  w.n = 1;
  w.lo[0] = -16;
  w.hi[0] = 16;
  w.lo[1] = w.lo[2] = -1;
  w.hi[1] = w.hi[2] = 1;
  for (int k = 0; k <= 2; ++k) CHECK_NOTHROW(build_cubes(1, k, w, p));
  w.lo[1] = -40;
  w.hi[1] = 40;
  CHECK_THROWS_AS(build_cubes(1, 0, w, p), input_error);
}

TEST_CASE("dilated cube membership and measure", "[dyadic]") {
  DyadicParams p;
  DyadicCube c = DyadicCube().children()[5];
  GroupPoint ctr = c.center(p);
  CHECK(c.dilate_contains(3.0, ctr, p));
  CHECK_THAT(c.dilate_measure(2.0, p), WithinRel(16.0 * c.measure(p), 1e-15));
  CoordBox bb = c.dilate_bbox(1.0, p), b = c.box(p);
  for (int a = 0; a < 3; ++a) {
    CHECK_THAT(bb.lo[a], Catch::Matchers::WithinAbs(b.lo[a], 1e-14));
    CHECK_THAT(bb.hi[a], Catch::Matchers::WithinAbs(b.hi[a], 1e-14));
  }
}

TEST_CASE("maximal rectangles, stars, measure and Journe sums match brute force", "[dyadic]") {
  DyadicParams p;
  std::mt19937_64 g(2024);
  for (int trial = 0; trial < 30; ++trial) {
    int nr = 1 + static_cast<int>(g() % 6);
    std::vector<DyadicRectangle> rs;
    for (int i = 0; i < nr; ++i) rs.push_back({random_cube(g, 1, 2), random_cube(g, 2, 2)});
    OpenSetModel om(rs, p, p);
    oracle::Oracle o(rs);
    for (auto d : {Direction::both, Direction::g1, Direction::g2}) CHECK(maximal_rectangles(om, d) == o.maximal(d));
    CHECK_THAT(om.measure(), WithinRel(o.measure(p, p), 1e-12));
    for (double kappa : {1.0, 0.5}) CHECK_THAT(journe_sum(om, kappa, 1), WithinRel(o.journe(kappa, p, p), 1e-10));
    for (auto& R : o.maximal(Direction::g1)) {
      auto e = enlarge(om, R);
      auto [is, js] = o.stars(R.I, R.J);
      CHECK(e.Istar == is);
      CHECK(e.Jstar == js);
    }
  }
}

TEST_CASE("set model basics", "[dyadic]") {
  DyadicParams p;
  DyadicCube I, J;
  J.factor = 2;
  auto Ic = I.children()[0];
  OpenSetModel om({{Ic, J}}, p, p);
  CHECK(om.contains(DyadicRectangle{Ic.children()[3], J.children()[1]}));
  CHECK_FALSE(om.contains(DyadicRectangle{I, J}));
  CHECK_THROWS_AS(enlarge(om, DyadicRectangle{I, J}), input_error);
  CHECK_THROWS_AS(OpenSetModel({}, p, p), input_error);
  CHECK_THROWS_AS(journe_sum(om, 0.0, 1), input_error);
  CHECK_THROWS_AS(journe_sum(om, 1.0, 3), input_error);
  // transposition swaps the measure factors but not the total
  CHECK_THAT(om.transposed().measure(), WithinRel(om.measure(), 1e-15));
  // dilation by 2 in each factor multiplies the measure by 2^4 2^4
  OpenSetModel big({{Ic.children()[7], J.children()[2]}}, p, p);
  CHECK_THAT(big.dilated(1, 1).measure(), WithinRel(256.0 * big.measure(), 1e-12));
}

TEST_CASE("union Monte Carlo is seeded and bounded", "[dyadic]") {
  DyadicParams p;
  DyadicCube I, J;
  J.factor = 2;
  std::vector<DyadicRectangle> rs{{I.children()[0], J}, {I.children()[1], J.children()[4]}};
  auto a = union_measure_mc(rs, 2.0, p, p, 5, 4000), b = union_measure_mc(rs, 2.0, p, p, 5, 4000);
  CHECK(a.measure == b.measure);
  CHECK(a.measure <= a.sum_single + 4 * a.stderr_);
  CHECK(a.measure >= a.max_single - 4 * a.stderr_);
  CHECK(union_measure_mc({}, 2.0, p, p, 5, 10).measure == 0.0);
}
