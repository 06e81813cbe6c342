#include <catch_amalgamated.hpp>

#include <cmath>

#include "heis/atoms.hpp"

using namespace heis;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DyadicCube cube(int f, int k, long long s = 0, long long x = 0, long long y = 0) {
  DyadicCube c;
  c.factor = f;
  c.level = k;
  c.idx[0] = s;
  c.idx[1] = x;
  c.idx[2] = y;
  return c;
}

OpenSetModel single(int k) {
  DyadicParams p;
  return OpenSetModel({{cube(1, k), cube(2, k)}}, p, p);
}

FactorBump make_bump(double cs, double cx, double cy, double hs, double hx, double hy) {
  FactorBump b;
  b.center = {cs, cx, cy};
  b.half = {hs, hx, hy};
  return b;
}

double eval_at(const FactorBump& b, const Poly& P, const GroupPoint& g) {
  double u[Poly::kMaxVars];
  b.local(g, u);
  return P.eval(u);
}

}  // namespace

TEST_CASE("polynomial algebra", "[atoms]") {
  Poly x = Poly::affine(2, 0, 1.0, 2.0);  // 1 + 2u
  Poly y = Poly::affine(2, 1, 0.0, 1.0);  // v
  Poly p = (x * y).pow(2) + Poly::constant(2, -3.0);
  double u[2] = {0.5, -1.5};
  CHECK_THAT(p.eval(u), WithinRel(std::pow(2.0 * -1.5, 2) - 3.0, 1e-14));
  // d/du (1+2u)^2 v^2 = 4(1+2u) v^2
  CHECK_THAT(p.derivative(0).eval(u), WithinRel(4.0 * 2.0 * 2.25, 1e-14));
  CHECK_THAT(PolyTable(p).eval(u), WithinRel(p.eval(u), 1e-14));
  CHECK(p.degree(0) == 2);
  CHECK_THROWS_AS(Poly(0), input_error);
}

TEST_CASE("bump vector fields match finite differences in group coordinates", "[atoms]") {
  FactorBump b = make_bump(1.0, 0.4, -0.2, 2.0, 0.5, 0.7);
  Poly B = b.base();
  GroupPoint g(1.3, {cplx(0.5, -0.1)});
  const double h = 1e-3;
  auto f = [&](const GroupPoint& q) { return eval_at(b, B, q); };
  for (int j = 1; j <= 2; ++j) {
    // X_j f via the group law: d/de f(g exp(e X_j)) at e = 0
    auto along = [&](double e) {
      GroupPoint step(1);
      step.set_x(j - 1, e);
      return f(multiply(g, step));
    };
    double fd = (-along(2 * h) + 8 * along(h) - 8 * along(-h) + along(-2 * h)) / (12 * h);
    CHECK_THAT(eval_at(b, b.apply_X(j, B), g), WithinAbs(fd, 1e-8));
  }
  CHECK_THAT(eval_at(b, B, GroupPoint(1.0, {cplx(0.4, -0.2)})), WithinAbs(1.0, 1e-15));
}

TEST_CASE("exact bump inner products against tensor Gauss-Legendre", "[atoms]") {
  FactorBump A = make_bump(0.5, 0.1, 0.0, 2.0, 0.5, 0.5);
  FactorBump B = make_bump(1.0, 0.3, -0.2, 1.5, 0.6, 0.4);
  Poly PA = A.apply_sublaplacian(A.base()), PB = B.base();
  double exact = bump_inner(A, PolyTable(PA), B, PolyTable(PB));
  // overlap box
  double lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(A.center[a] - A.half[a], B.center[a] - B.half[a]);
    hi[a] = std::min(A.center[a] + A.half[a], B.center[a] + B.half[a]);
  }
  Rule1D rs = composite_gl(lo[0], hi[0], 4, 12), rx = composite_gl(lo[1], hi[1], 4, 12),
         ry = composite_gl(lo[2], hi[2], 4, 12);
  double acc = 0;
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = 0; j < rx.size(); ++j)
      for (std::size_t k = 0; k < ry.size(); ++k) {
        GroupPoint g(rs.x[i], {cplx(rx.x[j], ry.x[k])});
        acc += rs.w[i] * rx.w[j] * ry.w[k] * eval_at(A, PA, g) * eval_at(B, PB, g);
      }
  CHECK(exact != 0.0);
  CHECK_THAT(exact, WithinRel(acc, 1e-8));
  FactorBump far = make_bump(10.0, 0.1, 0.0, 1.0, 0.5, 0.5);
  CHECK(bump_inner(A, PolyTable(PA), far, PolyTable(far.base())) == 0.0);
}

TEST_CASE("atom on a single rectangle is valid", "[atoms]") {
  Atom A = build_atom(single(1), 2, 1);
  REQUIRE(A.pieces.size() == 1);
  auto rep = validate_atom(A);
  for (auto& c : rep.checks) INFO(c.name << " " << c.value);
  CHECK(rep.all_pass());
  for (auto& c : atom_sigma_checks(A)) CHECK(c.pass);
  double r = atom_norms(A).l2 * std::sqrt(A.omega_measure);
  CHECK(r <= 1.0 + 1e-9);
  CHECK(r >= 0.1);
}

TEST_CASE("atom on an L-shaped set is valid", "[atoms]") {
  DyadicParams p;
  OpenSetModel om({{cube(1, 1), cube(2, 1)}, {cube(1, 1, 0, 1), cube(2, 1)}, {cube(1, 1), cube(2, 1, 0, 1)}}, p, p);
  Atom A = build_atom(om, 2, 3);
  CHECK(A.maximal.size() == 3);
  CHECK(validate_atom(A).all_pass());
}

TEST_CASE("negative controls fail exactly their condition", "[atoms]") {
  Atom A = build_atom(single(0), 2, 1);
  auto far = validate_atom(control_far_support(A));
  CHECK(far.failed() == std::vector<std::string>{"support"});
  auto big = validate_atom(control_scaled(A));
  CHECK(big.failed() == std::vector<std::string>{"condition_iii"});
  CHECK_THAT(big.get("condition_iii").value, WithinRel(10.0, 1e-6));
  auto zero = validate_atom(control_zero(A));
  CHECK(zero.failed() == std::vector<std::string>{"nontrivial"});
}

TEST_CASE("dilating Omega rescales the L2 norm by r^-Q/2 per factor", "[atoms]") {
  OpenSetModel om = single(2);
  Atom A = build_atom(om, 2, 5);
  Atom B = build_atom(om.dilated(1, 2), 2, 5);
  // r1 = 2, r2 = 4, Q = 4
  CHECK_THAT(atom_norms(B).l2 / atom_norms(A).l2, WithinRel(std::pow(2.0, -2) * std::pow(4.0, -2), 1e-10));
}

TEST_CASE("atom construction rejects bad input", "[atoms]") {
  CHECK_THROWS_AS(build_atom(single(0), 1, 1), input_error);
  CHECK_THROWS_AS(build_atom(single(0), 4, 1), input_error);
}

TEST_CASE("factor projection with exact s-integration against brute force", "[atoms]") {
  Atom A = build_atom(single(0), 2, 1);
  const AtomPiece& pc = A.pieces[0];
  SzegoParams sp = SzegoParams::of(1);
  std::vector<GroupPoint> pts{GroupPoint(4.0, {cplx(0.5, 0.5)}), GroupPoint(1.0, {cplx(0.9, 0.1)}),
                              GroupPoint(9.0, {cplx(1.5, -0.5)})};
  const double t = 0.25;
  auto nd = detail::inner_nodes(pc, 0, 2, 3, 8);
  auto fast = detail::factor_projection(nd, t, pts, sp);
  const FactorBump& b = pc.b1;
  Rule1D rs = composite_gl(b.center[0] - b.half[0], b.center[0] + b.half[0], 120, 8),
         rx = composite_gl(b.center[1] - b.half[1], b.center[1] + b.half[1], 4, 8),
         ry = composite_gl(b.center[2] - b.half[2], b.center[2] + b.half[2], 4, 8);
  for (std::size_t p = 0; p < pts.size(); ++p) {
    cplx acc = 0;
    for (std::size_t i = 0; i < rx.size(); ++i)
      for (std::size_t j = 0; j < ry.size(); ++j)
        for (std::size_t k = 0; k < rs.size(); ++k) {
          GroupPoint h(rs.x[k], {cplx(rx.x[i], ry.x[j])});
          acc += rx.w[i] * ry.w[j] * rs.w[k] * pc.factor_value(0, 2, h) * szego_factor(t, multiply(inverse(h), pts[p]), sp);
        }
    CHECK(std::abs(fast[p] - acc) <= 1e-6 * std::abs(acc));
  }
}

TEST_CASE("projection experiment: zero atom, scale invariance, stability", "[atoms][slow]") {
  Atom A0 = build_atom(single(0), 2, 1);
  auto z = atom_projection_experiment(control_zero(A0));
  CHECK(z.value == 0.0);

  ProjectionSpec spec;
  spec.stability_tol = 0.05;
  auto r0 = atom_projection_experiment(A0, spec);
  CHECK(r0.value > 0);
  CHECK_THAT(r0.inside + r0.outside, WithinRel(r0.value, 1e-12));

  auto r1 = atom_projection_experiment(build_atom(single(1), 2, 1));
  CHECK_THAT(r1.value, WithinRel(r0.value, 1e-6));
}

TEST_CASE("subharmonicity check", "[atoms]") {
  std::vector<UPoint> pts;
  for (int i = 0; i < 5; ++i) {
    UPoint p;
    p.t1 = 0.6 + 0.2 * i;
    p.t2 = 1.4 - 0.1 * i;
    p.g1 = GroupPoint(0.3 * i - 0.5, {cplx(0.2, -0.1 * i)});
    p.g2 = GroupPoint(0.1 * i, {cplx(-0.3, 0.25)});
    pts.push_back(p);
  }
  FnEvaluator zero([](const UPoint&) { return cplx(0); });
  auto rz = subharmonicity_check(zero, 1.0, pts, 0, Stencil(1e-3, 4));
  CHECK(rz.skipped == 5);
  CHECK(rz.evaluated == 0);

  ProductPoint gp{GroupPoint(0.2, {cplx(0.1, 0.3)}), GroupPoint(-0.4, {cplx(-0.2, 0.1)})};
  SzegoSlice f(gp, 0.0, 0.0, SzegoParams::of(1), SzegoParams::of(1));
  for (double p : {0.5, 1.0, 2.0})
    for (int a = 0; a < 2; ++a) {
      auto r = subharmonicity_check(f, p, pts, a, Stencil(1e-3, 4));
      CHECK(r.evaluated == 5);
      CHECK(r.min_value >= -1e-6);
    }
  CHECK_THROWS_AS(subharmonicity_check(f, 0.0, pts, 0, Stencil(1e-3, 4)), input_error);
}
