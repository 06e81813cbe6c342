#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "heis/operators.hpp"

using namespace heis;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

cplx gauss(const GroupPoint& g) { return std::exp(-g.z_norm2() - g.s * g.s); }

}  // namespace

TEST_CASE("box rule integrates polynomials exactly", "[operators]") {
  auto r = FactorRule::box(1, 2.0, 2, 4);
  double vol = 0, m2 = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    vol += r.weights[i];
    m2 += r.weights[i] * r.nodes[i].s * r.nodes[i].s;
  }
  // [-4,4] x [-2,2]^2
  CHECK_THAT(vol, WithinRel(8.0 * 16.0, 1e-13));
  CHECK_THAT(m2, WithinRel(2.0 * 64.0 / 3.0 * 16.0, 1e-13));
  CHECK_THROWS_AS(FactorRule(1, Rule1D{}, {}), input_error);
}

TEST_CASE("convolution with a constant gives the integral", "[operators]") {
  auto r = FactorRule::box(1, 5.0, 4, 16, 0.2);
  FactorFn one = [](const GroupPoint&) { return cplx(1.0); };
  cplx v = convolve_at(gauss, one, GroupPoint(0.3, {cplx(0.1, 0.2)}), r);
  CHECK_THAT(v.real(), WithinRel(std::pow(pi, 1.5), 1e-9));
}

TEST_CASE("heat extension of a constant is the constant", "[operators]") {
  QuadratureSpec q;
  // the t = 0.5 kernel is narrow in s
  Rule1D rx = composite_gl(-4, 4, 3, 8);
  q.f1 = q.f2 = FactorRule(1, composite_gl(-4, 4, 8, 8), {rx, rx});
  q.truncation1 = q.truncation2 = 4.0;
  SeparableFunction one;
  one.terms.push_back({1.0, [](const GroupPoint&) { return cplx(1.0); }, [](const GroupPoint&) { return cplx(1.0); }});
  ProductPoint g{GroupPoint(0.2, {cplx(0.1, 0)}), GroupPoint(-0.3, {cplx(0, 0.4)})};
  q.points = {g};
  q.validate();
  const HeatKernel& k = default_heat_kernel(1);
  CHECK_THAT(heat_apply(one, 0.5, 0.5, g, q, k, k).real(), WithinAbs(1.0, 1e-3));
  CHECK_THROWS_AS(heat_apply(one, 0.0, 0.5, g, q, k, k), input_error);
}

TEST_CASE("quadrature spec rejects short truncation", "[operators]") {
  QuadratureSpec q;
  q.truncation1 = q.truncation2 = 3.0;
  q.points = {{GroupPoint(0.0, {cplx(1.0, 0)}), GroupPoint(1)}};
  CHECK_THROWS_AS(q.validate(), input_error);
  q.truncation1 = 4.0;
  CHECK_NOTHROW(q.validate());
}

TEST_CASE("sampled maximal function grows with the nested lattice", "[operators]") {
  QuadratureSpec q;
  q.f1 = q.f2 = FactorRule::box(1, 3.0, 2, 8);
  q.truncation1 = q.truncation2 = 3.0;
  SeparableFunction b;
  b.terms.push_back({1.0, gauss, gauss});
  NonTangentialRegion reg;
  reg.g = {GroupPoint(0.5, {cplx(0.2, 0)}), GroupPoint(0.1, {cplx(0, -0.3)})};
  reg.t_grid = {{0.5, 0.5}};
  const HeatKernel& k = default_heat_kernel(1);
  reg.samples = 2;
  double m2 = maximal_function(b, reg, q, k, k);
  reg.samples = 4;
  double m4 = maximal_function(b, reg, q, k, k);
  CHECK(m2 > 0);
  CHECK(m4 >= m2);
  // only the origin is strictly inside at m = 2
  CHECK(NonTangentialRegion::unit_ball(1, 2).size() == 1);
  CHECK(NonTangentialRegion::unit_ball(1, 4).size() > 1);
}

TEST_CASE("H^p estimate of a Gaussian", "[operators]") {
  QuadratureSpec q;
  q.f1 = q.f2 = FactorRule::box(1, 4.0, 2, 16, 0.25);
  SeparableUFunction f{[](double, const GroupPoint& g) { return gauss(g); },
                       [](double, const GroupPoint& g) { return gauss(g); }};
  std::vector<std::pair<double, double>> tg{{1, 1}};
  // (int |f|^2)^(1/2) = ((pi/2)^(3/2))^(2/2)
  double want = std::pow(pi / 2, 1.5);
  CHECK_THAT(hp_norm_estimate(f, 2.0, tg, q), WithinRel(want, 1e-8));
  // generic path, small rule: must agree with the separable one
  QuadratureSpec small;
  small.f1 = small.f2 = FactorRule::box(1, 3.0, 1, 12, 0.3);
  FnEvaluator ev([](const UPoint& p) { return gauss(p.g1) * gauss(p.g2); });
  CHECK_THAT(hp_norm_estimate(ev, 2.0, tg, small), WithinRel(hp_norm_estimate(f, 2.0, tg, small), 1e-12));
  CHECK_THROWS_AS(hp_norm_estimate(f, 0.0, tg, q), input_error);
}

TEST_CASE("log-log slope", "[operators]") {
  std::vector<double> x{1, 2, 4, 8}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -2.5));
  CHECK_THAT(loglog_slope(x, y), WithinAbs(-2.5, 1e-12));
  CHECK_THROWS_AS(loglog_slope({1}, {1}), input_error);
}

TEST_CASE("CZ factor integral decays like gamma^-2", "[operators]") {
  auto p = SzegoParams::of(1);
  ProductPoint gp{GroupPoint(1), GroupPoint(1)};
  auto sweep = cz_sweep(CZKind::factor1, {4, 8, 16}, 1.0, 0.01, 0.01, gp, p, p);
  REQUIRE(sweep.size() == 3);
  CHECK_THAT(sweep[0].slope, WithinAbs(-2.0, 0.1));
  CHECK(sweep[0].value > sweep[1].value);
  CHECK_THROWS_AS(cz_integral(CZKind::factor1, 0.0, 1.0, 0.01, 0.01, gp, p, p), input_error);
}
