#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "calculus.hpp"
#include "group.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace heis {

using FactorFn = std::function<cplx(const GroupPoint&)>;

// tensor rule on one factor: s axis and 2n x axes
struct FactorRule {
  int n = 1;
  Rule1D s;
  std::vector<Rule1D> x;
  std::vector<GroupPoint> nodes;
  std::vector<double> weights;

  FactorRule() = default;
  FactorRule(int n_, Rule1D s_, std::vector<Rule1D> x_) : n(n_), s(std::move(s_)), x(std::move(x_)) { expand(); }

  std::size_t size() const { return nodes.size(); }

  void expand() {
    if (static_cast<int>(x.size()) != 2 * n) throw input_error("FactorRule: need 2n x rules");
    nodes.clear();
    weights.clear();
    std::vector<std::size_t> idx(2 * n + 1, 0);
    std::size_t total = s.size();
    for (auto& r : x) total *= r.size();
    nodes.reserve(total);
    weights.reserve(total);
    for (std::size_t f = 0; f < total; ++f) {
      std::size_t rem = f;
      for (int a = 2 * n; a >= 0; --a) {
        std::size_t m = a == 0 ? s.size() : x[a - 1].size();
        idx[a] = rem % m;
        rem /= m;
      }
      GroupPoint g(n);
      g.s = s.x[idx[0]];
      double w = s.w[idx[0]];
      for (int j = 0; j < 2 * n; ++j) {
        g.set_x(j, x[j].x[idx[j + 1]]);
        w *= x[j].w[idx[j + 1]];
      }
      nodes.push_back(g);
      weights.push_back(w);
    }
  }

  // box [-R^2, R^2] x [-R, R]^2n, composite Gauss-Legendre
  static FactorRule box(int n, double R, int panels, int order, double s_scale = 1.0) {
    std::vector<Rule1D> xs(2 * n, composite_gl(-R, R, panels, order));
    return FactorRule(n, composite_gl(-s_scale * R * R, s_scale * R * R, panels, order), xs);
  }
  // sinh-mapped axes for algebraically decaying integrands
  static FactorRule sinh_map(int n, double Ls, double Lx, double U, int panels, int order) {
    std::vector<Rule1D> xs(2 * n, sinh_rule(0.0, Lx, U, panels, order));
    return FactorRule(n, sinh_rule(0.0, Ls, U, panels, order), xs);
  }
};

struct QuadratureSpec {
  FactorRule f1, f2;
  double truncation1 = 0, truncation2 = 0;  // informational radii
  std::vector<ProductPoint> points;
  double stability_tol = 0;  // > 0: compare against a coarser rule
  const FactorRule& factor(int a) const { return a == 0 ? f1 : f2; }
  void validate() const {
    double m1 = 0, m2 = 0;
    for (auto& p : points) {
      m1 = std::max(m1, norm(p.g1));
      m2 = std::max(m2, norm(p.g2));
    }
    if (truncation1 < 4 * m1 || truncation2 < 4 * m2)
      throw input_error("QuadratureSpec: truncation radius must be >= 4 x max evaluation-point norm");
  }
};

// int k(y) f(g y^{-1}) dy over rule nodes, k given at nodes
inline cplx factor_convolve(const std::vector<cplx>& k_at_nodes, const FactorFn& f, const GroupPoint& g,
                            const FactorRule& r) {
  std::vector<cplx> terms(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    cplx kv = k_at_nodes[i];
    terms[i] = kv == cplx{} ? cplx{} : r.weights[i] * kv * f(multiply(g, inverse(r.nodes[i])));
  }
  return pairwise_sum(terms);
}

inline std::vector<cplx> sample_nodes(const FactorFn& u, const FactorRule& r) {
  std::vector<cplx> v(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) v[i] = u(r.nodes[i]);
  return v;
}

// (u * v)(g) = int u(h^{-1} g) v(h) dh, rule centered at the identity for the u variable
inline cplx convolve_at(const FactorFn& u, const FactorFn& v, const GroupPoint& g, const FactorRule& r) {
  return factor_convolve(sample_nodes(u, r), v, g, r);
}

// separable data on H1 x H2: sum of coef * f1 (x) f2
struct SeparableFunction {
  struct Term {
    cplx coef = 1;
    FactorFn f1, f2;
  };
  std::vector<Term> terms;
  cplx operator()(const ProductPoint& p) const {
    cplx acc = 0;
    for (auto& t : terms) acc += t.coef * t.f1(p.g1) * t.f2(p.g2);
    return acc;
  }
};

namespace detail {

inline FactorRule coarsen(const FactorRule& r) {
  auto half = [](const Rule1D& a) {
    // reuse the node span with half the nodes
    double lo = a.x.front(), hi = a.x.back();
    int m = std::max<int>(4, static_cast<int>(a.size() / 2));
    double pad = (hi - lo) / (2.0 * a.size());
    return composite_gl(lo - pad, hi + pad, 1, m);
  };
  std::vector<Rule1D> xs;
  for (auto& a : r.x) xs.push_back(half(a));
  return FactorRule(r.n, half(r.s), xs);
}

template <class K>
std::vector<cplx> kernel_nodes(const FactorRule& r, K&& k) {
  std::vector<cplx> v(r.size());
  parallel_for(r.size(), [&](std::size_t i) { v[i] = k(r.nodes[i]); });
  return v;
}

inline void check_stable(const std::vector<cplx>& fine, const std::vector<cplx>& coarse, double tol) {
  for (std::size_t i = 0; i < fine.size(); ++i) {
    double scale = std::max(std::abs(fine[i]), 1e-300);
    if (std::abs(fine[i] - coarse[i]) > tol * scale)
      throw numerical_error("quadrature refinement disagreement at point " + std::to_string(i) +
                            ": rel diff " + std::to_string(std::abs(fine[i] - coarse[i]) / scale));
  }
}

// kernel k_alpha sampled once per rule, then all points in parallel
template <class K1, class K2>
std::vector<cplx> separable_apply_many(const SeparableFunction& b, const std::vector<ProductPoint>& pts,
                                       const QuadratureSpec& q, K1&& k1, K2&& k2) {
  auto run = [&](const FactorRule& r1, const FactorRule& r2) {
    auto n1 = kernel_nodes(r1, k1);
    auto n2 = kernel_nodes(r2, k2);
    return parallel_map<cplx>(pts.size(), [&](std::size_t i) {
      cplx acc = 0;
      for (auto& t : b.terms)
        acc += t.coef * factor_convolve(n1, t.f1, pts[i].g1, r1) * factor_convolve(n2, t.f2, pts[i].g2, r2);
      return acc;
    });
  };
  auto fine = run(q.f1, q.f2);
  if (q.stability_tol > 0) check_stable(fine, run(coarsen(q.f1), coarsen(q.f2)), q.stability_tol);
  return fine;
}

}  // namespace detail

// int h_t(h^{-1} g) b(h) dh at each point, h_t = h_{t1} (x) h_{t2}
inline std::vector<cplx> heat_apply_many(const SeparableFunction& b, double t1, double t2,
                                         const std::vector<ProductPoint>& pts, const QuadratureSpec& q,
                                         const HeatKernel& k1, const HeatKernel& k2) {
  if (!(t1 > 0) || !(t2 > 0)) throw input_error("heat_apply: t must be positive");
  return detail::separable_apply_many(
      b, pts, q, [&](const GroupPoint& y) { return cplx(k1.eval(t1, y)); },
      [&](const GroupPoint& y) { return cplx(k2.eval(t2, y)); });
}

inline cplx heat_apply(const SeparableFunction& b, double t1, double t2, const ProductPoint& g, const QuadratureSpec& q,
                       const HeatKernel& k1, const HeatKernel& k2) {
  return heat_apply_many(b, t1, t2, {g}, q, k1, k2)[0];
}

// full product quadrature for non-separable data
inline cplx heat_apply(const std::function<cplx(const ProductPoint&)>& b, double t1, double t2, const ProductPoint& g,
                       const QuadratureSpec& q, const HeatKernel& k1, const HeatKernel& k2) {
  if (!(t1 > 0) || !(t2 > 0)) throw input_error("heat_apply: t must be positive");
  auto run = [&](const FactorRule& r1, const FactorRule& r2) {
    auto n1 = detail::kernel_nodes(r1, [&](const GroupPoint& y) { return cplx(k1.eval(t1, y)); });
    auto n2 = detail::kernel_nodes(r2, [&](const GroupPoint& y) { return cplx(k2.eval(t2, y)); });
    std::vector<cplx> rows(r1.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
      GroupPoint a = multiply(g.g1, inverse(r1.nodes[i]));
      std::vector<cplx> cols(r2.size());
      for (std::size_t j = 0; j < r2.size(); ++j)
        cols[j] = r2.weights[j] * n2[j] * b({a, multiply(g.g2, inverse(r2.nodes[j]))});
      rows[i] = r1.weights[i] * n1[i] * pairwise_sum(cols);
    }
    return std::vector<cplx>{pairwise_sum(rows)};
  };
  auto fine = run(q.f1, q.f2);
  if (q.stability_tol > 0) detail::check_stable(fine, run(detail::coarsen(q.f1), detail::coarsen(q.f2)), q.stability_tol);
  return fine[0];
}

// int S((t, g), g') b(g') dg' at each point
inline std::vector<cplx> szego_project_many(const SeparableFunction& b, double t1, double t2,
                                            const std::vector<ProductPoint>& pts, const QuadratureSpec& q,
                                            const SzegoParams& p1, const SzegoParams& p2) {
  if (!(t1 > 0) || !(t2 > 0)) throw input_error("szego_project: t must be positive");
  return detail::separable_apply_many(
      b, pts, q, [&](const GroupPoint& y) { return szego_factor(t1, y, p1); },
      [&](const GroupPoint& y) { return szego_factor(t2, y, p2); });
}

inline cplx szego_project(const SeparableFunction& b, double t1, double t2, const ProductPoint& g,
                          const QuadratureSpec& q, const SzegoParams& p1, const SzegoParams& p2) {
  return szego_project_many(b, t1, t2, {g}, q, p1, p2)[0];
}

// ----------------------------------------------- non-tangential maximal

struct NonTangentialRegion {
  ProductPoint g;
  std::vector<std::pair<double, double>> t_grid;
  int samples = 4;  // lattice points per axis of the unit ball; doubling nests

  // points of the unit Heisenberg ball on a nested lattice
  static std::vector<GroupPoint> unit_ball(int n, int m) {
    std::vector<GroupPoint> pts;
    std::vector<int> idx(2 * n + 1, 0);
    const int side = m + 1;
    std::size_t total = 1;
    for (int a = 0; a < 2 * n + 1; ++a) total *= side;
    for (std::size_t f = 0; f < total; ++f) {
      std::size_t rem = f;
      GroupPoint k(n);
      for (int a = 2 * n; a >= 0; --a) {
        double c = -1.0 + 2.0 * static_cast<double>(rem % side) / m;
        rem /= side;
        if (a == 0) k.s = c;
        else k.set_x(a - 1, c);
      }
      if (norm(k) < 1.0) pts.push_back(k);
    }
    return pts;
  }

  // sample (t, h) with |h^{-1} g|^2 < t per factor
  struct Sample {
    double t1, t2;
    ProductPoint h;
  };
  std::vector<Sample> sample_points() const {
    std::vector<Sample> out;
    auto b1 = unit_ball(g.g1.n, samples);
    auto b2 = unit_ball(g.g2.n, samples);
    for (auto [t1, t2] : t_grid)
      for (auto& k1 : b1)
        for (auto& k2 : b2) {
          // h = g k, so h^{-1} g = k^{-1}
          out.push_back({t1, t2, {multiply(g.g1, dilate(std::sqrt(t1), k1)), multiply(g.g2, dilate(std::sqrt(t2), k2))}});
        }
    return out;
  }
};

// sup over sampled Gamma_g of |heat extension|; a lower bound of u*(g)
inline double maximal_function(const SeparableFunction& b, const NonTangentialRegion& region, const QuadratureSpec& q,
                               const HeatKernel& k1, const HeatKernel& k2) {
  auto samples = region.sample_points();
  double m = 0;
  for (auto [t1, t2] : region.t_grid) {
    std::vector<ProductPoint> pts;
    for (auto& s : samples)
      if (s.t1 == t1 && s.t2 == t2) pts.push_back(s.h);
    for (cplx v : heat_apply_many(b, t1, t2, pts, q, k1, k2)) m = std::max(m, std::abs(v));
  }
  return m;
}

// ------------------------------------------------------------ H^p norm

// f(t, g) = f1(t1, g1) f2(t2, g2)
struct SeparableUFunction {
  std::function<cplx(double, const GroupPoint&)> f1, f2;
};

// max over t-grid of (int |f(t,.)|^p)^{1/p}; truncated, so a lower bound
inline double hp_norm_estimate(const SeparableUFunction& f, double p, const std::vector<std::pair<double, double>>& tg,
                               const QuadratureSpec& q) {
  if (!(p > 0)) throw input_error("hp_norm_estimate: p > 0");
  double best = 0;
  for (auto [t1, t2] : tg) {
    auto integ = [&](const FactorRule& r, double t, const std::function<cplx(double, const GroupPoint&)>& fa) {
      std::vector<double> v(r.size());
      parallel_for(r.size(), [&](std::size_t i) { v[i] = r.weights[i] * std::pow(std::abs(fa(t, r.nodes[i])), p); });
      return pairwise_sum(v);
    };
    double I = integ(q.f1, t1, f.f1) * integ(q.f2, t2, f.f2);
    best = std::max(best, std::pow(I, 1.0 / p));
  }
  return best;
}

// generic evaluator version, full product quadrature
inline double hp_norm_estimate(const Evaluator& f, double p, const std::vector<std::pair<double, double>>& tg,
                               const QuadratureSpec& q) {
  if (!(p > 0)) throw input_error("hp_norm_estimate: p > 0");
  double best = 0;
  for (auto [t1, t2] : tg) {
    std::vector<double> rows(q.f1.size());
    parallel_for(q.f1.size(), [&](std::size_t i) {
      std::vector<double> cols(q.f2.size());
      for (std::size_t j = 0; j < q.f2.size(); ++j)
        cols[j] = q.f2.weights[j] * std::pow(std::abs(f.eval({t1, t2, q.f1.nodes[i], q.f2.nodes[j]})), p);
      rows[i] = q.f1.weights[i] * pairwise_sum(cols);
    });
    best = std::max(best, std::pow(pairwise_sum(rows), 1.0 / p));
  }
  return best;
}

// ---------------------------------------------------- CZ estimates

enum class CZKind { factor1, factor2, double_ };

struct CZReport {
  double gamma = 0;   // gamma_1 (and gamma_2 for double)
  double gamma2 = 0;
  double tau = 0;
  CZKind kind = CZKind::factor1;
  double value = 0;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double slope2 = std::numeric_limits<double>::quiet_NaN();
};

// polar rule outside the ball |h| > R: s = r^2 sin(phi), |z|^2 = r^2 cos(phi), r = R / v
struct PolarExterior {
  struct Node {
    double s, r2z, w;
  };
  std::vector<Node> nodes;
  PolarExterior(int n, double R, int panels, int order) {
    Rule1D v = composite_gl(0.0, 1.0, panels, order);
    Rule1D ph = composite_gl(-std::numbers::pi / 2, std::numbers::pi / 2, panels, order);
    double fact = 1;
    for (int k = 2; k < n; ++k) fact *= k;
    const double cst = 2.0 * std::pow(std::numbers::pi, n) / fact;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double r = R / v.x[i];
      double jac = R / (v.x[i] * v.x[i]);
      for (std::size_t j = 0; j < ph.size(); ++j) {
        double c = std::cos(ph.x[j]);
        double w = v.w[i] * jac * ph.w[j] * cst * std::pow(r, 2 * n + 1) * std::pow(c, n - 1);
        nodes.push_back({r * r * std::sin(ph.x[j]), r * r * c, w});
      }
    }
  }
  // a representative group point at node: z along the first real axis
  GroupPoint point(int n, const Node& nd) const {
    GroupPoint h(n);
    h.s = nd.s;
    h.z[0] = cplx(std::sqrt(std::max(0.0, nd.r2z)), 0);
    return h;
  }
};

struct CZQuadrature {
  int panels = 8;
  int order = 16;
};

// factor kinds: int_{|h| > gamma tau} |S(t,h) - S(t + tau^2, h)| dh
// double kind: int int |K - K_{tau^2,0} - K_{0,tau^2} + K_{tau^2,tau^2}| over the product exterior
inline CZReport cz_integral(CZKind kind, double gamma, double tau, double t1, double t2, const ProductPoint& gp,
                            const SzegoParams& p1, const SzegoParams& p2, CZQuadrature cq = {},
                            double gamma2 = 0, double tau2 = 0) {
  if (!(gamma > 0) || !(tau > 0)) throw input_error("cz_integral: gamma, tau > 0");
  CZReport rep;
  rep.gamma = gamma;
  rep.tau = tau;
  rep.kind = kind;
  if (kind != CZKind::double_) {
    const SzegoParams& p = kind == CZKind::factor1 ? p1 : p2;
    double t = kind == CZKind::factor1 ? t1 : t2;
    PolarExterior pe(p.n, gamma * tau, cq.panels, cq.order);
    std::vector<double> terms(pe.nodes.size());
    parallel_for(pe.nodes.size(), [&](std::size_t i) {
      GroupPoint h = pe.point(p.n, pe.nodes[i]);
      terms[i] = pe.nodes[i].w * std::abs(szego_factor(t, h, p) - szego_factor(t + tau * tau, h, p));
    });
    rep.value = pairwise_sum(terms);
    if (!std::isfinite(rep.value)) throw numerical_error("cz_integral: non-finite value");
    return rep;
  }
  if (gamma2 <= 0) gamma2 = gamma;
  if (tau2 <= 0) tau2 = tau;
  rep.gamma2 = gamma2;
  PolarExterior e1(p1.n, gamma * tau, cq.panels, cq.order), e2(p2.n, gamma2 * tau2, cq.panels, cq.order);
  // g = g' h per factor, K evaluated through szego_product
  struct PV {
    GroupPoint g;
    double w;
  };
  auto pts = [&](const PolarExterior& e, int n, const GroupPoint& base) {
    std::vector<PV> v;
    for (auto& nd : e.nodes) v.push_back({multiply(base, e.point(n, nd)), nd.w});
    return v;
  };
  auto v1 = pts(e1, p1.n, gp.g1);
  auto v2 = pts(e2, p2.n, gp.g2);
  // K(a, b) at (g, g') is S_1(t1 + a, g1'^{-1} g1) S_2(t2 + b, g2'^{-1} g2); factor values cached per node
  std::vector<cplx> k1a(v1.size()), k1b(v1.size()), k2a(v2.size()), k2b(v2.size());
  for (std::size_t i = 0; i < v1.size(); ++i) {
    GroupPoint h = multiply(inverse(gp.g1), v1[i].g);
    k1a[i] = szego_factor(t1, h, p1);
    k1b[i] = szego_factor(t1 + tau * tau, h, p1);
  }
  for (std::size_t j = 0; j < v2.size(); ++j) {
    GroupPoint h = multiply(inverse(gp.g2), v2[j].g);
    k2a[j] = szego_factor(t2, h, p2);
    k2b[j] = szego_factor(t2 + tau2 * tau2, h, p2);
  }
  std::vector<double> rows(v1.size());
  parallel_for(v1.size(), [&](std::size_t i) {
    std::vector<double> cols(v2.size());
    for (std::size_t j = 0; j < v2.size(); ++j) {
      cplx K = k1a[i] * k2a[j], K10 = k1b[i] * k2a[j], K01 = k1a[i] * k2b[j], K11 = k1b[i] * k2b[j];
      cols[j] = v2[j].w * std::abs(K - K10 - K01 + K11);
    }
    rows[i] = v1[i].w * pairwise_sum(cols);
  });
  rep.value = pairwise_sum(rows);
  if (!std::isfinite(rep.value)) throw numerical_error("cz_integral: non-finite value");
  return rep;
}

// least-squares slope of log y against log x
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  if (m < 2) throw input_error("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// gamma sweep; double kind sweeps gamma_1 with gamma_2 fixed, then the reverse
inline std::vector<CZReport> cz_sweep(CZKind kind, const std::vector<double>& gammas, double tau, double t1, double t2,
                                      const ProductPoint& gp, const SzegoParams& p1, const SzegoParams& p2,
                                      CZQuadrature cq = {}) {
  std::vector<CZReport> out;
  std::vector<double> vals;
  if (kind != CZKind::double_) {
    for (double g : gammas) {
      out.push_back(cz_integral(kind, g, tau, t1, t2, gp, p1, p2, cq));
      vals.push_back(out.back().value);
    }
    double sl = loglog_slope(gammas, vals);
    for (auto& r : out) r.slope = sl;
    return out;
  }
  const double fixed = gammas.front();
  std::vector<double> va, vb;
  for (double g : gammas) {
    out.push_back(cz_integral(kind, g, tau, t1, t2, gp, p1, p2, cq, fixed, tau));
    va.push_back(out.back().value);
  }
  for (double g : gammas) {
    out.push_back(cz_integral(kind, fixed, tau, t1, t2, gp, p1, p2, cq, g, tau));
    vb.push_back(out.back().value);
  }
  double s1 = loglog_slope(gammas, va), s2 = loglog_slope(gammas, vb);
  for (auto& r : out) {
    r.slope = s1;
    r.slope2 = s2;
  }
  return out;
}

}  // namespace heis
