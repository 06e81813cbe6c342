#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "dyadic.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "polynomial.hpp"
#include "quadrature.hpp"

namespace heis {

// b = weight * phi_1 (x) phi_2 attached to a maximal rectangle R
struct AtomPiece {
  DyadicRectangle R;
  FactorBump b1, b2;
  double weight = 1.0;
  std::vector<PolyTable> d1, d2;  // Delta^sigma phi, sigma = 0..N

  const FactorBump& bump(int a) const { return a == 0 ? b1 : b2; }
  const std::vector<PolyTable>& powers(int a) const { return a == 0 ? d1 : d2; }

  // Delta^sigma phi on factor a at g
  double factor_value(int a, int sigma, const GroupPoint& g) const {
    double u[Poly::kMaxVars];
    bump(a).local(g, u);
    if (!bump(a).inside(u)) return 0.0;
    return powers(a)[sigma].eval(u);
  }
};

struct Atom {
  int N = 2;
  OpenSetModel omega;
  double omega_measure = 0;
  std::vector<DyadicRectangle> maximal;
  std::vector<AtomPiece> pieces;
  double scalar = 1.0;

  // a = scalar * sum (Delta_1^N (x) Delta_2^N) b_R
  double eval(const ProductPoint& g) const {
    double acc = 0;
    for (auto& p : pieces) {
      double v = p.factor_value(0, N, g.g1);
      if (v == 0) continue;
      acc += p.weight * v * p.factor_value(1, N, g.g2);
    }
    return scalar * acc;
  }
};

namespace detail {
inline std::vector<PolyTable> sublaplacian_powers(const FactorBump& b, int N) {
  std::vector<PolyTable> out;
  Poly p = b.base();
  for (int s = 0; s <= N; ++s) {
    out.emplace_back(p);
    if (s < N) p = b.apply_sublaplacian(p);
  }
  return out;
}

inline FactorBump bump_for(const DyadicCube& c, const DyadicParams& p, double shrink) {
  FactorBump b;
  b.n = c.n;
  CoordBox box = c.box(p);
  for (int a = 0; a < c.dim(); ++a) {
    b.center[a] = 0.5 * (box.lo[a] + box.hi[a]);
    b.half[a] = 0.5 * shrink * (box.hi[a] - box.lo[a]);
  }
  return b;
}

inline AtomPiece make_piece(const DyadicRectangle& R, const FactorBump& b1, const FactorBump& b2, double w, int N) {
  AtomPiece pc;
  pc.R = R;
  pc.b1 = b1;
  pc.b2 = b2;
  pc.weight = w;
  pc.d1 = sublaplacian_powers(b1, N);
  pc.d2 = sublaplacian_powers(b2, N);
  return pc;
}
}  // namespace detail

struct AtomNorms {
  double l2 = 0;                              // ||a||_2
  std::vector<std::vector<double>> weighted;  // [sigma1][sigma2] weighted sums
};

inline AtomNorms atom_norms(const Atom& A) {
  const int P = static_cast<int>(A.pieces.size());
  const int N = A.N;
  // gram[a][sigma][p][q]
  std::vector<std::vector<std::vector<std::vector<double>>>> gram(
      2, std::vector<std::vector<std::vector<double>>>(N + 1, std::vector<std::vector<double>>(P, std::vector<double>(P))));
  std::vector<std::array<int, 4>> jobs;
  for (int a = 0; a < 2; ++a)
    for (int s = 0; s <= N; ++s)
      for (int p = 0; p < P; ++p)
        for (int q = p; q < P; ++q) jobs.push_back({a, s, p, q});
  parallel_for(jobs.size(), [&](std::size_t k) {
    auto [a, s, p, q] = jobs[k];
    double v = bump_inner(A.pieces[p].bump(a), A.pieces[p].powers(a)[s], A.pieces[q].bump(a), A.pieces[q].powers(a)[s]);
    gram[a][s][p][q] = v;
    gram[a][s][q][p] = v;
  });
  AtomNorms r;
  const double c2 = A.scalar * A.scalar;
  std::vector<double> terms;
  for (int p = 0; p < P; ++p)
    for (int q = 0; q < P; ++q)
      terms.push_back(A.pieces[p].weight * A.pieces[q].weight * gram[0][N][p][q] * gram[1][N][p][q]);
  r.l2 = std::sqrt(std::max(0.0, c2 * pairwise_sum(terms)));
  r.weighted.assign(N + 1, std::vector<double>(N + 1, 0.0));
  for (int s1 = 0; s1 <= N; ++s1)
    for (int s2 = 0; s2 <= N; ++s2) {
      terms.clear();
      for (int p = 0; p < P; ++p)
        for (int q = 0; q < P; ++q) {
          if (!(A.pieces[p].R == A.pieces[q].R)) continue;
          const auto& R = A.pieces[p].R;
          double sc = std::pow(R.I.ell(), 4.0 * s1 - 4.0 * N) * std::pow(R.J.ell(), 4.0 * s2 - 4.0 * N);
          terms.push_back(sc * A.pieces[p].weight * A.pieces[q].weight * gram[0][s1][p][q] * gram[1][s2][p][q]);
        }
      r.weighted[s1][s2] = c2 * pairwise_sum(terms);
    }
  return r;
}

// largest scalar meeting ||a|| <= |Omega|^-1/2 and every weighted sum <= |Omega|^-1
inline void normalize_atom(Atom& A) {
  A.scalar = 1.0;
  AtomNorms nm = atom_norms(A);
  double lam = nm.l2 > 0 ? 1.0 / (std::sqrt(A.omega_measure) * nm.l2) : std::numeric_limits<double>::infinity();
  for (auto& row : nm.weighted)
    for (double v : row)
      if (v > 0) lam = std::min(lam, 1.0 / std::sqrt(A.omega_measure * v));
  if (!std::isfinite(lam)) throw numerical_error("normalize_atom: degenerate atom");
  A.scalar = lam;
}

struct AtomOptions {
  double shrink = 0.95;  // bump support relative to the cube box
  double weight_spread = 0.5;
};

inline Atom build_atom(const OpenSetModel& om, int N, std::uint64_t seed, const AtomOptions& opt = {}) {
  const int nmax = std::max(om.p1.n, om.p2.n);
  if (2 * N <= nmax + 1) throw input_error("build_atom: N must exceed (n + 1) / 2");
  if (N > 3) throw input_error("build_atom: N <= 3 supported");
  Atom A;
  A.N = N;
  A.omega = om;
  A.omega_measure = om.measure();
  auto m = maximal_rectangles(om, Direction::both);
  if (m.empty()) throw input_error("build_atom: m(Omega) is empty");
  A.maximal.assign(m.begin(), m.end());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(1.0 - 0.5 * opt.weight_spread, 1.0 + 0.5 * opt.weight_spread);
  for (auto& R : A.maximal) {
    double w = U(rng);
    A.pieces.push_back(detail::make_piece(R, detail::bump_for(R.I, om.p1, opt.shrink),
                                          detail::bump_for(R.J, om.p2, opt.shrink), w, N));
  }
  normalize_atom(A);
  AtomNorms nm = atom_norms(A);
  if (nm.l2 < 0.1 / std::sqrt(A.omega_measure)) throw numerical_error("build_atom: normalized atom is too small");
  return A;
}

// --------------------------------------------------------------- validation

struct AtomCheck {
  std::string name;
  double value = 0;
  double bound = 0;
  bool pass = false;
};

struct AtomReport {
  std::vector<AtomCheck> checks;
  const AtomCheck& get(const std::string& n) const {
    for (auto& c : checks)
      if (c.name == n) return c;
    throw input_error("AtomReport: no check " + n);
  }
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const AtomCheck& c) { return c.pass; });
  }
  std::vector<std::string> failed() const {
    std::vector<std::string> f;
    for (auto& c : checks)
      if (!c.pass) f.push_back(c.name);
    return f;
  }
};

struct ValidateOptions {
  double tol = 1e-2;       // relative, grid sub-Laplacian vs closed form
  int grid_steps = 41;     // per axis for the grid check
  int support_samples = 2000;
  std::uint64_t seed = 1;
  double slack = 1e-9;     // relative slack on the norm conditions
};

// max |grid Delta^N phi - closed form| / max |closed form| over valid nodes
inline double grid_decomposition_error(const AtomPiece& pc, int a, int N, int steps) {
  const FactorBump& b = pc.bump(a);
  Axis s{b.center[0] - 1.25 * b.half[0], b.center[0] + 1.25 * b.half[0], steps};
  std::vector<Axis> xs;
  for (int j = 0; j < 2 * b.n; ++j) xs.push_back({b.center[j + 1] - 1.25 * b.half[j + 1], b.center[j + 1] + 1.25 * b.half[j + 1], steps});
  FactorGrid grid(b.n, s, xs);
  GridFunction u = GridFunction::sample(grid, [&](const GroupPoint& g) { return cplx(pc.factor_value(a, 0, g), 0); });
  for (int k = 0; k < N; ++k) u = apply_sublaplacian(u, 4, LaplacianMode::expanded);
  // the bump is only C^4 across its edge; skip nodes whose composed stencil straddles it
  std::array<double, Poly::kMaxVars> reach{};
  reach[0] = 2.0 * N * s.spacing() / b.half[0];
  for (int j = 0; j < 2 * b.n; ++j) reach[j + 1] = 2.0 * N * xs[j].spacing() / b.half[j + 1];
  double num = 0, den = 0;
  std::array<double, Poly::kMaxVars> loc{};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    GroupPoint g = grid.point(i);
    double exact = pc.factor_value(a, N, g);
    den = std::max(den, std::abs(exact));
    b.local(g, loc.data());
    bool smooth = true;
    for (int k = 0; k < b.dim(); ++k) smooth = smooth && std::abs(std::abs(loc[k]) - 1.0) > reach[k];
    if (u.valid[i] && smooth) num = std::max(num, std::abs(u.values[i].real() - exact));
  }
  return den > 0 ? num / den : num;
}

inline AtomReport validate_atom(const Atom& A, const ValidateOptions& opt = {}) {
  AtomReport rep;
  const DyadicParams &p1 = A.omega.p1, &p2 = A.omega.p2;
  const bool zero = A.scalar == 0;

  // (1) and (ii): supp b_R in cbar R (exact, by corners) and supp a in Omega (sampled)
  {
    long violations = 0;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (auto& pc : A.pieces) {
      if (zero || pc.weight == 0) continue;
      for (int a = 0; a < 2; ++a) {
        const FactorBump& b = pc.bump(a);
        const DyadicCube& c = a == 0 ? pc.R.I : pc.R.J;
        const DyadicParams& pp = a == 0 ? p1 : p2;
        CoordBox sb = b.support();
        for (int corner = 0; corner < (1 << b.dim()); ++corner) {
          GroupPoint g(b.n);
          g.s = (corner & 1) ? sb.hi[0] : sb.lo[0];
          for (int j = 0; j < 2 * b.n; ++j) g.set_x(j, (corner >> (j + 1)) & 1 ? sb.hi[j + 1] : sb.lo[j + 1]);
          if (!c.dilate_contains(pp.cbar, g, pp)) ++violations;
        }
      }
      for (int k = 0; k < opt.support_samples; ++k) {
        ProductPoint q{GroupPoint(pc.b1.n), GroupPoint(pc.b2.n)};
        for (int a = 0; a < 2; ++a) {
          const FactorBump& b = pc.bump(a);
          GroupPoint& g = a == 0 ? q.g1 : q.g2;
          g.s = b.center[0] + b.half[0] * U(rng);
          for (int j = 0; j < 2 * b.n; ++j) g.set_x(j, b.center[j + 1] + b.half[j + 1] * U(rng));
        }
        if (A.eval(q) != 0 && !A.omega.contains(q)) ++violations;
      }
    }
    rep.checks.push_back({"support", static_cast<double>(violations), 0.0, violations == 0});
  }

  // (2)(i): closed-form Delta^N against grid application of the sub-Laplacian
  {
    double err = 0;
    for (auto& pc : A.pieces)
      for (int a = 0; a < 2; ++a) err = std::max(err, grid_decomposition_error(pc, a, A.N, opt.grid_steps));
    rep.checks.push_back({"decomposition", err, opt.tol, err <= opt.tol});
  }

  // (iii): ||a|| <= |Omega|^-1/2 and the weighted sums <= |Omega|^-1
  AtomNorms nm = atom_norms(A);
  {
    double ratio = nm.l2 * std::sqrt(A.omega_measure);
    for (auto& row : nm.weighted)
      for (double v : row) ratio = std::max(ratio, std::sqrt(v * A.omega_measure));
    rep.checks.push_back({"condition_iii", ratio, 1.0, ratio <= 1.0 + opt.slack});
  }
  {
    double r = nm.l2 * std::sqrt(A.omega_measure);
    rep.checks.push_back({"nontrivial", r, 0.1, r >= 0.1});
  }
  return rep;
}

// per-sigma view of condition (iii) for reporting
inline std::vector<AtomCheck> atom_sigma_checks(const Atom& A, double slack = 1e-9) {
  AtomNorms nm = atom_norms(A);
  std::vector<AtomCheck> out;
  for (int s1 = 0; s1 <= A.N; ++s1)
    for (int s2 = 0; s2 <= A.N; ++s2) {
      double v = nm.weighted[s1][s2] * A.omega_measure;
      out.push_back({"sigma_" + std::to_string(s1) + std::to_string(s2), v, 1.0, v <= 1.0 + slack});
    }
  return out;
}

// ----------------------------------------------------- negative controls

// a tiny copy of one bump far along the centre, outside cbar R and Omega
inline Atom control_far_support(const Atom& A, double eps = 1e-3) {
  Atom B = A;
  AtomPiece pc = A.pieces.front();
  double side = pc.R.I.box(A.omega.p1).hi[0] - pc.R.I.box(A.omega.p1).lo[0];
  pc.b1.center[0] += 1e4 * side;
  pc.weight *= eps;
  B.pieces.push_back(detail::make_piece(pc.R, pc.b1, pc.b2, pc.weight, A.N));
  normalize_atom(B);
  return B;
}
inline Atom control_scaled(const Atom& A, double factor = 10.0) {
  Atom B = A;
  B.scalar *= factor;
  return B;
}
inline Atom control_zero(const Atom& A) {
  Atom B = A;
  B.scalar = 0;
  return B;
}

// ------------------------------------------------ projection experiment

// single rectangles at levels 0, 1, 2 and an L-shape (three rectangles) at levels 0, 1
struct CorpusEntry {
  std::string name;
  int level = 0;
  bool single = true;
  OpenSetModel omega;
};

inline std::vector<CorpusEntry> standard_atom_corpus(const DyadicParams& p1, const DyadicParams& p2) {
  auto cube = [](int f, const DyadicParams& p, int k, long long x1) {
    DyadicCube c;
    c.factor = f;
    c.n = p.n;
    c.level = k;
    c.idx[1] = x1;
    return c;
  };
  std::vector<CorpusEntry> out;
  for (int k : {0, 1, 2})
    out.push_back({"rect_k" + std::to_string(k), k, true, OpenSetModel({{cube(1, p1, k, 0), cube(2, p2, k, 0)}}, p1, p2)});
  for (int k : {0, 1}) {
    std::vector<DyadicRectangle> rs{{cube(1, p1, k, 0), cube(2, p2, k, 0)},
                                    {cube(1, p1, k, 1), cube(2, p2, k, 0)},
                                    {cube(1, p1, k, 0), cube(2, p2, k, 1)}};
    out.push_back({"lshape_k" + std::to_string(k), k, false, OpenSetModel(rs, p1, p2)});
  }
  return out;
}

struct ProjectionSpec {
  std::vector<double> t_multipliers{0.0625, 0.25, 1.0};  // t_a = m * l_a^2
  int outer_panels = 2, outer_order = 8;
  double U = 4.0;
  int inner_x_panels = 3, inner_order = 8;
  double stability_tol = 0;  // > 0: recheck the first t with doubled x panels
};

struct ProjectionResult {
  double value = 0;    // max over the t-grid of the truncated L1 norm
  double inside = 0;   // part over the union of R* at the maximizing t
  double outside = 0;  // part over its complement
  std::vector<double> per_t;
};

namespace detail {
// x-nodes of a bump with the Delta^N phi profile along s collapsed to a polynomial in u_s
struct InnerNodes {
  double cs = 0, hs = 1;
  std::vector<GroupPoint> z;
  std::vector<std::vector<double>> q;  // weighted coefficients in u_s
};

inline InnerNodes inner_nodes(const AtomPiece& pc, int a, int N, int px, int order) {
  const FactorBump& b = pc.bump(a);
  const PolyTable& P = pc.powers(a)[N];
  const int n = b.n;
  std::vector<Rule1D> rx;
  for (int j = 0; j < 2 * n; ++j) rx.push_back(composite_gl(-1.0, 1.0, px, order));
  InnerNodes out;
  out.cs = b.center[0];
  out.hs = b.half[0];
  const int ds = P.maxdeg[0];
  std::size_t m = rx[0].size(), total = 1;
  for (int j = 0; j < 2 * n; ++j) total *= m;
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t rem = f;
    double u[Poly::kMaxVars] = {};
    double w = 1;
    for (int j = 2 * n - 1; j >= 0; --j) {
      std::size_t i = rem % m;
      rem /= m;
      u[j + 1] = rx[j].x[i];
      w *= rx[j].w[i] * b.half[j + 1];
    }
    std::vector<double> q(ds + 1, 0.0);
    for (std::size_t t = 0; t < P.coef.size(); ++t) {
      double v = P.coef[t];
      for (int k = 1; k < b.dim(); ++k)
        for (int e = 0; e < P.exps[t][k]; ++e) v *= u[k];
      q[P.exps[t][0]] += v;
    }
    for (double& c : q) c *= w;
    GroupPoint g(n);
    for (int j = 0; j < 2 * n; ++j) g.set_x(j, b.center[j + 1] + b.half[j + 1] * u[j + 1]);
    out.z.push_back(g);
    out.q.push_back(std::move(q));
  }
  return out;
}

// int_{-1}^{1} q(u) / (u - u0)^m du, Im u0 > 0
inline cplx rational_moment(const std::vector<double>& q, cplx u0, int m) {
  double re = std::abs(u0.real()), dist = re <= 1 ? u0.imag() : std::hypot(re - 1, u0.imag());
  const int d = static_cast<int>(q.size()) - 1;
  if (dist >= 0.5) {
    const Rule1D& g = gauss_legendre(24);
    cplx acc = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double x = g.x[i], v = q[d];
      for (int k = d - 1; k >= 0; --k) v = v * x + q[k];
      cplx den = 1;
      for (int e = 0; e < m; ++e) den *= (x - u0);
      acc += g.w[i] * v / den;
    }
    return acc;
  }
  // Taylor shift q(u) = sum beta_k (u - u0)^k, then integrate term by term
  std::vector<cplx> beta(q.begin(), q.end());
  for (int k = 0; k < d; ++k)
    for (int j = d - 1; j >= k; --j) beta[j] += u0 * beta[j + 1];
  cplx acc = 0, a = 1.0 - u0, b = -1.0 - u0;
  for (int k = 0; k <= d; ++k) {
    int e = k - m + 1;
    cplx T = e == 0 ? std::log(a) - std::log(b) : (std::pow(a, e) - std::pow(b, e)) / double(e);
    acc += beta[k] * T;
  }
  return acc;
}

// int S(t, h^-1 g) f(h) dh at each outer point
inline std::vector<cplx> factor_projection(const InnerNodes& in, double t, const std::vector<GroupPoint>& pts,
                                           const SzegoParams& sp) {
  std::vector<cplx> out(pts.size());
  const int n = sp.n, m = n + 1;
  cplx pre = sp.c * in.hs / std::pow(cplx(0, in.hs), m);
  parallel_for(pts.size(), [&](std::size_t i) {
    const GroupPoint& g = pts[i];
    std::vector<cplx> terms(in.z.size());
    for (std::size_t k = 0; k < in.z.size(); ++k) {
      const GroupPoint& h = in.z[k];
      double im = 0, r2 = 0;
      for (int j = 0; j < n; ++j) {
        im += (h.z[j] * std::conj(g.z[j])).imag();
        r2 += std::norm(g.z[j] - h.z[j]);
      }
      double sigma = g.s - 2.0 * im;
      cplx u0((sigma - in.cs) / in.hs, (r2 + t) / in.hs);
      terms[k] = rational_moment(in.q[k], u0, m);
    }
    out[i] = pre * pairwise_sum(terms);
  });
  return out;
}
}  // namespace detail

inline ProjectionResult atom_projection_experiment(const Atom& A, const ProjectionSpec& spec = {}) {
  ProjectionResult res;
  const int P = static_cast<int>(A.pieces.size());
  if (A.scalar == 0 || P == 0) {
    res.per_t.assign(spec.t_multipliers.size() * spec.t_multipliers.size(), 0.0);
    return res;
  }
  const DyadicParams* pp[2] = {&A.omega.p1, &A.omega.p2};
  // per factor reference scale and centre of the bounding box of the pieces
  double ell[2];
  GroupPoint centre[2] = {GroupPoint(pp[0]->n), GroupPoint(pp[1]->n)};
  for (int a = 0; a < 2; ++a) {
    ell[a] = 0;
    CoordBox bb = A.pieces[0].bump(a).support();
    for (auto& pc : A.pieces) {
      const DyadicCube& c = a == 0 ? pc.R.I : pc.R.J;
      ell[a] = std::max(ell[a], c.ell());
      CoordBox b = pc.bump(a).support();
      for (int k = 0; k < b.dim(); ++k) {
        bb.lo[k] = std::min(bb.lo[k], b.lo[k]);
        bb.hi[k] = std::max(bb.hi[k], b.hi[k]);
      }
    }
    centre[a].s = 0.5 * (bb.lo[0] + bb.hi[0]);
    for (int j = 0; j < 2 * pp[a]->n; ++j) centre[a].set_x(j, 0.5 * (bb.lo[j + 1] + bb.hi[j + 1]));
  }
  // outer rules, translated to the centre
  std::vector<GroupPoint> pts[2];
  std::vector<double> wts[2];
  for (int a = 0; a < 2; ++a) {
    double Lx = ell[a], Ls = pp[a]->s_aspect * ell[a] * ell[a] / 2;
    Rule1D rs = sinh_rule(0.0, Ls, spec.U, spec.outer_panels, spec.outer_order);
    Rule1D rx = sinh_rule(0.0, Lx, spec.U, spec.outer_panels, spec.outer_order);
    const int n = pp[a]->n;
    std::size_t m = rx.size(), total = rs.size();
    for (int j = 0; j < 2 * n; ++j) total *= m;
    for (std::size_t f = 0; f < total; ++f) {
      std::size_t rem = f;
      GroupPoint k(n);
      double w = 1;
      for (int j = 2 * n - 1; j >= 0; --j) {
        std::size_t i = rem % m;
        rem /= m;
        k.set_x(j, rx.x[i]);
        w *= rx.w[i];
      }
      k.s = rs.x[rem];
      w *= rs.w[rem];
      pts[a].push_back(multiply(centre[a], k));
      wts[a].push_back(w);
    }
  }
  // membership in the union of R*
  std::vector<std::vector<std::uint8_t>> in[2];
  for (auto& pc : A.pieces) {
    Enlargement e = enlarge(A.omega, pc.R);
    for (int a = 0; a < 2; ++a) {
      const DyadicCube& c = a == 0 ? e.Istar : e.Jstar;
      std::vector<std::uint8_t> mask(pts[a].size());
      for (std::size_t i = 0; i < pts[a].size(); ++i) mask[i] = c.dilate_contains(e.cbreve, pts[a][i], *pp[a]);
      in[a].push_back(std::move(mask));
    }
  }
  SzegoParams sp[2] = {SzegoParams::of(pp[0]->n), SzegoParams::of(pp[1]->n)};
  const auto& tm = spec.t_multipliers;
  // F[a][ti][piece] = factor projection at t_a = tm[ti] l_a^2
  auto project = [&](int px) {
    std::vector<std::vector<std::vector<std::vector<cplx>>>> F(2);
    for (int a = 0; a < 2; ++a) {
      std::vector<detail::InnerNodes> nodes;
      for (auto& pc : A.pieces) nodes.push_back(detail::inner_nodes(pc, a, A.N, px, spec.inner_order));
      for (double m : tm) {
        std::vector<std::vector<cplx>> per;
        for (auto& nd : nodes) per.push_back(detail::factor_projection(nd, m * ell[a] * ell[a], pts[a], sp[a]));
        F[a].push_back(std::move(per));
      }
    }
    return F;
  };
  auto l1 = [&](const std::vector<std::vector<cplx>>& F1, const std::vector<std::vector<cplx>>& F2, double& inside,
                double& outside) {
    std::vector<double> rin(pts[0].size()), rout(pts[0].size());
    parallel_for(pts[0].size(), [&](std::size_t i) {
      std::vector<double> ti, to;
      for (std::size_t j = 0; j < pts[1].size(); ++j) {
        cplx v = 0;
        bool inside_any = false;
        for (int p = 0; p < P; ++p) {
          v += A.pieces[p].weight * F1[p][i] * F2[p][j];
          inside_any = inside_any || (in[0][p][i] && in[1][p][j]);
        }
        (inside_any ? ti : to).push_back(wts[1][j] * std::abs(v));
      }
      rin[i] = wts[0][i] * pairwise_sum(ti);
      rout[i] = wts[0][i] * pairwise_sum(to);
    });
    inside = std::abs(A.scalar) * pairwise_sum(rin);
    outside = std::abs(A.scalar) * pairwise_sum(rout);
  };
  auto F = project(spec.inner_x_panels);
  for (std::size_t i1 = 0; i1 < tm.size(); ++i1)
    for (std::size_t i2 = 0; i2 < tm.size(); ++i2) {
      double ins = 0, out = 0;
      l1(F[0][i1], F[1][i2], ins, out);
      double v = ins + out;
      res.per_t.push_back(v);
      if (v > res.value) {
        res.value = v;
        res.inside = ins;
        res.outside = out;
      }
    }
  if (spec.stability_tol > 0) {
    // smallest t is the hardest for the inner rule
    auto G = project(2 * spec.inner_x_panels);
    double ci = 0, co = 0;
    l1(G[0][0], G[1][0], ci, co);
    if (std::abs(ci + co - res.per_t[0]) > spec.stability_tol * res.per_t[0])
      throw numerical_error("atom projection: inner quadrature unstable");
  }
  return res;
}

// ------------------------------------------------------- subharmonicity

struct SubharmonicReport {
  int evaluated = 0;
  int skipped = 0;
  double min_value = std::numeric_limits<double>::infinity();
  std::vector<double> values;
};

// L|f|^p = (1/4n) sum X_j^2 |f|^p - d_t |f|^p on factor alpha
inline SubharmonicReport subharmonicity_check(const Evaluator& f, double p, const std::vector<UPoint>& pts, int alpha,
                                              const Stencil& st, double threshold = 1e-12) {
  if (!(p > 0)) throw input_error("subharmonicity_check: p > 0");
  SubharmonicReport rep;
  PointFn g = [&](const UPoint& q) { return cplx(std::pow(std::abs(f.eval(q)), p), 0.0); };
  std::vector<double> vals(pts.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(pts.size(), [&](std::size_t i) {
    const UPoint& q = pts[i];
    if (std::abs(f.eval(q)) <= threshold) return;
    detail::check_t_margin(q, st);
    const int n = q.g(alpha).n;
    cplx lap = horizontal_laplacian_sum(g, q, alpha, st) / (4.0 * n);
    cplx dt = central_d1(g, q, alpha, 0, st);
    vals[i] = (lap - dt).real();
  });
  for (double v : vals) {
    if (std::isnan(v)) {
      ++rep.skipped;
      continue;
    }
    ++rep.evaluated;
    rep.values.push_back(v);
    rep.min_value = std::min(rep.min_value, v);
  }
  return rep;
}

}  // namespace heis
