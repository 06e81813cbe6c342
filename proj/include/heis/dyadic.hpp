#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "group.hpp"

namespace heis {

// s-sides A 4^-k, x-sides 2^-k; cbar bounds diameter and inner ball
struct DyadicParams {
  int n = 1;
  double s_aspect = 8.0;
  double cbar = 8.0;
  double cbreve() const { return 2.0 * cbar * cbar * cbar; }
  int child_count() const { return 4 << (2 * n); }  // 4 * 2^(2n)
};

namespace detail {
inline long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
}  // namespace detail

struct DyadicCube {
  int factor = 1;
  int n = 1;
  int level = 0;
  std::array<long long, 2 * kMaxN + 1> idx{};  // s index first

  auto operator<=>(const DyadicCube&) const = default;

  int dim() const { return 2 * n + 1; }
  double ell() const { return std::ldexp(1.0, -level); }

  DyadicCube parent() const {
    DyadicCube p = *this;
    p.level = level - 1;
    p.idx[0] = detail::floor_div(idx[0], 4);
    for (int a = 1; a < dim(); ++a) p.idx[a] = detail::floor_div(idx[a], 2);
    return p;
  }
  DyadicCube ancestor(int lvl) const {
    DyadicCube c = *this;
    while (c.level > lvl) c = c.parent();
    return c;
  }
  bool within(const DyadicCube& anc) const {
    if (anc.level > level || anc.factor != factor) return false;
    return ancestor(anc.level) == anc;
  }
  std::vector<DyadicCube> children() const {
    std::vector<DyadicCube> out;
    const int d = dim();
    const int total = 4 << (2 * n);
    for (int c = 0; c < total; ++c) {
      DyadicCube ch = *this;
      ch.level = level + 1;
      int rem = c;
      ch.idx[0] = 4 * idx[0] + rem % 4;
      rem /= 4;
      for (int a = 1; a < d; ++a) {
        ch.idx[a] = 2 * idx[a] + rem % 2;
        rem /= 2;
      }
      out.push_back(ch);
    }
    return out;
  }
  std::vector<DyadicCube> descendants_at(int lvl) const {
    std::vector<DyadicCube> cur{*this};
    while (!cur.empty() && cur.front().level < lvl) {
      std::vector<DyadicCube> nxt;
      for (auto& c : cur)
        for (auto& ch : c.children()) nxt.push_back(ch);
      cur.swap(nxt);
    }
    return cur;
  }

  CoordBox box(const DyadicParams& p) const {
    CoordBox b;
    b.n = n;
    double a = p.s_aspect * std::ldexp(1.0, -2 * level), w = ell();
    b.lo[0] = a * idx[0];
    b.hi[0] = a * (idx[0] + 1);
    for (int k = 1; k < dim(); ++k) {
      b.lo[k] = w * idx[k];
      b.hi[k] = w * (idx[k] + 1);
    }
    return b;
  }
  double measure(const DyadicParams& p) const { return box(p).volume(); }
  GroupPoint center(const DyadicParams& p) const {
    CoordBox b = box(p);
    GroupPoint g(n);
    g.s = 0.5 * (b.lo[0] + b.hi[0]);
    for (int j = 0; j < 2 * n; ++j) g.set_x(j, 0.5 * (b.lo[j + 1] + b.hi[j + 1]));
    return g;
  }
  bool contains(const GroupPoint& g, const DyadicParams& p) const {
    CoordBox b = box(p);
    if (g.s < b.lo[0] || g.s >= b.hi[0]) return false;
    for (int j = 0; j < 2 * n; ++j) {
      double v = g.x(j);
      if (v < b.lo[j + 1] || v >= b.hi[j + 1]) return false;
    }
    return true;
  }

  // upper bound on sup |g^{-1} g'| over the cube
  double diameter_bound(const DyadicParams& p) const {
    CoordBox b = box(p);
    double a = b.hi[0] - b.lo[0], w = ell();
    double M = 0;
    for (int k = 1; k < dim(); ++k) M += std::max(std::abs(b.lo[k]), std::abs(b.hi[k]));
    double dz2 = 2.0 * n * w * w;
    double cen = a + 2.0 * w * M;
    return std::pow(dz2 * dz2 + cen * cen, 0.25);
  }
  // B(center, 2^-k / cbar) inside the cube
  bool ball_condition(const DyadicParams& p) const {
    double rho = ell() / p.cbar;
    double a = p.s_aspect * std::ldexp(1.0, -2 * level);
    double cz = std::sqrt(center(p).z_norm2());
    return rho <= 0.5 * ell() && rho * rho + 2.0 * cz * rho <= 0.5 * a;
  }
  bool axioms_hold(const DyadicParams& p) const {
    return diameter_bound(p) <= p.cbar * ell() && ball_condition(p);
  }

  // lambda I = c delta_lambda(c^{-1} I), c the center
  bool dilate_contains(double lambda, const GroupPoint& g, const DyadicParams& p) const {
    GroupPoint c = center(p);
    return contains(multiply(c, dilate(1.0 / lambda, multiply(inverse(c), g))), p);
  }
  double dilate_measure(double lambda, const DyadicParams& p) const {
    return std::pow(lambda, 2 * n + 2) * measure(p);
  }
  // exact bounding box: the map is affine, so corners suffice
  CoordBox dilate_bbox(double lambda, const DyadicParams& p) const {
    CoordBox b = box(p), o;
    o.n = n;
    for (int a = 0; a < dim(); ++a) {
      o.lo[a] = INFINITY;
      o.hi[a] = -INFINITY;
    }
    GroupPoint c = center(p);
    for (int corner = 0; corner < (1 << dim()); ++corner) {
      GroupPoint g(n);
      g.s = (corner & 1) ? b.hi[0] : b.lo[0];
      for (int j = 0; j < 2 * n; ++j) g.set_x(j, (corner >> (j + 1)) & 1 ? b.hi[j + 1] : b.lo[j + 1]);
      GroupPoint q = multiply(c, dilate(lambda, multiply(inverse(c), g)));
      o.lo[0] = std::min(o.lo[0], q.s);
      o.hi[0] = std::max(o.hi[0], q.s);
      for (int j = 0; j < 2 * n; ++j) {
        o.lo[j + 1] = std::min(o.lo[j + 1], q.x(j));
        o.hi[j + 1] = std::max(o.hi[j + 1], q.x(j));
      }
    }
    return o;
  }
};

inline DyadicCube cube_containing(int factor, int level, const GroupPoint& g, const DyadicParams& p) {
  DyadicCube c;
  c.factor = factor;
  c.n = g.n;
  c.level = level;
  double a = p.s_aspect * std::ldexp(1.0, -2 * level), w = std::ldexp(1.0, -level);
  c.idx[0] = static_cast<long long>(std::floor(g.s / a));
  for (int j = 0; j < 2 * g.n; ++j) c.idx[j + 1] = static_cast<long long>(std::floor(g.x(j) / w));
  return c;
}

// all level-k cubes meeting the window; every cube is checked against the axioms
inline std::vector<DyadicCube> build_cubes(int factor, int level, const CoordBox& window, const DyadicParams& p) {
  if (window.n != p.n) throw input_error("build_cubes: dimension mismatch");
  const int d = 2 * p.n + 1;
  double a = p.s_aspect * std::ldexp(1.0, -2 * level), w = std::ldexp(1.0, -level);
  std::array<long long, 2 * kMaxN + 1> lo{}, hi{};
  for (int k = 0; k < d; ++k) {
    if (!std::isfinite(window.lo[k]) || !std::isfinite(window.hi[k]) || window.hi[k] <= window.lo[k])
      throw input_error("build_cubes: window must be a bounded box");
    double side = k == 0 ? a : w;
    lo[k] = static_cast<long long>(std::floor(window.lo[k] / side));
    hi[k] = static_cast<long long>(std::ceil(window.hi[k] / side));
  }
  std::vector<DyadicCube> out;
  std::array<long long, 2 * kMaxN + 1> cur = lo;
  while (true) {
    DyadicCube c;
    c.factor = factor;
    c.n = p.n;
    c.level = level;
    c.idx = cur;
    if (!c.axioms_hold(p)) throw input_error("build_cubes: window too large for cbar at this level");
    out.push_back(c);
    int k = d - 1;
    while (k >= 0) {
      if (++cur[k] < hi[k]) break;
      cur[k] = lo[k];
      --k;
    }
    if (k < 0) break;
  }
  return out;
}

struct DyadicRectangle {
  DyadicCube I, J;
  auto operator<=>(const DyadicRectangle&) const = default;
  double measure(const DyadicParams& p1, const DyadicParams& p2) const { return I.measure(p1) * J.measure(p2); }
};

// ---------------------------------------------------------------------------
// block model: per factor the ancestor-closed tree T of the cubes of Omega; the
// "own region" of a node (node minus its T-children) is an atom and every set
// built here is a union of atom x atom blocks

class BlockModel {
 public:
  struct Tree {
    std::vector<DyadicCube> nodes;  // parents before children
    std::map<DyadicCube, int> id;
    std::vector<int> parent;
    std::vector<std::vector<int>> kids;
    std::vector<double> mu;    // cube measure
    std::vector<double> own;   // own-region measure
    std::vector<int> nonT;     // number of children outside T
    int kmax = 0;              // finest level among the generating cubes
    int size() const { return static_cast<int>(nodes.size()); }
  };

  // candidate cube: a T node, or (nonT) any child of node outside T
  struct Cand {
    int node = -1;
    bool nonT = false;
    bool valid() const { return node >= 0; }
  };

  using Matrix = std::vector<std::vector<std::uint8_t>>;

  BlockModel(const std::vector<DyadicRectangle>& rects, const DyadicParams& p1, const DyadicParams& p2)
      : p_{p1, p2} {
    if (rects.empty()) throw input_error("BlockModel: empty set");
    std::vector<DyadicCube> c1, c2;
    for (auto& r : rects) {
      if (r.I.n != p1.n || r.J.n != p2.n) throw input_error("BlockModel: dimension mismatch");
      c1.push_back(r.I);
      c2.push_back(r.J);
    }
    t_[0] = build_tree(c1, p1);
    t_[1] = build_tree(c2, p2);
    chi_ = zeros();
    for (auto& r : rects) {
      int i = t_[0].id.at(r.I), j = t_[1].id.at(r.J);
      for (int a1 : subtree(0, i))
        for (int a2 : subtree(1, j)) chi_[a1][a2] = 1;
    }
  }

  const Tree& tree(int f) const { return t_[f]; }
  const Matrix& chi() const { return chi_; }
  const DyadicParams& params(int f) const { return p_[f]; }

  Matrix zeros() const { return Matrix(t_[0].size(), std::vector<std::uint8_t>(t_[1].size(), 0)); }

  double measure(const Matrix& X) const {
    std::vector<double> rows(t_[0].size(), 0.0);
    for (int a = 0; a < t_[0].size(); ++a)
      for (int b = 0; b < t_[1].size(); ++b)
        if (X[a][b]) rows[a] += t_[0].own[a] * t_[1].own[b];
    double s = 0;
    for (double r : rows) s += r;
    return s;
  }

  std::vector<int> subtree(int f, int v) const {
    std::vector<int> out{v};
    for (std::size_t k = 0; k < out.size(); ++k)
      for (int c : t_[f].kids[out[k]]) out.push_back(c);
    return out;
  }

  // {M_S chi_X > 1/2}, sup over dyadic rectangles
  Matrix enlarge(const Matrix& X) const {
    const Tree &A = t_[0], &B = t_[1];
    const int n1 = A.size(), n2 = B.size();
    // P[a1][v2] = sum_{a2 in sub v2} X mu2 ; Qm[v1][a2] = sum_{a1 in sub v1} X mu1 ; M = both
    std::vector<std::vector<double>> P(n1, std::vector<double>(n2, 0.0)), Qm(n1, std::vector<double>(n2, 0.0)),
        M(n1, std::vector<double>(n2, 0.0));
    for (int a = 0; a < n1; ++a) {
      for (int b = 0; b < n2; ++b) P[a][b] = X[a][b] ? B.own[b] : 0.0;
      for (int b = n2 - 1; b >= 0; --b)
        if (B.parent[b] >= 0) P[a][B.parent[b]] += P[a][b];
    }
    for (int a = 0; a < n1; ++a)
      for (int b = 0; b < n2; ++b) {
        Qm[a][b] = X[a][b] ? A.own[a] : 0.0;
        M[a][b] = P[a][b] * A.own[a];
      }
    for (int a = n1 - 1; a >= 0; --a) {
      int pa = A.parent[a];
      if (pa < 0) continue;
      for (int b = 0; b < n2; ++b) {
        Qm[pa][b] += Qm[a][b];
        M[pa][b] += M[a][b];
      }
    }
    Matrix ett = zeros(), ent = zeros(), etn = zeros(), out = zeros();
    for (int a = 0; a < n1; ++a)
      for (int b = 0; b < n2; ++b) {
        bool dTT = M[a][b] > 0.5 * A.mu[a] * B.mu[b];
        bool dNT = A.nonT[a] > 0 && P[a][b] > 0.5 * B.mu[b];
        bool dTN = B.nonT[b] > 0 && Qm[a][b] > 0.5 * A.mu[a];
        int pa = A.parent[a], pb = B.parent[b];
        ett[a][b] = dTT || (pa >= 0 && ett[pa][b]) || (pb >= 0 && ett[a][pb]);
        ent[a][b] = dNT || (pb >= 0 && ent[a][pb]);
        etn[a][b] = dTN || (pa >= 0 && etn[pa][b]);
        bool dNN = A.nonT[a] > 0 && B.nonT[b] > 0 && X[a][b];
        out[a][b] = (A.own[a] > 0 && B.own[b] > 0) && (ett[a][b] || ent[a][b] || etn[a][b] || dNN);
      }
    return out;
  }

  // containment tables for rectangles made of candidates
  struct Containment {
    Matrix tt, tn, nt, nn;
  };
  Containment containment(const Matrix& X) const {
    const Tree &A = t_[0], &B = t_[1];
    const int n1 = A.size(), n2 = B.size();
    Containment c;
    // rowwise: R[a1][v2] = AND over a2 in sub v2 (positive measure)
    Matrix R(n1, std::vector<std::uint8_t>(n2, 1)), C(n1, std::vector<std::uint8_t>(n2, 1));
    for (int a = 0; a < n1; ++a) {
      for (int b = 0; b < n2; ++b) R[a][b] = (A.own[a] > 0 && B.own[b] > 0) ? X[a][b] : 1;
      for (int b = n2 - 1; b >= 0; --b)
        if (B.parent[b] >= 0) R[a][B.parent[b]] = R[a][B.parent[b]] && R[a][b];
    }
    c.nt = R;  // nonT child of v1 (atom v1) x T node v2
    Matrix F = R;
    for (int a = 0; a < n1; ++a)
      for (int b = 0; b < n2; ++b) C[a][b] = (A.own[a] > 0 && B.own[b] > 0) ? X[a][b] : 1;
    for (int a = n1 - 1; a >= 0; --a) {
      int pa = A.parent[a];
      if (pa < 0) continue;
      for (int b = 0; b < n2; ++b) {
        F[pa][b] = F[pa][b] && F[a][b];
        C[pa][b] = C[pa][b] && C[a][b];
      }
    }
    c.tt = F;
    c.tn = C;  // T node v1 x nonT child of v2
    c.nn = X;
    return c;
  }

  static bool contained(const Containment& c, Cand a, Cand b) {
    if (!a.valid() || !b.valid()) return false;
    if (!a.nonT && !b.nonT) return c.tt[a.node][b.node];
    if (a.nonT && !b.nonT) return c.nt[a.node][b.node];
    if (!a.nonT && b.nonT) return c.tn[a.node][b.node];
    return c.nn[a.node][b.node];
  }

  Cand parent(int f, Cand c) const {
    if (c.nonT) return {c.node, false};
    return {t_[f].parent[c.node], false};
  }
  int level(int f, Cand c) const { return t_[f].nodes[c.node].level + (c.nonT ? 1 : 0); }
  double ell(int f, Cand c) const { return std::ldexp(1.0, -level(f, c)); }
  double mu(int f, Cand c) const {
    return c.nonT ? t_[f].mu[c.node] / p_[f].child_count() : t_[f].mu[c.node];
  }

  // candidates at level <= kmax
  std::vector<Cand> candidates(int f) const {
    std::vector<Cand> out;
    for (int v = 0; v < t_[f].size(); ++v) {
      out.push_back({v, false});
      if (t_[f].nonT[v] > 0 && t_[f].nodes[v].level + 1 <= t_[f].kmax) out.push_back({v, true});
    }
    return out;
  }

  std::vector<DyadicCube> nonT_children(int f, int v) const {
    std::vector<DyadicCube> out;
    for (auto& ch : t_[f].nodes[v].children())
      if (!t_[f].id.count(ch)) out.push_back(ch);
    return out;
  }

  // map an arbitrary cube inside the root union to its candidate
  std::optional<Cand> locate(int f, const DyadicCube& c) const {
    auto it = t_[f].id.find(c);
    if (it != t_[f].id.end()) return Cand{it->second, false};
    DyadicCube a = c;
    while (a.level > t_[f].nodes.front().level) {
      DyadicCube p = a.parent();
      auto jt = t_[f].id.find(p);
      if (jt != t_[f].id.end()) return Cand{jt->second, true};
      a = p;
    }
    return std::nullopt;
  }

 private:
  Tree build_tree(const std::vector<DyadicCube>& cubes, const DyadicParams& p) {
    Tree t;
    int kmin = cubes.front().level, kmax = kmin;
    for (auto& c : cubes) {
      kmin = std::min(kmin, c.level);
      kmax = std::max(kmax, c.level);
    }
    t.kmax = kmax;
    // raise the root level until no parent holds more than half of its children as roots
    int root = kmin;
    const int half = p.child_count() / 2;
    while (true) {
      std::set<DyadicCube> roots;
      for (auto& c : cubes) roots.insert(c.ancestor(root));
      std::map<DyadicCube, int> cnt;
      for (auto& r : roots) ++cnt[r.parent()];
      bool ok = true;
      for (auto& [par, k] : cnt)
        if (k > half) ok = false;
      if (ok) break;
      --root;
    }
    std::set<DyadicCube> all;
    for (auto& c : cubes) {
      DyadicCube a = c;
      while (true) {
        all.insert(a);
        if (a.level == root) break;
        a = a.parent();
      }
    }
    std::vector<DyadicCube> order(all.begin(), all.end());
    std::stable_sort(order.begin(), order.end(),
                     [](const DyadicCube& a, const DyadicCube& b) { return a.level < b.level; });
    for (auto& c : order) {
      t.id[c] = t.size();
      t.nodes.push_back(c);
    }
    t.parent.assign(t.size(), -1);
    t.kids.assign(t.size(), {});
    for (int v = 0; v < t.size(); ++v) {
      if (t.nodes[v].level > root) {
        int pv = t.id.at(t.nodes[v].parent());
        t.parent[v] = pv;
        t.kids[pv].push_back(v);
      }
      t.mu.push_back(t.nodes[v].measure(p));
    }
    for (int v = 0; v < t.size(); ++v) {
      double o = t.mu[v];
      for (int k : t.kids[v]) o -= t.mu[k];
      int nk = static_cast<int>(t.kids[v].size());
      t.own.push_back(nk == p.child_count() ? 0.0 : o);
      t.nonT.push_back(p.child_count() - nk);
    }
    return t;
  }

  DyadicParams p_[2];
  Tree t_[2];
  Matrix chi_;
};

struct OpenSetModel {
  std::vector<DyadicRectangle> rects;
  DyadicParams p1, p2;

  OpenSetModel() = default;
  OpenSetModel(std::vector<DyadicRectangle> r, DyadicParams a, DyadicParams b) : rects(std::move(r)), p1(a), p2(b) {
    if (rects.empty()) throw input_error("OpenSetModel: empty");
  }

  BlockModel blocks() const { return BlockModel(rects, p1, p2); }
  double measure() const {
    BlockModel bm = blocks();
    return bm.measure(bm.chi());
  }
  bool contains(const ProductPoint& g) const {
    for (auto& r : rects)
      if (r.I.contains(g.g1, p1) && r.J.contains(g.g2, p2)) return true;
    return false;
  }
  bool contains(const DyadicRectangle& R) const {
    BlockModel bm = blocks();
    auto a = bm.locate(0, R.I), b = bm.locate(1, R.J);
    if (!a || !b) return false;
    return BlockModel::contained(bm.containment(bm.chi()), *a, *b);
  }
  OpenSetModel transposed() const {
    OpenSetModel o;
    o.p1 = p2;
    o.p2 = p1;
    for (auto& r : rects) {
      DyadicRectangle t{r.J, r.I};
      t.I.factor = 1;
      t.J.factor = 2;
      o.rects.push_back(t);
    }
    return o;
  }
  // delta_{2^m1} x delta_{2^m2} maps level k cubes to level k - m
  OpenSetModel dilated(int m1, int m2) const {
    OpenSetModel o = *this;
    for (auto& r : o.rects) {
      r.I.level -= m1;
      r.J.level -= m2;
    }
    return o;
  }
};

enum class Direction { both, g1, g2 };

// m(Omega), m_1(Omega), m_2(Omega); levels limited to the finest level of Omega per factor
inline std::set<DyadicRectangle> maximal_rectangles(const OpenSetModel& om, Direction dir) {
  if (dir == Direction::g2) {
    std::set<DyadicRectangle> out;
    for (auto& r : maximal_rectangles(om.transposed(), Direction::g1)) {
      DyadicRectangle t{r.J, r.I};
      t.I.factor = 1;
      t.J.factor = 2;
      out.insert(t);
    }
    return out;
  }
  BlockModel bm = om.blocks();
  auto C = bm.containment(bm.chi());
  auto c1 = bm.candidates(0), c2 = bm.candidates(1);
  std::set<DyadicRectangle> out;
  auto expand = [&](int f, BlockModel::Cand c, bool deep) {
    if (!c.nonT) return std::vector<DyadicCube>{bm.tree(f).nodes[c.node]};
    std::vector<DyadicCube> v;
    for (auto& ch : bm.nonT_children(f, c.node)) {
      if (!deep) {
        v.push_back(ch);
        continue;
      }
      for (int l = ch.level; l <= bm.tree(f).kmax; ++l)
        for (auto& d : ch.descendants_at(l)) v.push_back(d);
    }
    return v;
  };
  for (auto a : c1)
    for (auto b : c2) {
      if (!BlockModel::contained(C, a, b)) continue;
      if (BlockModel::contained(C, bm.parent(0, a), b)) continue;
      if (dir == Direction::both && BlockModel::contained(C, a, bm.parent(1, b))) continue;
      for (auto& I : expand(0, a, false))
        for (auto& J : expand(1, b, dir == Direction::g1)) out.insert({I, J});
    }
  return out;
}

struct Enlargement {
  DyadicCube Istar, Jstar;
  double cbreve = 0;
};

namespace detail {
struct EnlargeCtx {
  BlockModel bm;
  BlockModel::Containment c1, c2;  // for Omega~ and Omega~~
  explicit EnlargeCtx(const OpenSetModel& om) : bm(om.blocks()) {
    auto t1 = bm.enlarge(bm.chi());
    auto t2 = bm.enlarge(t1);
    c1 = bm.containment(t1);
    c2 = bm.containment(t2);
  }
  // walk from candidate a upward while (parent x b) stays inside
  BlockModel::Cand climb1(BlockModel::Cand a, BlockModel::Cand b, const BlockModel::Containment& c) const {
    while (true) {
      auto p = bm.parent(0, a);
      if (!BlockModel::contained(c, p, b)) return a;
      a = p;
    }
  }
  BlockModel::Cand climb2(BlockModel::Cand a, BlockModel::Cand b, const BlockModel::Containment& c) const {
    while (true) {
      auto p = bm.parent(1, b);
      if (!BlockModel::contained(c, a, p)) return b;
      b = p;
    }
  }
};
}  // namespace detail

// I* largest with I* x J in Omega~, J* largest with I* x J* in Omega~~; R* = cbreve I* x cbreve J*
inline Enlargement enlarge(const OpenSetModel& om, const DyadicRectangle& R) {
  if (!om.contains(R)) throw input_error("enlarge: R is not contained in Omega");
  detail::EnlargeCtx ctx(om);
  auto a = *ctx.bm.locate(0, R.I), b = *ctx.bm.locate(1, R.J);
  auto ia = ctx.climb1(a, b, ctx.c1);
  auto jb = ctx.climb2(ia, b, ctx.c2);
  Enlargement e;
  // a candidate that did not move stands for the original cube or its ancestor just below the T node
  auto resolve = [&](int f, BlockModel::Cand start, BlockModel::Cand got, const DyadicCube& orig) {
    if (got.node == start.node && got.nonT == start.nonT) {
      if (!start.nonT) return orig;
      return orig.ancestor(ctx.bm.tree(f).nodes[start.node].level + 1);
    }
    return ctx.bm.tree(f).nodes[got.node];
  };
  e.Istar = resolve(0, a, ia, R.I);
  e.Jstar = resolve(1, b, jb, R.J);
  e.cbreve = om.p1.cbreve();
  return e;
}

// sum over m_1(Omega) of |R| (l(J) / l(J*))^kappa; direction 2 by symmetry
inline double journe_sum(const OpenSetModel& om, double kappa, int direction) {
  if (!(kappa > 0)) throw input_error("journe_sum: kappa > 0");
  if (direction == 2) return journe_sum(om.transposed(), kappa, 1);
  if (direction != 1) throw input_error("journe_sum: direction 1 or 2");
  detail::EnlargeCtx ctx(om);
  const BlockModel& bm = ctx.bm;
  auto C = bm.containment(bm.chi());
  auto c1 = bm.candidates(0), c2 = bm.candidates(1);
  std::vector<double> terms;
  for (auto a : c1)
    for (auto b : c2) {
      if (!BlockModel::contained(C, a, b) || BlockModel::contained(C, bm.parent(0, a), b)) continue;
      auto is = ctx.climb1(a, b, ctx.c1);
      auto js = ctx.climb2(is, b, ctx.c2);
      double ratio = bm.ell(1, b) / bm.ell(1, js);
      // multiplicity: every I-copy (nonT children) and J-copy, plus deeper J descendants
      double mI = a.nonT ? bm.tree(0).nonT[a.node] : 1.0;
      double mJ = b.nonT ? bm.tree(1).nonT[b.node] : 1.0;
      double deep = 1.0;
      if (b.nonT)
        for (int d = 1; bm.level(1, b) + d <= bm.tree(1).kmax; ++d) deep += std::pow(2.0, -kappa * d);
      terms.push_back(mI * mJ * bm.mu(0, a) * bm.mu(1, b) * std::pow(ratio, kappa) * deep);
    }
  std::sort(terms.begin(), terms.end());
  double s = 0;
  for (double t : terms) s += t;
  return s;
}

// |union of lambda I x lambda J| by seeded Monte Carlo over the union bounding box
struct UnionEstimate {
  double measure = 0;
  double stderr_ = 0;
  double max_single = 0;
  double sum_single = 0;
};

inline UnionEstimate union_measure_mc(const std::vector<DyadicRectangle>& rs, double lambda, const DyadicParams& p1,
                                      const DyadicParams& p2, std::uint64_t seed, int samples) {
  if (rs.empty()) return {};
  CoordBox b1 = rs[0].I.dilate_bbox(lambda, p1), b2 = rs[0].J.dilate_bbox(lambda, p2);
  UnionEstimate u;
  for (auto& r : rs) {
    CoordBox a = r.I.dilate_bbox(lambda, p1), b = r.J.dilate_bbox(lambda, p2);
    for (int k = 0; k < a.dim(); ++k) {
      b1.lo[k] = std::min(b1.lo[k], a.lo[k]);
      b1.hi[k] = std::max(b1.hi[k], a.hi[k]);
    }
    for (int k = 0; k < b.dim(); ++k) {
      b2.lo[k] = std::min(b2.lo[k], b.lo[k]);
      b2.hi[k] = std::max(b2.hi[k], b.hi[k]);
    }
    double m = r.I.dilate_measure(lambda, p1) * r.J.dilate_measure(lambda, p2);
    u.max_single = std::max(u.max_single, m);
    u.sum_single += m;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  long hits = 0;
  for (int i = 0; i < samples; ++i) {
    GroupPoint g1(p1.n), g2(p2.n);
    g1.s = b1.lo[0] + U(rng) * (b1.hi[0] - b1.lo[0]);
    for (int j = 0; j < 2 * p1.n; ++j) g1.set_x(j, b1.lo[j + 1] + U(rng) * (b1.hi[j + 1] - b1.lo[j + 1]));
    g2.s = b2.lo[0] + U(rng) * (b2.hi[0] - b2.lo[0]);
    for (int j = 0; j < 2 * p2.n; ++j) g2.set_x(j, b2.lo[j + 1] + U(rng) * (b2.hi[j + 1] - b2.lo[j + 1]));
    for (auto& r : rs)
      if (r.I.dilate_contains(lambda, g1, p1) && r.J.dilate_contains(lambda, g2, p2)) {
        ++hits;
        break;
      }
  }
  double V = b1.volume() * b2.volume();
  double f = static_cast<double>(hits) / samples;
  u.measure = V * f;
  u.stderr_ = V * std::sqrt(f * (1 - f) / samples);
  return u;
}

}  // namespace heis
