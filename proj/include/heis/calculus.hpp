#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "group.hpp"
#include "parallel.hpp"

namespace heis {

// ---------------------------------------------------------------- grids

struct Axis {
  double min = 0, max = 1;
  int steps = 3;
  double spacing() const { return (max - min) / (steps - 1); }
  double at(int i) const { return min + i * spacing(); }
};

struct FactorGrid {
  int n = 1;
  Axis s;
  std::vector<Axis> x;  // 2n axes

  FactorGrid() = default;
  FactorGrid(int n_, Axis s_, std::vector<Axis> x_) : n(n_), s(s_), x(std::move(x_)) { validate(); }

  void validate() const {
    if (n < 1 || n > kMaxN) throw input_error("FactorGrid: bad n");
    if (static_cast<int>(x.size()) != 2 * n) throw input_error("FactorGrid: need 2n x-axes");
    if (s.steps < 3) throw input_error("FactorGrid: steps >= 3");
    for (auto& a : x)
      if (a.steps < 3) throw input_error("FactorGrid: steps >= 3");
    if (!(s.max > s.min)) throw input_error("FactorGrid: empty axis");
    for (auto& a : x)
      if (!(a.max > a.min)) throw input_error("FactorGrid: empty axis");
  }
  int rank() const { return 2 * n + 1; }
  const Axis& axis(int a) const { return a == 0 ? s : x[a - 1]; }
  std::size_t size() const {
    std::size_t c = s.steps;
    for (auto& a : x) c *= a.steps;
    return c;
  }
  std::size_t stride(int a) const {
    std::size_t st = 1;
    for (int b = rank() - 1; b > a; --b) st *= axis(b).steps;
    return st;
  }
  int index_along(std::size_t flat, int a) const { return static_cast<int>((flat / stride(a)) % axis(a).steps); }
  GroupPoint point(std::size_t flat) const {
    GroupPoint g(n);
    g.s = s.at(index_along(flat, 0));
    for (int j = 0; j < 2 * n; ++j) g.set_x(j, x[j].at(index_along(flat, j + 1)));
    return g;
  }
};

struct GridFunction {
  FactorGrid grid;
  std::vector<cplx> values;
  std::vector<std::uint8_t> valid;

  GridFunction() = default;
  explicit GridFunction(const FactorGrid& g) : grid(g), values(g.size()), valid(g.size(), 1) {}

  template <class F>
  static GridFunction sample(const FactorGrid& g, F&& f) {
    GridFunction u(g);
    parallel_for(g.size(), [&](std::size_t i) { u.values[i] = f(g.point(i)); });
    return u;
  }
  std::size_t valid_count() const { return std::count(valid.begin(), valid.end(), 1); }
};

namespace detail {

// central first or second difference along axis a
inline GridFunction grid_diff(const GridFunction& u, int a, int deriv, int order) {
  if (order != 2 && order != 4) throw input_error("stencil order must be 2 or 4");
  const FactorGrid& g = u.grid;
  GridFunction out(g);
  const int r = order / 2;
  const std::size_t st = g.stride(a);
  const int m = g.axis(a).steps;
  const double h = g.axis(a).spacing();
  parallel_for(g.size(), [&](std::size_t i) {
    int k = g.index_along(i, a);
    if (k < r || k >= m - r) {
      out.valid[i] = 0;
      out.values[i] = 0;
      return;
    }
    bool ok = u.valid[i];
    for (int d = 1; d <= r; ++d) ok = ok && u.valid[i + d * st] && u.valid[i - d * st];
    out.valid[i] = ok;
    const cplx* v = u.values.data();
    cplx res;
    if (deriv == 1) {
      if (order == 2) res = (v[i + st] - v[i - st]) / (2 * h);
      else res = (-v[i + 2 * st] + 8.0 * v[i + st] - 8.0 * v[i - st] + v[i - 2 * st]) / (12 * h);
    } else {
      if (order == 2) res = (v[i + st] - 2.0 * v[i] + v[i - st]) / (h * h);
      else
        res = (-v[i + 2 * st] + 16.0 * v[i + st] - 30.0 * v[i] + 16.0 * v[i - st] - v[i - 2 * st]) / (12 * h * h);
    }
    out.values[i] = ok ? res : cplx{};
  });
  return out;
}

// out = a + coef(g) * b, validity ANDed
template <class C>
GridFunction combine(const GridFunction& a, const GridFunction& b, C&& coef) {
  GridFunction out(a.grid);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.valid[i] = a.valid[i] && b.valid[i];
    out.values[i] = out.valid[i] ? a.values[i] + coef(a.grid.point(i)) * b.values[i] : cplx{};
  }
  return out;
}

}  // namespace detail

inline GridFunction partial_s(const GridFunction& u, int order = 4) { return detail::grid_diff(u, 0, 1, order); }

// X_j, j = 1..2n
inline GridFunction apply_vector_field(int j, const GridFunction& u, int order = 4) {
  const int n = u.grid.n;
  if (j < 1 || j > 2 * n) throw input_error("apply_vector_field: axis out of range");
  GridFunction dx = detail::grid_diff(u, j, 1, order);
  GridFunction ds = detail::grid_diff(u, 0, 1, order);
  if (j <= n) return detail::combine(dx, ds, [j, n](const GroupPoint& g) { return 2.0 * g.x(n + j - 1); });
  return detail::combine(dx, ds, [j, n](const GroupPoint& g) { return -2.0 * g.x(j - n - 1); });
}

enum class LaplacianMode { composed, expanded };

inline GridFunction apply_sublaplacian(const GridFunction& u, int order = 4,
                                       LaplacianMode mode = LaplacianMode::composed) {
  const int n = u.grid.n;
  GridFunction acc(u.grid);
  std::fill(acc.values.begin(), acc.values.end(), cplx{});
  if (mode == LaplacianMode::composed) {
    for (int j = 1; j <= 2 * n; ++j) {
      GridFunction xx = apply_vector_field(j, apply_vector_field(j, u, order), order);
      acc = detail::combine(acc, xx, [](const GroupPoint&) { return 1.0; });
    }
  } else {
    GridFunction ss = detail::grid_diff(u, 0, 2, order);
    GridFunction ds = detail::grid_diff(u, 0, 1, order);
    for (int j = 1; j <= 2 * n; ++j) {
      GridFunction xx = detail::grid_diff(u, j, 2, order);
      GridFunction xs = detail::grid_diff(ds, j, 1, order);
      // X_j^2 = d_jj + 2c d_js + c^2 d_ss, c the s-coefficient of X_j
      auto c = [j, n](const GroupPoint& g) { return j <= n ? 2.0 * g.x(n + j - 1) : -2.0 * g.x(j - n - 1); };
      GridFunction t = detail::combine(xx, xs, [&](const GroupPoint& g) { return 2.0 * c(g); });
      t = detail::combine(t, ss, [&](const GroupPoint& g) { return c(g) * c(g); });
      acc = detail::combine(acc, t, [](const GroupPoint&) { return 1.0; });
    }
  }
  const double k = -1.0 / (4.0 * n);
  for (auto& v : acc.values) v *= k;
  return acc;
}

// (X_j X_{n+j} - X_{n+j} X_j) u + 4 d_s u
inline GridFunction bracket_residual(const GridFunction& u, int j, int order = 4) {
  const int n = u.grid.n;
  if (j < 1 || j > n) throw input_error("bracket_residual: j out of range");
  GridFunction a = apply_vector_field(j, apply_vector_field(n + j, u, order), order);
  GridFunction b = apply_vector_field(n + j, apply_vector_field(j, u, order), order);
  GridFunction r = detail::combine(a, b, [](const GroupPoint&) { return -1.0; });
  return detail::combine(r, partial_s(u, order), [](const GroupPoint&) { return 4.0; });
}

inline double max_abs_valid(const GridFunction& u) {
  double m = 0;
  for (std::size_t i = 0; i < u.values.size(); ++i)
    if (u.valid[i]) m = std::max(m, std::abs(u.values[i]));
  return m;
}

// ------------------------------------------------------------ evaluators

// point (t1, t2, g1, g2) of R_+^2 x H_1 x H_2
struct UPoint {
  double t1 = 1, t2 = 1;
  GroupPoint g1, g2;
  double& t(int alpha) { return alpha == 0 ? t1 : t2; }
  double t(int alpha) const { return alpha == 0 ? t1 : t2; }
  GroupPoint& g(int alpha) { return alpha == 0 ? g1 : g2; }
  const GroupPoint& g(int alpha) const { return alpha == 0 ? g1 : g2; }
};

// first partials per factor: d/dt, d/ds, d/dx_j
struct Partials {
  cplx f;
  cplx dt[2];
  cplx ds[2];
  std::array<cplx, 2 * kMaxN> dx[2];
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual cplx eval(const UPoint& p) const = 0;
  virtual bool has_partials() const { return false; }
  virtual Partials partials(const UPoint&) const { throw input_error("evaluator has no analytic partials"); }
};

class FnEvaluator : public Evaluator {
 public:
  explicit FnEvaluator(std::function<cplx(const UPoint&)> f) : f_(std::move(f)) {}
  cplx eval(const UPoint& p) const override { return f_(p); }

 private:
  std::function<cplx(const UPoint&)> f_;
};

struct Stencil {
  double h = 1e-3;
  int order = 4;
  bool prefer_analytic = true;
  Stencil() = default;
  Stencil(double h_, int order_, bool analytic = true) : h(h_), order(order_), prefer_analytic(analytic) {
    if (!(h > 0)) throw input_error("Stencil: h > 0");
    if (order != 2 && order != 4) throw input_error("Stencil: order 2 or 4");
  }
};

// coordinate c of factor alpha: 0 = t, 1 = s, 2 + j = x_j
inline double& coord(UPoint& p, int alpha, int c) {
  if (c == 0) return p.t(alpha);
  if (c == 1) return p.g(alpha).s;
  GroupPoint& g = p.g(alpha);
  int j = c - 2;
  return j < g.n ? reinterpret_cast<double(&)[2]>(g.z[j])[0] : reinterpret_cast<double(&)[2]>(g.z[j - g.n])[1];
}

using PointFn = std::function<cplx(const UPoint&)>;

namespace detail {
inline cplx shifted(const PointFn& f, UPoint p, int alpha, int c, double d) {
  coord(p, alpha, c) += d;
  return f(p);
}
}  // namespace detail

inline cplx central_d1(const PointFn& f, const UPoint& p, int alpha, int c, const Stencil& st) {
  const double h = st.h;
  using detail::shifted;
  if (st.order == 2) return (shifted(f, p, alpha, c, h) - shifted(f, p, alpha, c, -h)) / (2 * h);
  return (-shifted(f, p, alpha, c, 2 * h) + 8.0 * shifted(f, p, alpha, c, h) - 8.0 * shifted(f, p, alpha, c, -h) +
          shifted(f, p, alpha, c, -2 * h)) /
         (12 * h);
}

inline cplx central_d2(const PointFn& f, const UPoint& p, int alpha, int c, const Stencil& st) {
  const double h = st.h;
  using detail::shifted;
  if (st.order == 2) return (shifted(f, p, alpha, c, h) - 2.0 * f(p) + shifted(f, p, alpha, c, -h)) / (h * h);
  return (-shifted(f, p, alpha, c, 2 * h) + 16.0 * shifted(f, p, alpha, c, h) - 30.0 * f(p) +
          16.0 * shifted(f, p, alpha, c, -h) - shifted(f, p, alpha, c, -2 * h)) /
         (12 * h * h);
}

inline cplx central_mixed(const PointFn& f, const UPoint& p, int alpha, int c1, int c2, const Stencil& st) {
  PointFn inner = [&](const UPoint& q) { return central_d1(f, q, alpha, c2, st); };
  return central_d1(inner, p, alpha, c1, st);
}

namespace detail {
inline void check_t_margin(const UPoint& p, const Stencil& st) {
  double reach = (st.order / 2) * st.h;
  if (!(p.t1 - reach > 0) || !(p.t2 - reach > 0)) throw input_error("stencil crosses t <= 0");
}
}  // namespace detail

// pointwise X_j f (j = 1..2n) by central differences
inline cplx vector_field_at(const PointFn& f, const UPoint& p, int alpha, int j, const Stencil& st) {
  const GroupPoint& g = p.g(alpha);
  const int n = g.n;
  cplx dx = central_d1(f, p, alpha, 1 + j, st);
  cplx ds = central_d1(f, p, alpha, 1, st);
  double c = j <= n ? 2.0 * g.x(n + j - 1) : -2.0 * g.x(j - n - 1);
  return dx + c * ds;
}

// pointwise sum_j X_j^2 f, expanded form with exact-coefficient second differences
inline cplx horizontal_laplacian_sum(const PointFn& f, const UPoint& p, int alpha, const Stencil& st) {
  const GroupPoint& g = p.g(alpha);
  const int n = g.n;
  cplx ss = central_d2(f, p, alpha, 1, st);
  cplx acc = 0;
  for (int j = 1; j <= 2 * n; ++j) {
    double c = j <= n ? 2.0 * g.x(n + j - 1) : -2.0 * g.x(j - n - 1);
    acc += central_d2(f, p, alpha, 1 + j, st) + 2.0 * c * central_mixed(f, p, alpha, 1 + j, 1, st) + c * c * ss;
  }
  return acc;
}

struct Residual {
  cplx value;
  double scale = 0;  // largest constituent term
  double relative() const { return scale > 0 ? std::abs(value) / scale : std::abs(value); }
};

// residuals {df/dwbar_1, df/dwbar_2, Zbar_{1j} f, Zbar_{2j} f}
inline std::vector<Residual> holomorphy_residual(const Evaluator& f, const UPoint& p, const Stencil& st) {
  std::vector<Residual> out;
  const int n1 = p.g1.n, n2 = p.g2.n;
  if (st.prefer_analytic && f.has_partials()) {
    Partials d = f.partials(p);
    for (int a = 0; a < 2; ++a) {
      cplx ts = 0.5 * d.ds[a], tt = cplx(0, 0.5) * d.dt[a];
      out.push_back({ts + tt, std::max(std::abs(ts), std::abs(tt))});
    }
    for (int a = 0; a < 2; ++a) {
      const GroupPoint& g = p.g(a);
      for (int j = 0; j < g.n; ++j) {
        cplx tx = 0.5 * d.dx[a][j], ty = cplx(0, 0.5) * d.dx[a][g.n + j], tz = -cplx(0, 1) * g.z[j] * d.ds[a];
        out.push_back({tx + ty + tz, std::max({std::abs(tx), std::abs(ty), std::abs(tz)})});
      }
    }
    return out;
  }
  detail::check_t_margin(p, st);
  PointFn fn = [&f](const UPoint& q) { return f.eval(q); };
  for (int a = 0; a < 2; ++a) {
    cplx ts = 0.5 * central_d1(fn, p, a, 1, st), tt = cplx(0, 0.5) * central_d1(fn, p, a, 0, st);
    out.push_back({ts + tt, std::max(std::abs(ts), std::abs(tt))});
  }
  for (int a = 0; a < 2; ++a) {
    const GroupPoint& g = p.g(a);
    const int n = a == 0 ? n1 : n2;
    cplx ds = central_d1(fn, p, a, 1, st);
    for (int j = 0; j < n; ++j) {
      cplx tx = 0.5 * central_d1(fn, p, a, 2 + j, st);
      cplx ty = cplx(0, 0.5) * central_d1(fn, p, a, 2 + n + j, st);
      cplx tz = -cplx(0, 1) * g.z[j] * ds;
      out.push_back({tx + ty + tz, std::max({std::abs(tx), std::abs(ty), std::abs(tz)})});
    }
  }
  return out;
}

// (d/dt_alpha + Delta_alpha) f at p
inline Residual heat_residual(const Evaluator& f, const UPoint& p, int alpha, const Stencil& st) {
  if (alpha != 0 && alpha != 1) throw input_error("heat_residual: factor index 0 or 1");
  detail::check_t_margin(p, st);
  PointFn fn = [&f](const UPoint& q) { return f.eval(q); };
  const int n = p.g(alpha).n;
  cplx dt = central_d1(fn, p, alpha, 0, st);
  cplx lap = -horizontal_laplacian_sum(fn, p, alpha, st) / (4.0 * n);
  return {dt + lap, std::max(std::abs(dt), std::abs(lap))};
}

// ------------------------------------------------------- quadratic map

// (w_1, w_2, z_1, z_2); flat: w = s + i t; curved: image under pi
struct SiegelPoint {
  cplx w[2];
  GroupPoint z[2];  // s field unused
};

inline SiegelPoint to_flat(const UPoint& p) {
  SiegelPoint q;
  for (int a = 0; a < 2; ++a) {
    q.w[a] = cplx(p.g(a).s, p.t(a));
    q.z[a] = p.g(a);
    q.z[a].s = 0;
  }
  return q;
}

inline SiegelPoint pi_forward(const SiegelPoint& p) {
  SiegelPoint q = p;
  for (int a = 0; a < 2; ++a) q.w[a] += cplx(0, p.z[a].z_norm2());
  return q;
}

inline SiegelPoint pi_inverse(const SiegelPoint& p) {
  SiegelPoint q = p;
  for (int a = 0; a < 2; ++a) q.w[a] -= cplx(0, p.z[a].z_norm2());
  return q;
}

// Im w_alpha - |z_alpha|^2 on the curved model
inline double rho(const SiegelPoint& curved, int alpha) {
  return curved.w[alpha].imag() - curved.z[alpha].z_norm2();
}

}  // namespace heis
