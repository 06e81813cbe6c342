#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include "calculus.hpp"
#include "parallel.hpp"
#include "group.hpp"
#include "quadrature.hpp"

namespace heis {

// ----------------------------------------------------------- Szego

inline double szego_constant(int n) {
  if (n < 1) throw input_error("szego_constant: n >= 1");
  double fact = 1;
  for (int k = 2; k <= n; ++k) fact *= k;
  return fact / (4.0 * std::pow(std::numbers::pi / 2.0, n + 1));
}

struct SzegoParams {
  int n = 1;
  double c = szego_constant(1);
  static SzegoParams of(int n) { return {n, szego_constant(n)}; }
  double c_prime() const { return c * (n + 1); }
};

namespace detail {
inline cplx ipow(cplx base, int e) {
  cplx r = 1;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}
inline cplx szego_denominator(double t, const GroupPoint& h) { return cplx(h.z_norm2() + t, -h.s); }
inline void szego_check(double t, const GroupPoint& h) {
  if (t < 0) throw input_error("szego: t must be >= 0");
  if (t == 0 && h.s == 0 && h.z_norm2() == 0) throw numerical_error("szego: singular at t = 0, identity");
}
}  // namespace detail

// c / (|z|^2 + t - i s)^(n+1)
inline cplx szego_factor(double t, const GroupPoint& h, const SzegoParams& p) {
  if (h.n != p.n) throw input_error("szego_factor: dimension mismatch");
  detail::szego_check(t, h);
  return p.c / detail::ipow(detail::szego_denominator(t, h), p.n + 1);
}

inline cplx szego_product(double t1, double t2, const ProductPoint& g, const ProductPoint& gp, const SzegoParams& p1,
                          const SzegoParams& p2) {
  return szego_factor(t1, multiply(inverse(gp.g1), g.g1), p1) * szego_factor(t2, multiply(inverse(gp.g2), g.g2), p2);
}

struct DiffBound {
  double lhs;
  double rhs;
};

// |S(t,h) - S(t + tau^2, h)| against c' tau^2 / |h|^(Q+2)
inline DiffBound kernel_diff_bound(double t, double tau, const GroupPoint& h, const SzegoParams& p) {
  if (!(tau > 0)) throw input_error("kernel_diff_bound: tau > 0");
  if (h.s == 0 && h.z_norm2() == 0) throw input_error("kernel_diff_bound: h must not be the identity");
  double lhs = std::abs(szego_factor(t, h, p) - szego_factor(t + tau * tau, h, p));
  int Q = 2 * p.n + 2;
  double rhs = p.c_prime() * tau * tau / std::pow(norm(h), Q + 2);
  return {lhs, rhs};
}

// (t, g) -> S((t + t0, g), g'), holomorphic on U; closed-form first partials
class SzegoSlice : public Evaluator {
 public:
  SzegoSlice(ProductPoint gp, double t01, double t02, SzegoParams p1, SzegoParams p2)
      : gp_(gp), t0_{t01, t02}, p_{p1, p2} {}

  cplx eval(const UPoint& q) const override {
    return factor(0, q.t1, q.g1) * factor(1, q.t2, q.g2);
  }
  cplx factor(int a, double t, const GroupPoint& g) const {
    return szego_factor(t + t0_[a], multiply(inverse(a == 0 ? gp_.g1 : gp_.g2), g), p_[a]);
  }
  bool has_partials() const override { return true; }
  Partials partials(const UPoint& q) const override {
    Partials d;
    cplx f[2];
    Partials part[2];
    for (int a = 0; a < 2; ++a) {
      const GroupPoint& g = q.g(a);
      const GroupPoint& w = a == 0 ? gp_.g1 : gp_.g2;
      GroupPoint h = multiply(inverse(w), g);
      const int n = p_[a].n;
      cplx F = detail::szego_denominator(q.t(a) + t0_[a], h);
      detail::szego_check(q.t(a) + t0_[a], h);
      f[a] = p_[a].c / detail::ipow(F, n + 1);
      cplx dSdF = -double(n + 1) * f[a] / F;
      part[a].dt[0] = dSdF;
      part[a].ds[0] = dSdF * cplx(0, -1);
      // h_s = s - s' - 2 Im<z', z>
      for (int j = 0; j < n; ++j) {
        double hx = h.z[j].real(), hy = h.z[j].imag();
        double dsx = -2.0 * w.z[j].imag(), dsy = 2.0 * w.z[j].real();
        part[a].dx[0][j] = dSdF * (cplx(0, -1) * dsx + 2.0 * hx);
        part[a].dx[0][n + j] = dSdF * (cplx(0, -1) * dsy + 2.0 * hy);
      }
    }
    d.f = f[0] * f[1];
    for (int a = 0; a < 2; ++a) {
      cplx other = f[1 - a];
      d.dt[a] = part[a].dt[0] * other;
      d.ds[a] = part[a].ds[0] * other;
      for (int j = 0; j < 2 * p_[a].n; ++j) d.dx[a][j] = part[a].dx[0][j] * other;
    }
    return d;
  }

 private:
  ProductPoint gp_;
  double t0_[2];
  SzegoParams p_[2];
};

// ------------------------------------------------------- heat kernel

struct HeatKernelParams {
  int n = 1;
  int nodes = 256;           // base lambda nodes, 16-point panels
  double truncation = 40.0;  // lambda <= truncation / t
  int max_panels = 1024;
  double rel_tol = 1e-10;
  bool cache = true;
};

// h_t(s, z) = (1/pi) int_0^inf cos(lambda s) (lambda / (pi sinh(lambda t / n)))^n
//             exp(-lambda coth(lambda t / n) |z|^2) d lambda
class HeatKernel {
 public:
  explicit HeatKernel(HeatKernelParams p = {}) : p_(p) {
    if (p_.n < 1) throw input_error("HeatKernel: n >= 1");
    if (p_.nodes < 64 || p_.nodes % 16 != 0) throw input_error("HeatKernel: nodes >= 64, multiple of 16");
    if (p_.truncation < 20) throw input_error("HeatKernel: truncation >= 20");
  }
  const HeatKernelParams& params() const { return p_; }

  double eval(double t, const GroupPoint& g) const {
    if (g.n != p_.n) throw input_error("heat kernel: dimension mismatch");
    return eval_sr(t, g.s, g.z_norm2());
  }

  // value depends on (s, |z|^2) only
  double eval_sr(double t, double s, double r2) const {
    if (!(t > 0)) throw input_error("heat kernel: t must be positive");
    auto tab = table(t);
    const double L = p_.truncation / t;
    // accepted value uses >= nodes points, checked against half as many
    int panels = p_.nodes / 32;
    int want = static_cast<int>(std::ceil(L * std::abs(s) / (4 * std::numbers::pi)));
    while (panels < want && panels * 2 < p_.max_panels) panels *= 2;
    double prev = sum(*level(*tab, panels), s, r2);
    while (panels < p_.max_panels) {
      panels *= 2;
      double cur = sum(*level(*tab, panels), s, r2);
      if (std::abs(cur - prev) <= p_.rel_tol * std::abs(cur) + 1e-14 * tab->peak) return cur;
      prev = cur;
    }
    throw numerical_error("heat kernel: lambda quadrature did not converge");
  }

  double peak(double t) const { return table(t)->peak; }

 private:
  struct Level {
    std::vector<double> lam, wa, b;
  };
  struct Table {
    double t = 0;
    double peak = 0;
    std::map<int, std::shared_ptr<const Level>> levels;
  };

  std::shared_ptr<const Level> build_level(double t, int panels) const {
    auto lv = std::make_shared<Level>();
    const double L = p_.truncation / t;
    Rule1D r = composite_gl(0.0, L, panels, 16);
    const int n = p_.n;
    for (std::size_t i = 0; i < r.size(); ++i) {
      double lam = r.x[i];
      double a = lam * t / n;
      double A = std::pow(lam / (std::numbers::pi * std::sinh(a)), n);
      double B = lam / std::tanh(a);
      lv->lam.push_back(lam);
      lv->wa.push_back(r.w[i] * A / std::numbers::pi);
      lv->b.push_back(B);
    }
    return lv;
  }

  std::shared_ptr<Table> table(double t) const {
    std::lock_guard<std::mutex> lk(m_);
    auto it = tables_.find(t);
    if (it != tables_.end()) return it->second;
    if (!p_.cache || tables_.size() > 512) tables_.clear();
    auto tab = std::make_shared<Table>();
    tab->t = t;
    auto lv = build_level(t, p_.nodes / 16);
    tab->levels[p_.nodes / 16] = lv;
    // peak = h_t(identity), also the l1 mass of the integrand
    double pk = 0;
    for (double w : lv->wa) pk += w;
    tab->peak = pk;
    tables_[t] = tab;
    return tab;
  }

  std::shared_ptr<const Level> level(Table& tab, int panels) const {
    std::lock_guard<std::mutex> lk(m_);
    auto it = tab.levels.find(panels);
    if (it != tab.levels.end()) return it->second;
    auto lv = build_level(tab.t, panels);
    tab.levels[panels] = lv;
    return lv;
  }

  static double sum(const Level& lv, double s, double r2) {
    double acc = 0;
    const std::size_t m = lv.lam.size();
    for (std::size_t i = 0; i < m; ++i) {
      double e = lv.b[i] * r2;
      if (e > 745) continue;
      acc += lv.wa[i] * std::cos(lv.lam[i] * s) * std::exp(-e);
    }
    return acc;
  }

  HeatKernelParams p_;
  mutable std::mutex m_;
  mutable std::map<double, std::shared_ptr<Table>> tables_;
};

inline const HeatKernel& default_heat_kernel(int n) {
  static std::mutex m;
  static std::map<int, std::unique_ptr<HeatKernel>> ks;
  std::lock_guard<std::mutex> lk(m);
  auto& k = ks[n];
  if (!k) {
    HeatKernelParams p;
    p.n = n;
    k = std::make_unique<HeatKernel>(p);
  }
  return *k;
}

inline double heat_kernel_eval(double t, const GroupPoint& g, const HeatKernelParams& p) {
  static std::mutex m;
  static std::map<std::tuple<int, int, double, int, double>, std::unique_ptr<HeatKernel>> ks;
  const HeatKernel* k;
  {
    std::lock_guard<std::mutex> lk(m);
    auto& slot = ks[{p.n, p.nodes, p.truncation, p.max_panels, p.rel_tol}];
    if (!slot) slot = std::make_unique<HeatKernel>(p);
    k = slot.get();
  }
  return k->eval(t, g);
}

// trapezoid mass of h_t over [-w, w]^(2n+1), steps per axis; n = 1 only.
// values depend on (s, x^2 + y^2), memoized on the lattice
inline double heat_mass_trapezoid(const HeatKernel& k, double t, double w, int steps) {
  if (k.params().n != 1) throw input_error("heat_mass_trapezoid: n = 1 only");
  if (steps < 3 || steps % 2 == 0) throw input_error("heat_mass_trapezoid: odd steps >= 3");
  const double h = 2 * w / (steps - 1);
  const int mid = steps / 2;
  auto wt = [&](int i) { return (i == 0 || i == steps - 1) ? h / 2 : h; };
  std::vector<double> rows(steps);
  parallel_for(steps, [&](std::size_t i) {
    std::map<int, double> memo;
    std::vector<double> acc;
    double s = -w + static_cast<double>(i) * h;
    for (int j = 0; j < steps; ++j)
      for (int l = 0; l < steps; ++l) {
        int a = j - mid, b = l - mid, r = a * a + b * b;
        auto it = memo.find(r);
        double v = it != memo.end() ? it->second : (memo[r] = k.eval_sr(t, s, r * h * h));
        acc.push_back(wt(j) * wt(l) * v);
      }
    rows[i] = wt(static_cast<int>(i)) * pairwise_sum(acc);
  });
  return pairwise_sum(rows);
}

// (t, g) -> h_{t_alpha}(g_alpha), other slot ignored
class HeatEvaluator : public Evaluator {
 public:
  HeatEvaluator(const HeatKernel& k, int alpha) : k_(k), a_(alpha) {}
  cplx eval(const UPoint& q) const override { return k_.eval(q.t(a_), q.g(a_)); }

 private:
  const HeatKernel& k_;
  int a_;
};

}  // namespace heis
