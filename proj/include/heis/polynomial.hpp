#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "group.hpp"
#include "quadrature.hpp"

namespace heis {

// sparse real polynomial in up to 2 kMaxN + 1 variables; exponents packed 7 bits each
class Poly {
 public:
  static constexpr int kBits = 7;
  static constexpr int kMaxVars = 2 * kMaxN + 1;
  using Exps = std::array<int, kMaxVars>;

  explicit Poly(int vars = 1) : d_(vars) {
    if (vars < 1 || vars > kMaxVars) throw input_error("Poly: variable count");
  }
  static Poly constant(int vars, double c) {
    Poly p(vars);
    if (c != 0) p.t_[0] = c;
    return p;
  }
  // c + a u_i
  static Poly affine(int vars, int i, double c, double a) {
    Poly p = constant(vars, c);
    Exps e{};
    e[i] = 1;
    if (a != 0) p.t_[pack(e)] += a;
    return p;
  }

  int vars() const { return d_; }
  std::size_t size() const { return t_.size(); }
  const std::map<std::uint64_t, double>& terms() const { return t_; }

  static std::uint64_t pack(const Exps& e) {
    std::uint64_t k = 0;
    for (int i = kMaxVars - 1; i >= 0; --i) {
      if (e[i] < 0 || e[i] >= (1 << kBits)) throw input_error("Poly: degree overflow");
      k = (k << kBits) | static_cast<std::uint64_t>(e[i]);
    }
    return k;
  }
  static Exps unpack(std::uint64_t k) {
    Exps e{};
    for (int i = 0; i < kMaxVars; ++i) {
      e[i] = static_cast<int>(k & ((1u << kBits) - 1));
      k >>= kBits;
    }
    return e;
  }

  Poly& operator+=(const Poly& o) {
    for (auto& [k, c] : o.t_) t_[k] += c;
    prune();
    return *this;
  }
  Poly operator+(const Poly& o) const {
    Poly r = *this;
    return r += o;
  }
  Poly operator*(double s) const {
    Poly r(d_);
    if (s == 0) return r;
    for (auto& [k, c] : t_) r.t_[k] = c * s;
    return r;
  }
  Poly operator*(const Poly& o) const {
    Poly r(d_);
    for (auto& [a, ca] : t_)
      for (auto& [b, cb] : o.t_) r.t_[a + b] += ca * cb;  // packed fields add without carry
    r.prune();
    return r;
  }
  Poly pow(int e) const {
    Poly r = constant(d_, 1.0);
    for (int k = 0; k < e; ++k) r = r * *this;
    return r;
  }
  Poly derivative(int i) const {
    Poly r(d_);
    for (auto& [k, c] : t_) {
      Exps e = unpack(k);
      if (e[i] == 0) continue;
      double m = e[i];
      --e[i];
      r.t_[pack(e)] += c * m;
    }
    return r;
  }
  int degree(int i) const {
    int m = 0;
    for (auto& [k, c] : t_) m = std::max(m, unpack(k)[i]);
    return m;
  }
  double max_coef() const {
    double m = 0;
    for (auto& [k, c] : t_) m = std::max(m, std::abs(c));
    return m;
  }

  double eval(const double* u) const {
    double acc = 0;
    for (auto& [k, c] : t_) {
      Exps e = unpack(k);
      double v = c;
      for (int i = 0; i < d_; ++i)
        for (int p = 0; p < e[i]; ++p) v *= u[i];
      acc += v;
    }
    return acc;
  }

 private:
  void prune() {
    for (auto it = t_.begin(); it != t_.end();)
      it = it->second == 0 ? t_.erase(it) : std::next(it);
  }
  int d_;
  std::map<std::uint64_t, double> t_;
};

// flat term list for repeated evaluation
struct PolyTable {
  int vars = 1;
  std::vector<Poly::Exps> exps;
  std::vector<double> coef;
  std::array<int, Poly::kMaxVars> maxdeg{};

  PolyTable() = default;
  explicit PolyTable(const Poly& p) : vars(p.vars()) {
    for (auto& [k, c] : p.terms()) {
      exps.push_back(Poly::unpack(k));
      coef.push_back(c);
      for (int i = 0; i < vars; ++i) maxdeg[i] = std::max(maxdeg[i], exps.back()[i]);
    }
  }
  double eval(const double* u) const {
    std::array<std::vector<double>, Poly::kMaxVars> pw;
    for (int i = 0; i < vars; ++i) {
      pw[i].assign(maxdeg[i] + 1, 1.0);
      for (int k = 1; k <= maxdeg[i]; ++k) pw[i][k] = pw[i][k - 1] * u[i];
    }
    double acc = 0;
    for (std::size_t t = 0; t < coef.size(); ++t) {
      double v = coef[t];
      for (int i = 0; i < vars; ++i) v *= pw[i][exps[t][i]];
      acc += v;
    }
    return acc;
  }
};

// smooth compactly supported bump on one factor: prod_a (1 - u_a^2)^5 with
// u_a = (coord_a - center_a) / half_a, coordinates ordered (s, x_1 .. x_2n)
struct FactorBump {
  int n = 1;
  std::array<double, Poly::kMaxVars> center{}, half{};

  int dim() const { return 2 * n + 1; }
  CoordBox support() const {
    CoordBox b;
    b.n = n;
    for (int a = 0; a < dim(); ++a) {
      b.lo[a] = center[a] - half[a];
      b.hi[a] = center[a] + half[a];
    }
    return b;
  }
  void local(const GroupPoint& g, double* u) const {
    u[0] = (g.s - center[0]) / half[0];
    for (int j = 0; j < 2 * n; ++j) u[j + 1] = (g.x(j) - center[j + 1]) / half[j + 1];
  }
  bool inside(const double* u) const {
    for (int a = 0; a < dim(); ++a)
      if (std::abs(u[a]) >= 1) return false;
    return true;
  }

  Poly base() const {
    Poly p = Poly::constant(dim(), 1.0);
    for (int a = 0; a < dim(); ++a) {
      Poly q = Poly::constant(dim(), 1.0) + (Poly::affine(dim(), a, 0.0, 1.0) * Poly::affine(dim(), a, 0.0, 1.0)) * -1.0;
      p = p * q.pow(5);
    }
    return p;
  }
  // X_j in local coordinates, j = 1..2n
  Poly apply_X(int j, const Poly& P) const {
    const int d = dim();
    Poly ds = P.derivative(0) * (1.0 / half[0]);
    if (j <= n) {
      int a = j, b = n + j;  // u index of x_j and x_{n+j}
      Poly coef = Poly::affine(d, b, 2.0 * center[b], 2.0 * half[b]);
      return P.derivative(a) * (1.0 / half[a]) + coef * ds;
    }
    int a = j, b = j - n;
    Poly coef = Poly::affine(d, b, -2.0 * center[b], -2.0 * half[b]);
    return P.derivative(a) * (1.0 / half[a]) + coef * ds;
  }
  Poly apply_sublaplacian(const Poly& P) const {
    Poly acc(dim());
    for (int j = 1; j <= 2 * n; ++j) acc += apply_X(j, apply_X(j, P));
    return acc * (-1.0 / (4.0 * n));
  }
};

namespace detail {
// table of int_lo^hi u^k v(u)^m du, v = alpha u + beta, exact by Gauss-Legendre
inline std::vector<std::vector<double>> mixed_moments(double lo, double hi, double alpha, double beta, int kmax,
                                                      int mmax) {
  int nodes = (kmax + mmax) / 2 + 1;
  const Rule1D& g = gauss_legendre(nodes);
  std::vector<std::vector<double>> M(kmax + 1, std::vector<double>(mmax + 1, 0.0));
  double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  for (int i = 0; i < nodes; ++i) {
    double u = c + h * g.x[i], v = alpha * u + beta, w = h * g.w[i];
    double pu = w;
    for (int k = 0; k <= kmax; ++k) {
      double pv = pu;
      for (int m = 0; m <= mmax; ++m) {
        M[k][m] += pv;
        pv *= v;
      }
      pu *= u;
    }
  }
  return M;
}
}  // namespace detail

// exact int P_A Q_B over the common support of two bumps on the same factor
inline double bump_inner(const FactorBump& A, const PolyTable& P, const FactorBump& B, const PolyTable& Q) {
  const int d = A.dim();
  std::array<std::vector<std::vector<double>>, Poly::kMaxVars> M;
  double jac = 1;
  for (int a = 0; a < d; ++a) {
    double lo = std::max(A.center[a] - A.half[a], B.center[a] - B.half[a]);
    double hi = std::min(A.center[a] + A.half[a], B.center[a] + B.half[a]);
    if (!(hi > lo)) return 0.0;
    // u = (x - cA)/hA ; v = (x - cB)/hB = alpha u + beta
    double ulo = (lo - A.center[a]) / A.half[a], uhi = (hi - A.center[a]) / A.half[a];
    double alpha = A.half[a] / B.half[a], beta = (A.center[a] - B.center[a]) / B.half[a];
    M[a] = detail::mixed_moments(ulo, uhi, alpha, beta, P.maxdeg[a], Q.maxdeg[a]);
    jac *= A.half[a];
  }
  std::vector<double> rows(P.coef.size(), 0.0);
  for (std::size_t p = 0; p < P.coef.size(); ++p) {
    double acc = 0;
    for (std::size_t q = 0; q < Q.coef.size(); ++q) {
      double v = Q.coef[q];
      for (int a = 0; a < d; ++a) v *= M[a][P.exps[p][a]][Q.exps[q][a]];
      acc += v;
    }
    rows[p] = P.coef[p] * acc;
  }
  double s = 0;
  for (double r : rows) s += r;
  return s * jac;
}

}  // namespace heis
