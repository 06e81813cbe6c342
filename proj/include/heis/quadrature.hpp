#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "group.hpp"

namespace heis {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
  std::size_t size() const { return x.size(); }
};

namespace detail {
inline Rule1D compute_gauss_legendre(int n) {
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1);
    double w = 2.0 / ((1 - x * x) * dp * dp);
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}
}  // namespace detail

// nodes on [-1, 1], ascending; cached
inline const Rule1D& gauss_legendre(int n) {
  if (n < 1) throw input_error("gauss_legendre: n >= 1");
  static std::mutex m;
  static std::map<int, Rule1D> cache;
  std::lock_guard<std::mutex> lk(m);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
  return it->second;
}

inline Rule1D composite_gl(double a, double b, int panels, int order) {
  const Rule1D& g = gauss_legendre(order);
  Rule1D r;
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double c = a + (p + 0.5) * h;
    for (int i = 0; i < order; ++i) {
      r.x.push_back(c + 0.5 * h * g.x[i]);
      r.w.push_back(0.5 * h * g.w[i]);
    }
  }
  return r;
}

// x = c + L sinh(u), u in [-U, U]; for slowly decaying integrands on the line
inline Rule1D sinh_rule(double c, double L, double U, int panels, int order) {
  Rule1D u = composite_gl(-U, U, panels, order);
  Rule1D r;
  for (std::size_t i = 0; i < u.size(); ++i) {
    r.x.push_back(c + L * std::sinh(u.x[i]));
    r.w.push_back(u.w[i] * L * std::cosh(u.x[i]));
  }
  return r;
}

// trapezoid on a uniform lattice of `steps` points
inline Rule1D trapezoid(double a, double b, int steps) {
  Rule1D r;
  double h = (b - a) / (steps - 1);
  for (int i = 0; i < steps; ++i) {
    r.x.push_back(a + i * h);
    r.w.push_back((i == 0 || i == steps - 1) ? 0.5 * h : h);
  }
  return r;
}

}  // namespace heis
