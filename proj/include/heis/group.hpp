#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace heis {

using cplx = std::complex<double>;

struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxN = 4;

struct GroupParams {
  int n = 1;
  int Q = 4;
  static GroupParams of(int n) {
    if (n < 1 || n > kMaxN) throw input_error("GroupParams: n out of range");
    return {n, 2 * n + 2};
  }
};

// point (s, z) of H_n, z stored inline
struct GroupPoint {
  int n = 1;
  double s = 0.0;
  std::array<cplx, kMaxN> z{};

  GroupPoint() = default;
  explicit GroupPoint(int dim) : n(dim) {
    if (dim < 1 || dim > kMaxN) throw input_error("GroupPoint: n out of range");
  }
  GroupPoint(double s_, std::initializer_list<cplx> zs) : n(static_cast<int>(zs.size())), s(s_) {
    if (n < 1 || n > kMaxN) throw input_error("GroupPoint: n out of range");
    int j = 0;
    for (auto v : zs) z[j++] = v;
  }
  static GroupPoint identity(int dim) { return GroupPoint(dim); }

  // real coordinates x_1..x_2n: z_j = x_j + i x_{n+j}
  double x(int j) const { return j < n ? z[j].real() : z[j - n].imag(); }
  void set_x(int j, double v) {
    if (j < n) z[j].real(v);
    else z[j - n].imag(v);
  }
  double z_norm2() const {
    double r = 0;
    for (int j = 0; j < n; ++j) r += std::norm(z[j]);
    return r;
  }
  bool finite() const {
    if (!std::isfinite(s)) return false;
    for (int j = 0; j < n; ++j)
      if (!std::isfinite(z[j].real()) || !std::isfinite(z[j].imag())) return false;
    return true;
  }
  bool operator==(const GroupPoint& o) const {
    if (n != o.n || s != o.s) return false;
    for (int j = 0; j < n; ++j)
      if (z[j] != o.z[j]) return false;
    return true;
  }
};

// <z, w> = sum z_j conj(w_j)
inline cplx hermitian(const GroupPoint& a, const GroupPoint& b) {
  cplx r = 0;
  for (int j = 0; j < a.n; ++j) r += a.z[j] * std::conj(b.z[j]);
  return r;
}

inline void check_dims(const GroupPoint& a, const GroupPoint& b) {
  if (a.n != b.n) throw input_error("dimension mismatch");
}

inline GroupPoint multiply(const GroupPoint& a, const GroupPoint& b) {
  check_dims(a, b);
  GroupPoint r(a.n);
  r.s = a.s + b.s + 2.0 * hermitian(a, b).imag();
  for (int j = 0; j < a.n; ++j) r.z[j] = a.z[j] + b.z[j];
  return r;
}

inline GroupPoint inverse(const GroupPoint& a) {
  GroupPoint r(a.n);
  r.s = -a.s;
  for (int j = 0; j < a.n; ++j) r.z[j] = -a.z[j];
  return r;
}

inline double norm(const GroupPoint& a) {
  double z2 = a.z_norm2();
  return std::pow(z2 * z2 + a.s * a.s, 0.25);
}

inline GroupPoint dilate(double r, const GroupPoint& a) {
  if (!(r > 0)) throw input_error("dilate: r must be positive");
  GroupPoint out(a.n);
  out.s = r * r * a.s;
  for (int j = 0; j < a.n; ++j) out.z[j] = r * a.z[j];
  return out;
}

inline double distance(const GroupPoint& g, const GroupPoint& h) {
  check_dims(g, h);
  return norm(multiply(inverse(h), g));
}

struct ProductPoint {
  GroupPoint g1;
  GroupPoint g2;
};

struct BiDilation {
  double r1 = 1.0;
  double r2 = 1.0;
  BiDilation() = default;
  BiDilation(double a, double b) : r1(a), r2(b) {
    if (!(a > 0) || !(b > 0)) throw input_error("BiDilation: radii must be positive");
  }
};

inline ProductPoint bi_dilate(const BiDilation& r, const ProductPoint& p) {
  return {dilate(r.r1, p.g1), dilate(r.r2, p.g2)};
}
inline ProductPoint product_multiply(const ProductPoint& a, const ProductPoint& b) {
  return {multiply(a.g1, b.g1), multiply(a.g2, b.g2)};
}
inline ProductPoint product_inverse(const ProductPoint& a) {
  return {inverse(a.g1), inverse(a.g2)};
}
inline std::pair<double, double> product_norm_pair(const ProductPoint& a) {
  return {norm(a.g1), norm(a.g2)};
}

// axis-aligned box in (s, x_1..x_2n); Haar measure is Lebesgue
struct CoordBox {
  int n = 1;
  double lo[2 * kMaxN + 1]{};
  double hi[2 * kMaxN + 1]{};
  int dim() const { return 2 * n + 1; }
  double volume() const {
    double v = 1;
    for (int a = 0; a < dim(); ++a) v *= hi[a] - lo[a];
    return v;
  }
};

// delta_r of a box is again a box
inline CoordBox dilate(double r, const CoordBox& b) {
  if (!(r > 0)) throw input_error("dilate: r must be positive");
  CoordBox o = b;
  o.lo[0] = r * r * b.lo[0];
  o.hi[0] = r * r * b.hi[0];
  for (int a = 1; a < b.dim(); ++a) {
    o.lo[a] = r * b.lo[a];
    o.hi[a] = r * b.hi[a];
  }
  return o;
}

}  // namespace heis
