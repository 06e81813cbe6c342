#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "calculus.hpp"

namespace heis {

// "HHGF" | u32 version | u32 rank | u64 dims[rank] | u8 flags | [f64 min,max per axis] | payload | [mask bytes]
// flags: bit0 complex (re, im interleaved), bit1 axis bounds, bit2 validity mask. All little-endian, row-major.
inline constexpr std::uint32_t kGridVersion = 1;

namespace detail {

struct ByteWriter {
  std::vector<unsigned char> b;
  void u8(std::uint8_t v) { b.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
};

struct ByteReader {
  const std::vector<unsigned char>& b;
  std::size_t pos = 0;
  void need(std::size_t k) const {
    if (b.size() - pos < k) throw format_error("grid file: truncated");
  }
  std::uint8_t u8() {
    need(1);
    return b[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[pos++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[pos++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace detail

inline std::vector<unsigned char> encode_grid(const GridFunction& u) {
  const FactorGrid& g = u.grid;
  detail::ByteWriter w;
  for (char c : {'H', 'H', 'G', 'F'}) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kGridVersion);
  w.u32(static_cast<std::uint32_t>(g.rank()));
  for (int a = 0; a < g.rank(); ++a) w.u64(static_cast<std::uint64_t>(g.axis(a).steps));
  bool cplx_data = false, masked = false;
  for (auto& v : u.values) cplx_data = cplx_data || std::bit_cast<std::uint64_t>(v.imag()) != 0;
  for (auto m : u.valid) masked = masked || m != 1;
  w.u8(static_cast<std::uint8_t>((cplx_data ? 1 : 0) | 2 | (masked ? 4 : 0)));
  for (int a = 0; a < g.rank(); ++a) {
    w.f64(g.axis(a).min);
    w.f64(g.axis(a).max);
  }
  for (auto& v : u.values) {
    w.f64(v.real());
    if (cplx_data) w.f64(v.imag());
  }
  if (masked)
    for (auto m : u.valid) w.u8(m);
  return w.b;
}

inline GridFunction decode_grid(const std::vector<unsigned char>& bytes) {
  detail::ByteReader r{bytes};
  const char magic[4] = {'H', 'H', 'G', 'F'};
  for (char c : magic)
    if (r.u8() != static_cast<std::uint8_t>(c)) throw format_error("grid file: bad magic");
  if (r.u32() != kGridVersion) throw format_error("grid file: unsupported version");
  std::uint32_t rank = r.u32();
  if (rank < 3 || rank > 2 * kMaxN + 1 || rank % 2 == 0) throw format_error("grid file: bad rank");
  std::vector<std::uint64_t> dims(rank);
  std::uint64_t total = 1;
  for (auto& d : dims) {
    d = r.u64();
    if (d < 3 || d > (1u << 24)) throw format_error("grid file: bad dims");
    total *= d;
    if (total > (std::uint64_t(1) << 32)) throw format_error("grid file: bad dims");
  }
  std::uint8_t flags = r.u8();
  if (flags & ~7u) throw format_error("grid file: unknown flags");
  std::vector<std::pair<double, double>> bounds(rank, {0.0, 1.0});
  if (flags & 2)
    for (auto& b : bounds) {
      b.first = r.f64();
      b.second = r.f64();
    }
  const bool cplx_data = flags & 1, masked = flags & 4;
  r.need(total * (cplx_data ? 16 : 8) + (masked ? total : 0));
  FactorGrid g;
  g.n = static_cast<int>((rank - 1) / 2);
  g.s = {bounds[0].first, bounds[0].second, static_cast<int>(dims[0])};
  for (std::uint32_t a = 1; a < rank; ++a) g.x.push_back({bounds[a].first, bounds[a].second, static_cast<int>(dims[a])});
  try {
    g.validate();
  } catch (const input_error& e) {
    throw format_error(std::string("grid file: ") + e.what());
  }
  GridFunction u(g);
  for (auto& v : u.values) {
    double re = r.f64();
    v = cplx(re, cplx_data ? r.f64() : 0.0);
  }
  if (masked)
    for (auto& m : u.valid) m = r.u8();
  if (r.pos != bytes.size()) throw format_error("grid file: trailing bytes");
  return u;
}

inline void save_grid(const std::string& path, const GridFunction& u) {
  auto bytes = encode_grid(u);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_grid: cannot open '" + path + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("save_grid: write failed");
}

inline GridFunction load_grid(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw format_error("load_grid: cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_grid(bytes);
}

}  // namespace heis
