#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace heis {

namespace detail {
inline std::atomic<int>& thread_setting() {
  static std::atomic<int> v{0};
  return v;
}
}  // namespace detail

// 0 = hardware concurrency
inline void set_threads(int n) { detail::thread_setting() = std::max(0, n); }
inline int threads() {
  int t = detail::thread_setting();
  if (t > 0) return t;
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : static_cast<int>(h);
}

// static chunking; f(i) must only write to slot i
template <class F>
void parallel_for(std::size_t count, F&& f) {
  int nt = std::min<std::size_t>(threads(), count == 0 ? 1 : count);
  if (nt <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) {
    std::size_t b = count * t / nt, e = count * (t + 1) / nt;
    pool.emplace_back([&, b, e] {
      try {
        for (std::size_t i = b; i < e; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(m);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// order-fixed tree reduction
template <class T>
T pairwise_sum(const T* v, std::size_t n) {
  if (n == 0) return T{};
  if (n <= 8) {
    T acc = v[0];
    for (std::size_t i = 1; i < n; ++i) acc += v[i];
    return acc;
  }
  std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}
template <class T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(v.data(), v.size());
}

template <class T, class F>
std::vector<T> parallel_map(std::size_t count, F&& f) {
  std::vector<T> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

}  // namespace heis
