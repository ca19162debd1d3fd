#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace cubicdyn {

/// Worker cap from CUBICDYN_THREADS: 0 (or 1) means serial; unset means the
/// hardware concurrency.
inline std::size_t thread_cap() {
  if (const char* env = std::getenv("CUBICDYN_THREADS")) {
    try {
      const long v = std::stol(env);
      return v <= 0 ? 1 : static_cast<std::size_t>(v);
    } catch (...) {
      return 1;
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// out[i] = fn(i). Each task only writes its own slot, so the result does
/// not depend on scheduling.
template <class T, class F>
std::vector<T> parallel_map(std::size_t count, F&& fn, std::size_t threads = thread_cap()) {
  std::vector<T> out(count);
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += threads) {
        try {
          out[i] = fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace cubicdyn
