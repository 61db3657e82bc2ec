#include "hdinfer/parallel.hpp"

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace hdinfer {

namespace {
std::atomic<int> g_max_threads{0};
thread_local bool t_inside_parallel = false;
}

void set_max_threads(int threads) { g_max_threads.store(threads < 0 ? 0 : threads); }

int max_threads() {
  const int cap = g_max_threads.load();
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int def = hw > 0 ? hw : 1;
  return cap > 0 ? cap : def;
}

void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn) {
  if (begin >= end) return;
  const std::size_t total = end - begin;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(max_threads()), total);

  // Nested calls run serially; the outer loop already owns the workers.
  if (workers <= 1 || t_inside_parallel) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }

  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);

  const std::size_t chunk = (total + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&, w, lo, hi]() {
      t_inside_parallel = true;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace hdinfer
