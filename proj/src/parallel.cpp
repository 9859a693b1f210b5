#include "fragsim/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace fragsim {

namespace {

int default_threads() {
  if (const char* env = std::getenv("FRAGSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int> g_threads{0};

}  // namespace

int parallel_threads() {
  int n = g_threads.load();
  if (n == 0) {
    n = default_threads();
    g_threads.store(n);
  }
  return n;
}

void set_parallel_threads(int n) { g_threads.store(n < 1 ? 1 : n); }

void parallel_for(int begin, int end, const std::function<void(int, int)>& body) {
  const int count = end - begin;
  if (count <= 0) return;
  const int workers = std::min(parallel_threads(), count);
  if (workers == 1) {
    for (int i = begin; i < end; ++i) body(i, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      const int chunk = (count + workers - 1) / workers;
      const int lo = begin + w * chunk;
      const int hi = std::min(end, lo + chunk);
      try {
        for (int i = lo; i < hi; ++i) body(i, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fragsim
