#include "ddtest/parallel.hpp"

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace ddtest {

namespace {
std::atomic<int> g_max_threads{0};
thread_local bool t_in_worker = false;
}  // namespace

void set_max_threads(int threads) { g_max_threads.store(threads < 0 ? 0 : threads); }

int max_threads() {
  int t = g_max_threads.load();
  if (t == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    t = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return t;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t workers =
      t_in_worker ? 1 : std::min<std::size_t>(static_cast<std::size_t>(max_threads()), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      t_in_worker = true;
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) break;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          break;
        }
      }
      t_in_worker = false;
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace ddtest
