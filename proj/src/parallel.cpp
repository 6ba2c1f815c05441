#include "wellprobe/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wellprobe {

namespace {
std::atomic<unsigned> g_workers{0};
}

unsigned default_workers() {
  const unsigned set = g_workers.load();
  if (set > 0) return set;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_workers(unsigned workers) { g_workers.store(workers); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned workers) {
  if (n == 0) return;
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr error;
  std::size_t error_index = n;

  auto drain = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };

  if (workers <= 1) {
    drain();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(drain);
    drain();
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace wellprobe
