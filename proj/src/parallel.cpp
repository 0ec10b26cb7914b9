#include "kapcpd/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace kapcpd {

namespace {
std::size_t env_threads() {
  const char* raw = std::getenv("KAPCPD_THREADS");
  if (raw == nullptr) return 0;
  try {
    const long v = std::stol(raw);
    return v > 0 ? static_cast<std::size_t>(v) : 0;
  } catch (...) {
    return 0;
  }
}
}  // namespace

std::size_t resolve_workers(std::size_t hint) {
  const std::size_t cap = env_threads();
  std::size_t workers = hint;
  if (workers == 0) workers = cap != 0 ? cap : std::max(1u, std::thread::hardware_concurrency());
  if (cap != 0) workers = std::min(workers, cap);
  return std::max<std::size_t>(workers, 1);
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body) {
  workers = std::min(std::max<std::size_t>(workers, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t block = std::max<std::size_t>(1, count / (workers * 8));
  auto run = [&] {
    for (;;) {
      const std::size_t begin = next.fetch_add(block);
      if (begin >= count) return;
      const std::size_t end = std::min(count, begin + block);
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace kapcpd
