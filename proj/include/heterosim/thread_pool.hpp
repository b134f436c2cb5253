#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace heterosim {

// Runs `jobs` on up to `workers` threads. Results land in caller-owned slots,
// so output ordering is deterministic regardless of scheduling.
inline void parallel_run(std::vector<std::function<void()>> jobs, int workers) {
  if (workers <= 1 || jobs.size() <= 1) {
    for (auto& j : jobs) j();
    return;
  }
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      jobs[k]();
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(workers, static_cast<int>(jobs.size()));
  pool.reserve(n);
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace heterosim
