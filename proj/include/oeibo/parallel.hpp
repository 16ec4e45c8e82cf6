// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace oeibo {

/// Number of workers to use for `requested` parallel tasks, honoring the
/// OEI_BO_THREADS environment cap.
inline int worker_count(int requested, int tasks) {
  int cap = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (cap <= 0) cap = 1;
  if (const char* env = std::getenv("OEI_BO_THREADS")) {
    const int env_cap = std::atoi(env);
    if (env_cap > 0 && env_cap < cap) cap = env_cap;
  }
  return std::max(1, std::min(cap, tasks));
}

/// Runs fn(0..count-1) on a small worker pool. Tasks must not share mutable
/// state; results keyed by index stay deterministic regardless of scheduling.
inline void parallel_for_index(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  const int workers = worker_count(threads, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace oeibo
