#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace fplab {

// Runs fn(0..ntasks-1) on up to `jobs` threads and returns results in task
// order. Tasks must derive all randomness from their index, so the outcome is
// identical for every worker count.
template <typename T>
std::vector<T> parallel_map(int jobs, size_t ntasks, const std::function<T(size_t)>& fn) {
  std::vector<T> results(ntasks);
  if (jobs <= 1 || ntasks <= 1) {
    for (size_t i = 0; i < ntasks; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= ntasks) return;
      results[i] = fn(i);
    }
  };
  std::vector<std::thread> threads;
  const size_t nthreads = std::min<size_t>(jobs, ntasks);
  threads.reserve(nthreads);
  for (size_t t = 0; t < nthreads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return results;
}

}  // namespace fplab
