#ifndef GAIT_PARALLEL_HPP
#define GAIT_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gait {

// Runs fn(i) for i in [0, count) on up to `jobs` worker threads. Each index
// owns its output slot, so results are identical for every job count. The
// first exception thrown by a worker is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(jobs, count);
  std::vector<std::thread> threads;
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace gait

#endif  // GAIT_PARALLEL_HPP
