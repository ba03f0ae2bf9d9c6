#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace lp {

// Fixed-size pool. parallel_for runs on `workers` threads in total: the
// calling thread takes part, so workers == 1 spawns nothing and runs inline.
// Nested parallel_for calls from inside a task are safe; the caller drains
// the index range itself when every worker is busy.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t workers);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t workers() const noexcept { return threads_.size() + 1; }

  // Calls fn(i) for every i in [0, n) and blocks until all calls return. If
  // any call throws, the exception from the lowest index is rethrown.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

 private:
  struct Job;

  void worker_loop();

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<std::shared_ptr<Job>> queue_;
  bool stopping_ = false;
};

// Worker count from LAYER_PAINTER_THREADS, else hardware concurrency (min 1).
std::size_t default_worker_count();

}  // namespace lp
