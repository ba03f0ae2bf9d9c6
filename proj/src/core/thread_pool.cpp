#include "layerpainter/thread_pool.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>

#include "layerpainter/errors.hpp"

namespace lp {

struct ThreadPool::Job {
  std::size_t count = 0;
  const std::function<void(std::size_t)>* fn = nullptr;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::vector<std::exception_ptr> errors;
  std::mutex done_mutex;
  std::condition_variable done_cv;

  // Claims and runs indices until none are left.
  void drain() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        (*fn)(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
      if (done.fetch_add(1) + 1 == count) {
        std::lock_guard lock(done_mutex);
        done_cv.notify_all();
      }
    }
  }
};

ThreadPool::ThreadPool(std::size_t workers) {
  if (workers == 0) throw ConfigError("thread pool needs at least one worker");
  threads_.reserve(workers - 1);
  for (std::size_t i = 0; i + 1 < workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop() {
  for (;;) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_ && queue_.empty()) return;
      job = queue_.front();
      // Leave the job queued while indices remain so other idle workers join in.
      if (job->next.load() >= job->count) queue_.pop_front();
    }
    job->drain();
    std::lock_guard lock(mutex_);
    if (!queue_.empty() && queue_.front() == job) queue_.pop_front();
  }
}

void ThreadPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  auto job = std::make_shared<Job>();
  job->count = n;
  job->fn = &fn;
  job->errors.resize(n);
  if (!threads_.empty() && n > 1) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(job);
    }
    wake_.notify_all();
  }
  job->drain();
  {
    std::unique_lock lock(job->done_mutex);
    job->done_cv.wait(lock, [&] { return job->done.load() == n; });
  }
  {
    std::lock_guard lock(mutex_);
    for (auto it = queue_.begin(); it != queue_.end(); ++it) {
      if (*it == job) {
        queue_.erase(it);
        break;
      }
    }
  }
  for (auto& e : job->errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::size_t default_worker_count() {
  if (const char* env = std::getenv("LAYER_PAINTER_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("LAYER_PAINTER_THREADS must be a positive integer, got '") + env + "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace lp
