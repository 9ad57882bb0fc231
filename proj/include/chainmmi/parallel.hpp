// chainmmi/parallel.hpp

// Copyright 2026  The chainmmi Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CHAINMMI_PARALLEL_HPP_
#define CHAINMMI_PARALLEL_HPP_

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace chainmmi {

/// Fixed-size pool for fork-join loops.  ParallelFor splits [0, n) into one
/// contiguous chunk per thread; the caller runs chunk 0.  Each index is
/// executed exactly once, so work that owns its output cell is
/// deterministic regardless of the thread count.
class ThreadPool {
 public:
  /// num_threads = 0 selects std::thread::hardware_concurrency().
  explicit ThreadPool(std::size_t num_threads = 0) {
    if (num_threads == 0)
      num_threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    num_threads_ = num_threads;
    for (std::size_t i = 1; i < num_threads_; ++i)
      workers_.emplace_back([this, i] { WorkerLoop(i); });
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    start_cv_.notify_all();
    for (auto &w : workers_) w.join();
  }

  ThreadPool(const ThreadPool &) = delete;
  ThreadPool &operator=(const ThreadPool &) = delete;

  std::size_t NumThreads() const { return num_threads_; }

  void ParallelFor(std::size_t n, const std::function<void(std::size_t)> &fn) {
    if (n == 0) return;
    if (num_threads_ == 1 || n == 1) {
      for (std::size_t i = 0; i < n; ++i) fn(i);
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      fn_ = &fn;
      n_ = n;
      pending_ = num_threads_ - 1;
      error_ = nullptr;
      ++generation_;
    }
    start_cv_.notify_all();
    std::exception_ptr mine;
    try {
      RunChunk(0);
    } catch (...) {
      mine = std::current_exception();
    }
    std::unique_lock<std::mutex> lock(mu_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    fn_ = nullptr;
    if (mine) std::rethrow_exception(mine);
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void RunChunk(std::size_t chunk) {
    const std::size_t per = (n_ + num_threads_ - 1) / num_threads_;
    const std::size_t begin = std::min(n_, chunk * per);
    const std::size_t end = std::min(n_, begin + per);
    for (std::size_t i = begin; i < end; ++i) (*fn_)(i);
  }

  void WorkerLoop(std::size_t chunk) {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lock(mu_);
        start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      std::exception_ptr err;
      try {
        RunChunk(chunk);
      } catch (...) {
        err = std::current_exception();
      }
      {
        std::lock_guard<std::mutex> lock(mu_);
        if (err && !error_) error_ = err;
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  std::size_t num_threads_ = 1;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)> *fn_ = nullptr;
  std::size_t n_ = 0;
  std::size_t pending_ = 0;
  std::size_t generation_ = 0;
  std::exception_ptr error_;
  bool stop_ = false;
};

}  // namespace chainmmi

#endif  // CHAINMMI_PARALLEL_HPP_
