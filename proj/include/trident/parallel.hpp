// Copyright 2026 Trident Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the license.

#ifndef TRIDENT_PARALLEL_HPP
#define TRIDENT_PARALLEL_HPP

#include <algorithm>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace trident {

// Static-partition fork/join pool. Each index is processed by exactly one
// worker and every worker runs its indices in ascending order, so results are
// bitwise independent of the worker count.
class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  void set_workers(int n) {
    std::lock_guard<std::mutex> lk(api_mutex_);
    stop_workers();
    workers_target_ = std::max(1, n);
    start_workers();
  }

  int workers() const { return workers_target_; }

  // f(i) for i in [0, n); blocks until done. Exceptions in workers are
  // rethrown on the calling thread.
  void parallel_for(int n, const std::function<void(int)>& f) {
    if (n <= 0) return;
    std::lock_guard<std::mutex> lk(api_mutex_);
    if (workers_target_ <= 1 || n == 1) {
      for (int i = 0; i < n; ++i) f(i);
      return;
    }
    {
      std::unique_lock<std::mutex> jl(job_mutex_);
      job_fn_ = &f;
      job_n_ = n;
      job_done_ = 0;
      job_error_ = nullptr;
      ++job_epoch_;
    }
    job_cv_.notify_all();
    // The caller takes chunk 0.
    run_chunk(0, n, f);
    {
      std::unique_lock<std::mutex> jl(job_mutex_);
      done_cv_.wait(jl, [&] { return job_done_ == workers_target_ - 1; });
      job_fn_ = nullptr;
      if (job_error_) std::rethrow_exception(job_error_);
    }
  }

  ~ThreadPool() { stop_workers(); }

 private:
  ThreadPool() {
    unsigned hw = std::thread::hardware_concurrency();
    workers_target_ = static_cast<int>(std::clamp(hw, 1u, 16u));
    start_workers();
  }

  void run_chunk(int rank, int n, const std::function<void(int)>& f) {
    const int nw = workers_target_;
    const int chunk = (n + nw - 1) / nw;
    const int lo = rank * chunk;
    const int hi = std::min(n, lo + chunk);
    try {
      for (int i = lo; i < hi; ++i) f(i);
    } catch (...) {
      std::lock_guard<std::mutex> jl(job_mutex_);
      if (!job_error_) job_error_ = std::current_exception();
    }
  }

  void worker_main(int rank) {
    std::uint64_t seen_epoch = 0;
    for (;;) {
      const std::function<void(int)>* fn = nullptr;
      int n = 0;
      {
        std::unique_lock<std::mutex> jl(job_mutex_);
        job_cv_.wait(jl, [&] { return shutdown_ || (job_fn_ && job_epoch_ != seen_epoch); });
        if (shutdown_) return;
        seen_epoch = job_epoch_;
        fn = job_fn_;
        n = job_n_;
      }
      run_chunk(rank, n, *fn);
      {
        std::lock_guard<std::mutex> jl(job_mutex_);
        ++job_done_;
      }
      done_cv_.notify_one();
    }
  }

  void start_workers() {
    shutdown_ = false;
    for (int r = 1; r < workers_target_; ++r)
      threads_.emplace_back([this, r] { worker_main(r); });
  }

  void stop_workers() {
    {
      std::lock_guard<std::mutex> jl(job_mutex_);
      shutdown_ = true;
    }
    job_cv_.notify_all();
    for (auto& t : threads_) t.join();
    threads_.clear();
  }

  std::mutex api_mutex_;
  std::mutex job_mutex_;
  std::condition_variable job_cv_, done_cv_;
  std::vector<std::thread> threads_;
  const std::function<void(int)>* job_fn_ = nullptr;
  int job_n_ = 0;
  int job_done_ = 0;
  std::uint64_t job_epoch_ = 0;
  std::exception_ptr job_error_;
  bool shutdown_ = false;
  int workers_target_ = 1;
};

inline void parallel_for(int n, const std::function<void(int)>& f) {
  ThreadPool::instance().parallel_for(n, f);
}

inline void set_compute_threads(int n) { ThreadPool::instance().set_workers(n); }
inline int compute_threads() { return ThreadPool::instance().workers(); }

}  // namespace trident

#endif  // TRIDENT_PARALLEL_HPP
