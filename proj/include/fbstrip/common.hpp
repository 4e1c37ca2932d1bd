#pragma once

// Shared small types, error taxonomy and deterministic parallel helpers.
//
// Everything numerical in this library is required to be bit-reproducible
// across runs and across thread counts.  The two rules that make that work:
//   * work is split into blocks whose boundaries never depend on the number
//     of worker threads, and
//   * floating-point reductions always combine per-block partials through a
//     fixed-shape pairwise tree.

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fbstrip {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

// The cubic t^3 - h t^2 + m^2 has no positive root below the first critical
// height; callers asking for one get this.
struct NoRootError : std::domain_error {
  using std::domain_error::domain_error;
};

// A diagnostic has no meaningful value on the given input (empty curve,
// all-sentinel rows, no qualifying samples, ...).
struct NotDefinedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or operation precondition; carries the offending
// field so the CLI can point at it.
struct ConfigError : std::invalid_argument {
  ConfigError(std::string field_, const std::string& what)
      : std::invalid_argument(field_ + ": " + what), field(std::move(field_)) {}
  std::string field;
};

// ---------------------------------------------------------------------------
// deterministic reductions

// Fixed-shape pairwise sum.  The tree depends only on v.size(), never on how
// or by whom the entries were produced.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t mid = v.size() / 2;
  return pairwise_sum(v.first(mid)) + pairwise_sum(v.subspan(mid));
}

// ---------------------------------------------------------------------------
// thread pool

// Persistent fork-join pool.  run_blocks(n, fn) calls fn(b) once for every
// block b in [0, n); blocks are claimed via a shared counter so any worker
// may execute any block.  fn must key its output by block index only; under
// that contract results are independent of the pool size.
class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  void set_threads(int n) {
    n = std::max(1, n);
    std::unique_lock lk(mu_);
    if (n == threads_) return;
    stop_workers(lk);
    threads_ = n;
    stop_ = false;
    for (int i = 0; i + 1 < n; ++i)
      workers_.emplace_back([this] { worker_loop(); });
  }

  int threads() {
    std::lock_guard lk(mu_);
    return threads_;
  }

  void run_blocks(int n_blocks, const std::function<void(int)>& fn) {
    if (n_blocks <= 0) return;
    std::shared_ptr<Job> job;
    {
      std::lock_guard lk(mu_);
      if (!workers_.empty() && n_blocks > 1) {
        job = std::make_shared<Job>();
        job->fn = &fn;
        job->total = n_blocks;
        current_ = job;
        ++generation_;
      }
    }
    if (!job) {
      for (int b = 0; b < n_blocks; ++b) fn(b);
      return;
    }
    cv_.notify_all();
    drain(*job);
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [&] { return job->done.load() == job->total; });
    current_.reset();
  }

  ~ThreadPool() {
    std::unique_lock lk(mu_);
    stop_workers(lk);
  }

 private:
  struct Job {
    const std::function<void(int)>* fn = nullptr;
    std::atomic<int> next{0};
    std::atomic<int> done{0};
    int total = 0;
  };

  void drain(Job& job) {
    int b;
    while ((b = job.next.fetch_add(1)) < job.total) {
      (*job.fn)(b);
      if (job.done.fetch_add(1) + 1 == job.total) {
        std::lock_guard lk(mu_);
        done_cv_.notify_all();
      }
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = current_;
      }
      if (job) drain(*job);
    }
  }

  void stop_workers(std::unique_lock<std::mutex>& lk) {
    stop_ = true;
    cv_.notify_all();
    lk.unlock();
    for (auto& w : workers_) w.join();
    lk.lock();
    workers_.clear();
  }

  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  std::vector<std::thread> workers_;
  std::shared_ptr<Job> current_;
  std::uint64_t generation_ = 0;
  int threads_ = 1;
  bool stop_ = false;
};

// Maps [0, n) into fixed-size chunks and runs fn(begin, end) per chunk on the
// pool.  Chunk size is a constant, so the decomposition (and therefore any
// per-chunk floating-point result) is thread-count independent.
inline constexpr int kRowBlock = 8;

template <class Fn>
void parallel_chunks(int n, Fn&& fn) {
  if (n <= 0) return;
  const int blocks = (n + kRowBlock - 1) / kRowBlock;
  ThreadPool::instance().run_blocks(blocks, [&](int b) {
    const int lo = b * kRowBlock;
    const int hi = std::min(n, lo + kRowBlock);
    fn(b, lo, hi);
  });
}

}  // namespace fbstrip
