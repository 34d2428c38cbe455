#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pcgen {

// Fixed-size pool used by the dense kernels. Work is split by static row
// partition, so results are bit-identical for any thread count.
class ThreadPool {
  public:
    explicit ThreadPool(int threads) {
        threads = threads < 1 ? 1 : threads;
        for (int i = 1; i < threads; ++i) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    ~ThreadPool() {
        {
            std::unique_lock<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& w : workers_) w.join();
    }

    int size() const { return static_cast<int>(workers_.size()) + 1; }

    // Runs fn(chunk) for chunk = 0..chunks-1; the calling thread participates.
    // Blocks until all chunks finish. Concurrent callers are serialized.
    void run_chunks(int chunks, const std::function<void(int)>& fn) {
        if (chunks <= 1 || workers_.empty()) {
            for (int c = 0; c < chunks; ++c) fn(c);
            return;
        }
        std::lock_guard<std::mutex> serial(run_mu_);
        {
            std::unique_lock<std::mutex> lk(mu_);
            job_ = &fn;
            next_chunk_ = 0;
            total_chunks_ = chunks;
            pending_ = chunks;
            ++generation_;
        }
        cv_.notify_all();
        drain();
        std::unique_lock<std::mutex> lk(mu_);
        done_cv_.wait(lk, [this] { return pending_ == 0; });
        job_ = nullptr;
    }

  private:
    void drain() {
        for (;;) {
            int c;
            const std::function<void(int)>* fn;
            {
                std::unique_lock<std::mutex> lk(mu_);
                if (!job_ || next_chunk_ >= total_chunks_) return;
                c = next_chunk_++;
                fn = job_;
            }
            (*fn)(c);
            std::unique_lock<std::mutex> lk(mu_);
            if (--pending_ == 0) done_cv_.notify_all();
        }
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
            }
            drain();
        }
    }

    std::vector<std::thread> workers_;
    std::mutex run_mu_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const std::function<void(int)>* job_ = nullptr;
    int next_chunk_ = 0;
    int total_chunks_ = 0;
    int pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

// Process-wide pool for the numeric kernels. 0 keeps the current size
// (initially hardware_concurrency).
ThreadPool& global_pool();
void set_global_threads(int threads);

// Static partition of [0, n) into roughly even contiguous ranges.
template <typename Fn>
void parallel_ranges(std::int64_t n, Fn&& fn) {
    ThreadPool& pool = global_pool();
    const int chunks = static_cast<int>(std::min<std::int64_t>(pool.size(), n));
    if (chunks <= 1) {
        if (n > 0) fn(std::int64_t{0}, n);
        return;
    }
    pool.run_chunks(chunks, [&](int c) {
        const std::int64_t lo = n * c / chunks;
        const std::int64_t hi = n * (c + 1) / chunks;
        if (lo < hi) fn(lo, hi);
    });
}

}  // namespace pcgen
