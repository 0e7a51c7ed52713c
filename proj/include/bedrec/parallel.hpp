#pragma once

#include <atomic>
#include <condition_variable>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace bedrec {

/// Long-lived worker pool for index-parallel jobs. Work items write to
/// caller-owned slots, so results are independent of scheduling; any
/// floating-point reduction happens serially in the caller afterwards.
class WorkerPool {
public:
    explicit WorkerPool(int threads) {
        const int count = std::max(1, threads);
        workers_.reserve(static_cast<std::size_t>(count));
        for (int t = 0; t < count; ++t) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    ~WorkerPool() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            shutdown_ = true;
        }
        wake_.notify_all();
        for (std::thread& t : workers_) t.join();
    }

    int thread_count() const { return static_cast<int>(workers_.size()); }

    /// Runs fn(i) for i in [0, n); blocks until all items finish. Rethrows
    /// the first exception raised by any item.
    void run(std::size_t n, const std::function<void(std::size_t)>& fn) {
        if (n == 0) return;
        if (workers_.size() == 1 || n == 1) {
            for (std::size_t i = 0; i < n; ++i) fn(i);
            return;
        }
        std::unique_lock<std::mutex> lock(mutex_);
        job_ = &fn;
        total_ = n;
        next_.store(0, std::memory_order_relaxed);
        done_count_ = 0;
        error_ = nullptr;
        ++generation_;
        lock.unlock();
        wake_.notify_all();

        lock.lock();
        // Wait until every item ran AND every participating worker has left
        // the dispatch loop, so the job/function storage can be reused.
        done_.wait(lock, [this] { return done_count_ == total_ && active_ == 0; });
        job_ = nullptr;
        if (error_) std::rethrow_exception(error_);
    }

private:
    void worker_loop() {
        std::uint64_t seen = 0;
        while (true) {
            const std::function<void(std::size_t)>* job = nullptr;
            {
                std::unique_lock<std::mutex> lock(mutex_);
                wake_.wait(lock, [&] { return shutdown_ || generation_ != seen; });
                if (shutdown_) return;
                seen = generation_;
                job = job_;
                ++active_;
            }
            std::size_t completed = 0;
            std::exception_ptr first_error = nullptr;
            while (true) {
                const std::size_t i = next_.fetch_add(1, std::memory_order_relaxed);
                if (i >= total_) break;
                try {
                    (*job)(i);
                } catch (...) {
                    if (!first_error) first_error = std::current_exception();
                }
                ++completed;
            }
            {
                std::lock_guard<std::mutex> lock(mutex_);
                done_count_ += completed;
                if (first_error && !error_) error_ = first_error;
                --active_;
                if (done_count_ == total_ && active_ == 0) done_.notify_all();
            }
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t)>* job_ = nullptr;
    std::size_t total_ = 0;
    std::atomic<std::size_t> next_{0};
    std::size_t done_count_ = 0;
    int active_ = 0;
    std::exception_ptr error_ = nullptr;
    std::uint64_t generation_ = 0;
    bool shutdown_ = false;
};

}  // namespace bedrec
