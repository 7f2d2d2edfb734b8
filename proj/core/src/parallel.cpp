#include "mesh/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace mesh {
namespace {

class ThreadPool {
public:
    explicit ThreadPool(unsigned n_workers) {
        for (unsigned i = 0; i < n_workers; ++i) workers_.emplace_back([this] { loop(); });
    }

    ~ThreadPool() {
        {
            std::lock_guard lock(mutex_);
            stop_ = true;
        }
        wake_.notify_all();
        for (auto& w : workers_) w.join();
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    void run(std::size_t n_tasks, const std::function<void(std::size_t)>& fn) {
        std::unique_lock batch_lock(batch_mutex_);
        {
            std::lock_guard lock(mutex_);
            fn_ = &fn;
            n_tasks_ = n_tasks;
            next_.store(0);
            pending_ = workers_.size();
            error_ = nullptr;
            ++generation_;
        }
        wake_.notify_all();
        drain();
        std::unique_lock lock(mutex_);
        done_.wait(lock, [this] { return pending_ == 0; });
        fn_ = nullptr;
        if (error_) std::rethrow_exception(error_);
    }

private:
    void drain() {
        for (;;) {
            const std::size_t task = next_.fetch_add(1);
            if (task >= n_tasks_) return;
            try {
                (*fn_)(task);
            } catch (...) {
                std::lock_guard lock(mutex_);
                if (!error_) error_ = std::current_exception();
            }
        }
    }

    void loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock lock(mutex_);
                wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
            }
            drain();
            {
                std::lock_guard lock(mutex_);
                --pending_;
            }
            done_.notify_one();
        }
    }

    std::vector<std::thread> workers_;
    std::mutex batch_mutex_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t)>* fn_ = nullptr;
    std::size_t n_tasks_ = 0;
    std::atomic<std::size_t> next_{0};
    std::size_t pending_ = 0;
    std::uint64_t generation_ = 0;
    std::exception_ptr error_;
    bool stop_ = false;
};

std::mutex g_pool_mutex;
unsigned g_threads = std::max(1u, std::thread::hardware_concurrency());
std::shared_ptr<ThreadPool> g_pool;

std::shared_ptr<ThreadPool> pool() {
    std::lock_guard lock(g_pool_mutex);
    if (g_threads <= 1) return nullptr;
    if (!g_pool) g_pool = std::make_shared<ThreadPool>(g_threads - 1);
    return g_pool;
}

thread_local bool t_inside_parallel = false;

}  // namespace

void set_thread_count(unsigned n) {
    std::lock_guard lock(g_pool_mutex);
    n = std::max(1u, n);
    if (n != g_threads) {
        g_threads = n;
        g_pool.reset();
    }
}

unsigned thread_count() {
    std::lock_guard lock(g_pool_mutex);
    return g_threads;
}

void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& fn) {
    if (n_tasks == 0) return;
    auto p = (n_tasks > 1 && !t_inside_parallel) ? pool() : nullptr;
    if (!p) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    // Nested calls from inside a task run serially on the calling worker.
    const std::function<void(std::size_t)> guarded = [&fn](std::size_t i) {
        const bool prev = t_inside_parallel;
        t_inside_parallel = true;
        try {
            fn(i);
        } catch (...) {
            t_inside_parallel = prev;
            throw;
        }
        t_inside_parallel = prev;
    };
    p->run(n_tasks, guarded);
}

}  // namespace mesh
