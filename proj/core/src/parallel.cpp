#include "tosmtl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace tosmtl {

namespace {

int g_threads = 0;  // 0 = not resolved yet

int resolve_threads() {
    if (const char* env = std::getenv("TOSMTL_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

// Persistent pool; workers sleep between jobs. A job is a shared atomic
// index counter over [0, n); workers pull chunks until exhausted.
class Pool {
public:
    static Pool& instance() {
        static Pool* pool = new Pool();  // leaked so detached workers never outlive it
        return *pool;
    }

    void run(std::size_t n, std::size_t chunk,
             const std::function<void(std::size_t, std::size_t)>& fn) {
        ensure_workers(num_threads() - 1);
        {
            std::lock_guard<std::mutex> lk(mu_);
            job_fn_ = &fn;
            job_n_ = n;
            job_chunk_ = chunk;
            next_.store(0, std::memory_order_relaxed);
            active_ = static_cast<int>(workers_.size());
            ++generation_;
        }
        cv_.notify_all();
        work(fn, n, chunk);  // calling thread participates
        std::unique_lock<std::mutex> lk(mu_);
        done_cv_.wait(lk, [&] { return active_ == 0; });
        job_fn_ = nullptr;
    }

private:
    Pool() = default;

    void ensure_workers(int wanted) {
        std::lock_guard<std::mutex> lk(mu_);
        while (static_cast<int>(workers_.size()) < wanted) {
            workers_.emplace_back([this, my_gen = generation_]() mutable {
                std::uint64_t seen = my_gen;
                for (;;) {
                    const std::function<void(std::size_t, std::size_t)>* fn = nullptr;
                    std::size_t n = 0, chunk = 0;
                    {
                        std::unique_lock<std::mutex> lk2(mu_);
                        cv_.wait(lk2, [&] { return generation_ != seen; });
                        seen = generation_;
                        fn = job_fn_;
                        n = job_n_;
                        chunk = job_chunk_;
                    }
                    if (fn) work(*fn, n, chunk);
                    {
                        std::lock_guard<std::mutex> lk2(mu_);
                        --active_;
                    }
                    done_cv_.notify_one();
                }
            });
            workers_.back().detach();
        }
    }

    void work(const std::function<void(std::size_t, std::size_t)>& fn,
              std::size_t n, std::size_t chunk) {
        for (;;) {
            const std::size_t begin = next_.fetch_add(chunk, std::memory_order_relaxed);
            if (begin >= n) break;
            fn(begin, std::min(begin + chunk, n));
        }
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::vector<std::thread> workers_;
    const std::function<void(std::size_t, std::size_t)>* job_fn_ = nullptr;
    std::size_t job_n_ = 0;
    std::size_t job_chunk_ = 0;
    std::atomic<std::size_t> next_{0};
    int active_ = 0;
    std::uint64_t generation_ = 0;
};

}  // namespace

int num_threads() {
    if (g_threads == 0) g_threads = resolve_threads();
    return g_threads;
}

void set_num_threads(int n) { g_threads = n >= 1 ? n : 1; }

void parallel_for_ranges(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const int t = num_threads();
    if (t <= 1 || n == 1) {
        fn(0, n);
        return;
    }
    const std::size_t chunk = std::max<std::size_t>(1, n / (4 * static_cast<std::size_t>(t)));
    Pool::instance().run(n, chunk, fn);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    parallel_for_ranges(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) fn(i);
    });
}

}  // namespace tosmtl
