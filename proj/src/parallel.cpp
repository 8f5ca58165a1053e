#include "dal/parallel.hpp"

#include <malloc.h>

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace {
// Large tensor buffers churn every layer call; keep them on the heap
// free-list instead of mmap/munmap round trips.
struct MallocTuning {
    MallocTuning() { mallopt(M_MMAP_THRESHOLD, 1 << 30); }
} g_malloc_tuning;
}  // namespace

namespace dal {

namespace {

std::atomic<int> g_threads{0};
thread_local int tl_thread_limit = 0;
thread_local bool tl_in_pool = false;

int hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

struct JobState {
    std::vector<std::pair<std::int64_t, std::int64_t>> chunks;
    std::atomic<std::size_t> next{0};
    std::atomic<int> done{0};
    const std::function<void(std::int64_t, std::int64_t)>* fn = nullptr;

    void work() {
        const bool was_in_pool = tl_in_pool;
        tl_in_pool = true;  // nested parallel_for calls run inline
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= chunks.size()) break;
            (*fn)(chunks[i].first, chunks[i].second);
            done.fetch_add(1);
        }
        tl_in_pool = was_in_pool;
    }
};

// Minimal persistent pool; the calling thread participates in every job.
class Pool {
public:
    static Pool& instance() {
        // intentionally leaked: daemon workers may still reference the pool
        // during process teardown
        static Pool* pool = new Pool();
        return *pool;
    }

    void run(std::int64_t n, int workers, const std::function<void(std::int64_t, std::int64_t)>& fn) {
        auto state = std::make_shared<JobState>();
        state->fn = &fn;
        const std::int64_t per = (n + workers - 1) / workers;
        for (std::int64_t b = 0; b < n; b += per) state->chunks.emplace_back(b, std::min(n, b + per));
        const int total = static_cast<int>(state->chunks.size());

        {
            std::lock_guard<std::mutex> lk(mu_);
            ensure_workers(workers - 1);
            job_ = state;
            generation_++;
        }
        cv_.notify_all();
        state->work();
        // fn may only be invoked for chunks counted in `done`, so waiting for
        // all chunks keeps `fn` alive for every caller.
        while (state->done.load() < total) std::this_thread::yield();
        {
            std::lock_guard<std::mutex> lk(mu_);
            job_.reset();
        }
    }

private:
    Pool() = default;

    void ensure_workers(int n) {
        while (static_cast<int>(threads_.size()) < n) {
            threads_.emplace_back([this] { worker_loop(); });
            threads_.back().detach();  // daemon workers, torn down at process exit
        }
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            std::shared_ptr<JobState> job;
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [&] { return generation_ != seen && job_ != nullptr; });
                seen = generation_;
                job = job_;
            }
            job->work();
        }
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::vector<std::thread> threads_;
    std::shared_ptr<JobState> job_;
    std::uint64_t generation_ = 0;
};

}  // namespace

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n); }

int num_threads() {
    int n = g_threads.load();
    if (n == 0) {
        n = hardware_threads();
        g_threads.store(n);
    }
    return n;
}

ThreadLimit::ThreadLimit(int n) : previous_(tl_thread_limit) { tl_thread_limit = n < 1 ? 1 : n; }
ThreadLimit::~ThreadLimit() { tl_thread_limit = previous_; }

int effective_threads() { return tl_thread_limit > 0 ? tl_thread_limit : num_threads(); }

void parallel_for_chunks(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    const int workers = static_cast<int>(std::min<std::int64_t>(effective_threads(), n));
    if (workers <= 1 || tl_in_pool) {
        fn(0, n);
        return;
    }
    Pool::instance().run(n, workers, fn);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
    parallel_for_chunks(n, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) fn(i);
    });
}

}  // namespace dal
