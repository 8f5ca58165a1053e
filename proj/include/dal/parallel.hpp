#pragma once

#include <cstdint>
#include <functional>

namespace dal {

// Global default worker count (hardware concurrency unless overridden).
void set_num_threads(int n);
int num_threads();

// Thread-local override, used by outer-level parallel drivers (e.g. the
// benchmark matrix) to keep inner kernels single-threaded.
class ThreadLimit {
public:
    explicit ThreadLimit(int n);
    ~ThreadLimit();
    ThreadLimit(const ThreadLimit&) = delete;
    ThreadLimit& operator=(const ThreadLimit&) = delete;

private:
    int previous_;
};

int effective_threads();

// Runs fn(i) for i in [0, n). Work is split into fixed contiguous chunks so
// each index is always computed by exactly one task; results must not depend
// on scheduling.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

// Chunked variant: fn(begin, end) over disjoint ranges.
void parallel_for_chunks(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace dal
