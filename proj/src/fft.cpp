#include "dal/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace dal {

namespace {

// Plans are created once per shape under a lock and reused via the
// new-array execute interface (thread-safe). FFTW_UNALIGNED keeps plans
// valid for arbitrary caller buffers.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int rows, int cols, bool inverse) {
        const auto key = std::make_tuple(rows, cols, inverse);
        std::lock_guard<std::mutex> lk(mu_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(rows) * cols);
        fftw_plan plan;
        const int sign = inverse ? FFTW_BACKWARD : FFTW_FORWARD;
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        if (rows == 1) {
            plan = fftw_plan_dft_1d(cols, buf, buf, sign, flags);
        } else {
            plan = fftw_plan_dft_2d(rows, cols, buf, buf, sign, flags);
        }
        fftw_free(buf);
        plans_[key] = plan;
        return plan;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, bool>, fftw_plan> plans_;
};

void execute(std::complex<double>* data, int rows, int cols, bool inverse) {
    fftw_plan plan = PlanCache::instance().get(rows, cols, inverse);
    auto* raw = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, raw, raw);
    if (inverse) {
        const double scale = 1.0 / (static_cast<double>(rows) * cols);
        const std::size_t n = static_cast<std::size_t>(rows) * cols;
        for (std::size_t i = 0; i < n; ++i) data[i] *= scale;
    }
}

}  // namespace

void fft_1d(std::complex<double>* data, int n, bool inverse) { execute(data, 1, n, inverse); }

void fft_2d(std::complex<double>* data, int rows, int cols, bool inverse) {
    execute(data, rows, cols, inverse);
}

}  // namespace dal
