#include "rfsei/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "rfsei/errors.hpp"

namespace rfsei::fft {
namespace {

struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};
using Buffer = std::unique_ptr<fftw_complex, FftwFree>;

Buffer make_buffer(std::size_t n) {
    auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (p == nullptr) throw std::bad_alloc();
    return Buffer(p);
}

// Planner calls are not thread-safe in FFTW; execution with fftw_execute_dft is.
// Plans are built with FFTW_ESTIMATE so the chosen algorithm, and therefore every
// output bit, does not depend on timing.
class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(int n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        Buffer in = make_buffer(n);
        Buffer out = make_buffer(n);
        fftw_plan plan = fftw_plan_dft_1d(n, in.get(), out.get(), sign, FFTW_ESTIMATE);
        if (plan == nullptr) throw ParameterError("fft: planner failed");
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

std::vector<cplx> transform(std::span<const cplx> x, int sign) {
    const auto n = x.size();
    if (n == 0) return {};
    fftw_plan plan = cache().get(static_cast<int>(n), sign);
    Buffer in = make_buffer(n);
    Buffer out = make_buffer(n);
    static_assert(sizeof(cplx) == sizeof(fftw_complex));
    std::memcpy(static_cast<void*>(in.get()), static_cast<const void*>(x.data()), n * sizeof(cplx));
    fftw_execute_dft(plan, in.get(), out.get());
    std::vector<cplx> result(n);
    std::memcpy(static_cast<void*>(result.data()), static_cast<const void*>(out.get()), n * sizeof(cplx));
    return result;
}

}  // namespace

std::vector<cplx> forward(std::span<const cplx> x) { return transform(x, FFTW_FORWARD); }

std::vector<cplx> forward(std::span<const double> x) {
    std::vector<cplx> c(x.begin(), x.end());
    return transform(c, FFTW_FORWARD);
}

std::vector<cplx> inverse(std::span<const cplx> X) {
    auto y = transform(X, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(y.size());
    for (auto& v : y) v *= scale;
    return y;
}

}  // namespace rfsei::fft
