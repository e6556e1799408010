#include "rfsei/signal.hpp"

#include <cmath>

#include "rfsei/errors.hpp"

namespace rfsei {

ComplexSignal::ComplexSignal(std::vector<cplx> samples, double sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (samples_.empty()) throw ParameterError("ComplexSignal: empty sample sequence");
    if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
        throw ParameterError("ComplexSignal: sample_rate must be positive");
    for (const auto& s : samples_)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw ParameterError("ComplexSignal: non-finite sample");
}

double ComplexSignal::mean_power() const { return rfsei::mean_power(samples_); }

double mean_power(std::span<const cplx> x) {
    if (x.empty()) return 0.0;
    return energy(x) / static_cast<double>(x.size());
}

double energy(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc;
}

double energy(std::span<const cplx> x) {
    double acc = 0.0;
    for (const auto& v : x) acc += std::norm(v);
    return acc;
}

}  // namespace rfsei
