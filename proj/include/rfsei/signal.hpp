#pragma once

#include <complex>
#include <span>
#include <vector>

namespace rfsei {

using cplx = std::complex<double>;

/// Uniformly sampled complex baseband sequence.
///
/// Construction validates that the sequence is nonempty, every sample is
/// finite, and the sample rate is positive. Instances are immutable.
class ComplexSignal {
public:
    ComplexSignal(std::vector<cplx> samples, double sample_rate = 1.0);

    std::span<const cplx> samples() const { return samples_; }
    const std::vector<cplx>& vec() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    double sample_rate() const { return sample_rate_; }
    const cplx& operator[](std::size_t i) const { return samples_[i]; }

    double mean_power() const;

private:
    std::vector<cplx> samples_;
    double sample_rate_;
};

double mean_power(std::span<const cplx> x);
double energy(std::span<const double> x);
double energy(std::span<const cplx> x);

}  // namespace rfsei
