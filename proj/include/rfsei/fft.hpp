#pragma once

#include <span>
#include <vector>

#include "rfsei/signal.hpp"

namespace rfsei::fft {

// Unnormalized forward DFT: X[m] = sum_n x[n] exp(-j 2 pi m n / N).
std::vector<cplx> forward(std::span<const cplx> x);
std::vector<cplx> forward(std::span<const double> x);

// Inverse DFT including the 1/N factor.
std::vector<cplx> inverse(std::span<const cplx> X);

}  // namespace rfsei::fft
