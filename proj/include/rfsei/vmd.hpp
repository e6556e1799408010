#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rfsei/signal.hpp"

namespace rfsei::vmd {

using Spectrum = std::vector<cplx>;

enum class InitKind { UniformSpread, AllZero, RandomSeeded };

struct VmdConfig {
    int K = 1;
    double alpha = 2000.0;
    // Dual ascent step. When unset, 0 is used unless exact_reconstruction is set (then 0.1).
    std::optional<double> tau;
    bool exact_reconstruction = false;
    double tol = 1e-7;
    int max_iter = 500;
    InitKind init = InitKind::UniformSpread;
    std::uint64_t init_seed = 0;
    bool dc_lock = false;

    double effective_tau() const { return tau.value_or(exact_reconstruction ? 0.1 : 0.0); }
    void validate() const;
};

/// Non-negative half of the DFT grid of a length-`extended_length` sequence:
/// bins omega_m = 2 pi m / extended_length for m = 0..extended_length/2.
struct HalfGrid {
    std::size_t extended_length = 0;

    std::size_t bins() const { return extended_length / 2 + 1; }
    double step() const;
    double omega(std::size_t m) const { return step() * static_cast<double>(m); }
    std::vector<double> omegas() const;
};

struct ModeSet {
    std::vector<Spectrum> mode_spectra;
    std::vector<double> omegas;  // rad/sample, ascending
    Spectrum lambda_spectrum;
    HalfGrid grid;
    double alpha = 2000.0;  // penalty the modes were fitted with
    int iterations = 0;
    bool converged = false;
    double final_delta = 0.0;
};

struct VmdResult {
    std::vector<std::vector<double>> modes_time;
    ModeSet mode_set;
    std::vector<double> residual;

    std::size_t mode_count() const { return modes_time.size(); }
};

VmdResult vmd_decompose(std::span<const double> x, const VmdConfig& cfg);

// Closed-form minimizer of the augmented Lagrangian over one mode.
Spectrum wiener_mode_update(const HalfGrid& grid, std::span<const cplx> f_hat,
                            std::span<const cplx> others_sum, std::span<const cplx> lambda_hat,
                            double omega_k, double alpha);

// Power-spectrum centroid of a mode over the given bin frequencies.
double center_frequency(std::span<const cplx> mode_spectrum, std::span<const double> bin_omegas);
double center_frequency(const HalfGrid& grid, std::span<const cplx> mode_spectrum);

Spectrum dual_ascent(std::span<const cplx> lambda_hat, std::span<const cplx> f_hat,
                     std::span<const cplx> mode_sum, double tau);

double convergence_metric(const std::vector<Spectrum>& prev, const std::vector<Spectrum>& curr);

// Mirror extension used before the transform: the first floor(N/2) samples are
// reflected to the left and the remaining ceil(N/2) to the right, giving 2N samples.
std::vector<double> mirror_extend(std::span<const double> x);

}  // namespace rfsei::vmd
