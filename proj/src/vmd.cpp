#include "rfsei/vmd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "rfsei/errors.hpp"
#include "rfsei/fft.hpp"

namespace rfsei::vmd {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGuard = 1e-30;

void require_same_size(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) throw ParameterError(std::string(what) + ": spectrum grid mismatch");
}

std::vector<double> initial_omegas(const VmdConfig& cfg) {
    const auto K = static_cast<std::size_t>(cfg.K);
    std::vector<double> omegas(K, 0.0);
    switch (cfg.init) {
        case InitKind::UniformSpread:
            for (std::size_t k = 0; k < K; ++k)
                omegas[k] = (static_cast<double>(k) + 0.5) * kPi / static_cast<double>(K);
            break;
        case InitKind::AllZero:
            break;
        case InitKind::RandomSeeded: {
            std::mt19937_64 rng(cfg.init_seed);
            std::uniform_real_distribution<double> u(0.0, kPi);
            for (auto& w : omegas) w = u(rng);
            std::sort(omegas.begin(), omegas.end());
            break;
        }
    }
    if (cfg.dc_lock) omegas[0] = 0.0;
    return omegas;
}

// Moves later-indexed modes off a collision to the midpoint of the widest gap
// between the remaining center frequencies (0 and pi included as fences).
// Index 0 is never moved, which keeps a dc-locked mode pinned.
void separate_collisions(std::vector<double>& omegas, double min_gap) {
    const auto K = omegas.size();
    for (std::size_t j = 1; j < K; ++j) {
        bool collides = false;
        for (std::size_t i = 0; i < j && !collides; ++i)
            collides = std::abs(omegas[i] - omegas[j]) < min_gap;
        if (!collides) continue;

        std::vector<double> fences = {0.0, kPi};
        for (std::size_t i = 0; i < K; ++i)
            if (i != j) fences.push_back(omegas[i]);
        std::sort(fences.begin(), fences.end());
        double best_gap = -1.0, best_mid = omegas[j];
        for (std::size_t i = 1; i < fences.size(); ++i) {
            const double gap = fences[i] - fences[i - 1];
            if (gap > best_gap) {
                best_gap = gap;
                best_mid = 0.5 * (fences[i] + fences[i - 1]);
            }
        }
        omegas[j] = best_mid;
    }
}

// Real time sequence whose non-negative spectrum is `half` (Hermitian extension).
std::vector<double> hermitian_inverse(std::span<const cplx> half, std::size_t extended_length) {
    std::vector<cplx> full(extended_length, cplx{});
    const auto M = half.size();
    for (std::size_t m = 0; m < M; ++m) full[m] = half[m];
    for (std::size_t m = 1; m + 1 < M; ++m) full[extended_length - m] = std::conj(half[m]);
    auto time = fft::inverse(full);
    std::vector<double> out(extended_length);
    for (std::size_t i = 0; i < extended_length; ++i) out[i] = time[i].real();
    return out;
}

}  // namespace

void VmdConfig::validate() const {
    if (K < 1) throw ParameterError("VmdConfig: K must be >= 1");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("VmdConfig: alpha must be > 0");
    if (!(effective_tau() >= 0.0)) throw ParameterError("VmdConfig: tau must be >= 0");
    if (!(tol > 0.0)) throw ParameterError("VmdConfig: tol must be > 0");
    if (max_iter < 1) throw ParameterError("VmdConfig: max_iter must be >= 1");
}

double HalfGrid::step() const {
    return 2.0 * kPi / static_cast<double>(extended_length);
}

std::vector<double> HalfGrid::omegas() const {
    std::vector<double> w(bins());
    for (std::size_t m = 0; m < w.size(); ++m) w[m] = omega(m);
    return w;
}

Spectrum wiener_mode_update(const HalfGrid& grid, std::span<const cplx> f_hat,
                            std::span<const cplx> others_sum, std::span<const cplx> lambda_hat,
                            double omega_k, double alpha) {
    const auto M = grid.bins();
    require_same_size(M, f_hat.size(), "wiener_mode_update");
    require_same_size(M, others_sum.size(), "wiener_mode_update");
    require_same_size(M, lambda_hat.size(), "wiener_mode_update");
    Spectrum u(M);
    for (std::size_t m = 0; m < M; ++m) {
        const double d = grid.omega(m) - omega_k;
        u[m] = (f_hat[m] - others_sum[m] + 0.5 * lambda_hat[m]) / (1.0 + 2.0 * alpha * d * d);
    }
    return u;
}

double center_frequency(std::span<const cplx> mode_spectrum, std::span<const double> bin_omegas) {
    require_same_size(bin_omegas.size(), mode_spectrum.size(), "center_frequency");
    double num = 0.0, den = 0.0;
    for (std::size_t m = 0; m < mode_spectrum.size(); ++m) {
        const double p = std::norm(mode_spectrum[m]);
        num += bin_omegas[m] * p;
        den += p;
    }
    if (!(den > 0.0)) throw DegenerateInputError("center_frequency: zero spectrum");
    return num / den;
}

double center_frequency(const HalfGrid& grid, std::span<const cplx> mode_spectrum) {
    const auto w = grid.omegas();
    return center_frequency(mode_spectrum, w);
}

Spectrum dual_ascent(std::span<const cplx> lambda_hat, std::span<const cplx> f_hat,
                     std::span<const cplx> mode_sum, double tau) {
    require_same_size(lambda_hat.size(), f_hat.size(), "dual_ascent");
    require_same_size(lambda_hat.size(), mode_sum.size(), "dual_ascent");
    Spectrum out(lambda_hat.begin(), lambda_hat.end());
    if (tau == 0.0) return out;
    for (std::size_t m = 0; m < out.size(); ++m) out[m] += tau * (f_hat[m] - mode_sum[m]);
    return out;
}

double convergence_metric(const std::vector<Spectrum>& prev, const std::vector<Spectrum>& curr) {
    if (prev.size() != curr.size()) throw ParameterError("convergence_metric: mode count mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < prev.size(); ++k) {
        require_same_size(prev[k].size(), curr[k].size(), "convergence_metric");
        const double base = energy(std::span<const cplx>(prev[k]));
        if (base < kGuard) continue;
        double diff = 0.0;
        for (std::size_t m = 0; m < prev[k].size(); ++m) diff += std::norm(curr[k][m] - prev[k][m]);
        total += diff / base;
    }
    return total;
}

std::vector<double> mirror_extend(std::span<const double> x) {
    const auto N = x.size();
    const auto left = N / 2;
    const auto right = N - left;
    std::vector<double> out;
    out.reserve(2 * N);
    for (std::size_t i = 0; i < left; ++i) out.push_back(x[left - 1 - i]);
    out.insert(out.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < right; ++i) out.push_back(x[N - 1 - i]);
    return out;
}

VmdResult vmd_decompose(std::span<const double> x, const VmdConfig& cfg) {
    cfg.validate();
    const auto N = x.size();
    const auto K = static_cast<std::size_t>(cfg.K);
    if (N < 2 * K) throw ParameterError("vmd_decompose: input shorter than 2K samples");
    for (double v : x)
        if (!std::isfinite(v)) throw ParameterError("vmd_decompose: non-finite input");

    const auto extended = mirror_extend(x);
    const HalfGrid grid{extended.size()};
    const auto M = grid.bins();
    const auto bin_omegas = grid.omegas();
    const auto full_spectrum = fft::forward(std::span<const double>(extended));
    const Spectrum f_hat(full_spectrum.begin(), full_spectrum.begin() + static_cast<std::ptrdiff_t>(M));

    const double tau = cfg.effective_tau();
    std::vector<Spectrum> modes(K, Spectrum(M, cplx{}));
    std::vector<double> omegas = initial_omegas(cfg);
    Spectrum lambda(M, cplx{});
    Spectrum total(M, cplx{});

    ModeSet ms;
    ms.grid = grid;
    ms.alpha = cfg.alpha;
    int n = 0;
    double delta = 0.0;
    bool converged = false;
    while (n < cfg.max_iter) {
        ++n;
        const auto prev = modes;
        for (std::size_t k = 0; k < K; ++k) {
            Spectrum others(M);
            for (std::size_t m = 0; m < M; ++m) others[m] = total[m] - modes[k][m];
            auto updated = wiener_mode_update(grid, f_hat, others, lambda, omegas[k], cfg.alpha);
            for (std::size_t m = 0; m < M; ++m) total[m] = others[m] + updated[m];
            modes[k] = std::move(updated);
            if (!(cfg.dc_lock && k == 0)) {
                if (energy(std::span<const cplx>(modes[k])) > 0.0)
                    omegas[k] = std::clamp(center_frequency(modes[k], bin_omegas), 0.0, kPi);
            }
        }
        separate_collisions(omegas, grid.step());
        // Recompute the sum from scratch so the multiplier sees no accumulated drift.
        std::fill(total.begin(), total.end(), cplx{});
        for (const auto& mode : modes)
            for (std::size_t m = 0; m < M; ++m) total[m] += mode[m];
        lambda = dual_ascent(lambda, f_hat, total, tau);

        // The first sweep starts from all-zero modes, where the relative change is undefined.
        if (n == 1) continue;
        delta = convergence_metric(prev, modes);
        if (delta < cfg.tol) {
            converged = true;
            break;
        }
    }

    // Ascending center frequencies; modes follow their frequency.
    std::vector<std::size_t> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return omegas[a] < omegas[b]; });

    VmdResult result;
    result.residual.assign(x.begin(), x.end());
    const auto offset = N / 2;
    for (auto k : order) {
        auto full = hermitian_inverse(modes[k], extended.size());
        std::vector<double> mode(full.begin() + static_cast<std::ptrdiff_t>(offset),
                                 full.begin() + static_cast<std::ptrdiff_t>(offset + N));
        for (std::size_t i = 0; i < N; ++i) result.residual[i] -= mode[i];
        result.modes_time.push_back(std::move(mode));
        ms.mode_spectra.push_back(std::move(modes[k]));
        ms.omegas.push_back(omegas[k]);
    }
    ms.lambda_spectrum = std::move(lambda);
    ms.iterations = n;
    ms.converged = converged;
    ms.final_delta = delta;
    result.mode_set = std::move(ms);
    return result;
}

}  // namespace rfsei::vmd
