#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rfsei/errors.hpp"
#include "rfsei/fft.hpp"
#include "rfsei/icvmd.hpp"
#include "rfsei/synth.hpp"

using namespace rfsei;
using namespace rfsei::icvmd;

namespace {

constexpr double kPi = std::numbers::pi;

ComplexSignal exp_tones(std::size_t n, std::initializer_list<double> freqs) {
    std::vector<cplx> x(n);
    for (double f : freqs)
        for (std::size_t i = 0; i < n; ++i) x[i] += std::polar(1.0, 2.0 * kPi * f * static_cast<double>(i));
    return ComplexSignal(x);
}

ComplexSignal random_complex(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<cplx> x(n);
    for (auto& v : x) v = cplx(g(rng), g(rng));
    return ComplexSignal(x);
}

double rel_l2(std::span<const cplx> a, std::span<const cplx> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return std::sqrt(num / den);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

double ncc(std::span<const cplx> a, std::span<const cplx> b) {
    cplx dot{};
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * std::conj(b[i]);
    return std::abs(dot) / std::sqrt(energy(a) * energy(b));
}

vmd::VmdResult fake_side(std::vector<double> omegas, std::vector<double> amplitudes, std::size_t n = 64) {
    vmd::VmdResult r;
    r.mode_set.grid = vmd::HalfGrid{2 * n};
    r.mode_set.omegas = omegas;
    for (std::size_t k = 0; k < omegas.size(); ++k) {
        std::vector<double> m(n);
        for (std::size_t i = 0; i < n; ++i) m[i] = amplitudes[k] * std::cos(omegas[k] * static_cast<double>(i) + 0.3);
        r.modes_time.push_back(m);
    }
    r.residual.assign(n, 0.0);
    return r;
}

IcvmdConfig config(int k_pos, int k_neg, double alpha = 2000.0) {
    IcvmdConfig cfg;
    cfg.pos = {.K = k_pos, .alpha = alpha};
    cfg.neg = {.K = k_neg, .alpha = alpha};
    return cfg;
}

}  // namespace

TEST_CASE("analytic_split") {
    SUBCASE("positive exponential lives on the positive side") {
        auto x = exp_tones(100, {0.1});
        auto p = analytic_split(x);
        const double total = energy(std::span<const double>(p.x_plus)) + energy(std::span<const double>(p.x_minus));
        CHECK(energy(std::span<const double>(p.x_minus)) / total <= 1e-10);
        for (std::size_t i = 0; i < 100; ++i)
            CHECK(std::abs(p.x_plus[i] - std::cos(2.0 * kPi * 0.1 * static_cast<double>(i))) < 1e-9);
    }
    SUBCASE("real input splits symmetrically") {
        auto z = random_complex(97, 1);
        std::vector<cplx> real_x(z.size());
        double mean = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) mean += z[i].real() / static_cast<double>(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) real_x[i] = z[i].real() - mean;
        auto p = analytic_split(ComplexSignal(real_x));
        CHECK(max_abs_diff(p.x_plus, p.x_minus) < 1e-9);

        // With a nonzero mean the split convention shares DC evenly.
        std::vector<cplx> shifted(real_x);
        for (auto& v : shifted) v += 1.5;
        auto q = analytic_split(ComplexSignal(shifted), DcConvention::DcSplit);
        CHECK(max_abs_diff(q.x_plus, q.x_minus) < 1e-9);
    }
    SUBCASE("constant goes entirely to the positive side by default") {
        auto p = analytic_split(ComplexSignal(std::vector<cplx>(16, cplx(3.0, 0.0))));
        for (double v : p.x_plus) CHECK(std::abs(v - 3.0) < 1e-12);
        for (double v : p.x_minus) CHECK(std::abs(v) < 1e-12);
    }
    SUBCASE("imaginary DC and Nyquist are held aside") {
        std::vector<cplx> x(8);
        for (std::size_t i = 0; i < 8; ++i) x[i] = cplx(0.0, 2.0 + (i % 2 == 0 ? 0.5 : -0.5));
        auto p = analytic_split(ComplexSignal(x));
        CHECK(std::abs(p.dc_imag - 2.0) < 1e-12);
        CHECK(std::abs(p.nyquist_imag - 0.5) < 1e-12);
    }
    CHECK_THROWS_AS(analytic_split(ComplexSignal({1.0, 2.0, 3.0})), ParameterError);
}

TEST_CASE("hilbert_imag") {
    SUBCASE("cosine on an exact bin maps to sine") {
        const std::size_t N = 128;
        std::vector<double> x(N), s(N);
        for (std::size_t i = 0; i < N; ++i) {
            x[i] = std::cos(2.0 * kPi * 5.0 / N * static_cast<double>(i));
            s[i] = std::sin(2.0 * kPi * 5.0 / N * static_cast<double>(i));
        }
        CHECK(max_abs_diff(hilbert_imag(x), s) < 1e-9);
    }
    SUBCASE("constant has no quadrature") {
        auto h = hilbert_imag(std::vector<double>(33, 4.0));
        for (double v : h) CHECK(std::abs(v) < 1e-9);
    }
    SUBCASE("linearity") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> g;
        std::vector<double> x(211), y(211), combo(211);
        for (auto& v : x) v = g(rng);
        for (auto& v : y) v = g(rng);
        const double a = 1.7, b = -0.4;
        for (std::size_t i = 0; i < x.size(); ++i) combo[i] = a * x[i] + b * y[i];
        auto hx = hilbert_imag(x), hy = hilbert_imag(y), hc = hilbert_imag(combo);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(hc[i] - (a * hx[i] + b * hy[i])) < 1e-10);
    }
    CHECK_THROWS_AS(hilbert_imag(std::vector<double>{1.0, 2.0}), ParameterError);
}

TEST_CASE("icvmd_decompose") {
    SUBCASE("two positive exponentials") {
        auto x = exp_tones(1000, {0.05, 0.25});
        auto r = icvmd_decompose(x, config(2, 2));
        CHECK(std::abs(r.pos_modes.mode_set.omegas[0] - 2.0 * kPi * 0.05) < 0.01);
        CHECK(std::abs(r.pos_modes.mode_set.omegas[1] - 2.0 * kPi * 0.25) < 0.01);
        const double neg = energy(std::span<const double>(r.split.x_minus));
        const double tot = neg + energy(std::span<const double>(r.split.x_plus));
        CHECK(neg / tot <= 1e-8);
    }
    SUBCASE("negative exponential lives on the negative side") {
        auto x = exp_tones(1000, {-0.1});
        auto r = icvmd_decompose(x, config(2, 2));
        const double neg = energy(std::span<const double>(r.split.x_minus));
        const double pos = energy(std::span<const double>(r.split.x_plus));
        CHECK(pos / (pos + neg) <= 1e-8);
        double best = 0.0;
        for (double w : r.neg_modes.mode_set.omegas)
            best = std::max(best, -std::abs(w - 2.0 * kPi * 0.1));
        CHECK(best > -0.01);
    }
    SUBCASE("real BPSK-like input gives mirrored sides") {
        auto bpsk = synth::gen_baseband({.kind = synth::Modulation::BPSK, .carrier = 0.0, .seed = 4}, 512);
        std::vector<cplx> x(bpsk.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = bpsk[i].real() * std::cos(2.0 * kPi * 0.15 * static_cast<double>(i));
        auto r = icvmd_decompose(ComplexSignal(x), config(3, 3));
        // Oracle: one VMD run on the positive view, mirrored.
        auto mirrored = vmd::vmd_decompose(r.split.x_plus, config(3, 3).pos);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(std::abs(r.neg_modes.mode_set.omegas[k] - mirrored.mode_set.omegas[k]) < 0.02);
            CHECK(std::abs(r.pos_modes.mode_set.omegas[k] - r.neg_modes.mode_set.omegas[k]) < 0.02);
        }
    }
    SUBCASE("sides are configured independently") {
        auto cfg = config(3, 1);
        auto r = icvmd_decompose(random_complex(256, 2), cfg);
        CHECK(r.pos_modes.mode_count() == 3);
        CHECK(r.neg_modes.mode_count() == 1);
        cfg.shared_parameters = true;
        auto s = icvmd_decompose(random_complex(256, 2), cfg);
        CHECK(s.neg_modes.mode_count() == 3);
    }
    SUBCASE("deterministic") {
        auto x = random_complex(300, 5);
        auto a = icvmd_decompose(x, config(4, 3));
        auto b = icvmd_decompose(x, config(4, 3));
        CHECK(a.pos_modes.modes_time == b.pos_modes.modes_time);
        CHECK(a.neg_modes.modes_time == b.neg_modes.modes_time);
        CHECK(a.labels.pos == b.labels.pos);
    }
}

TEST_CASE("reconstruct") {
    SUBCASE("full selection round-trips random input") {
        for (std::size_t n : {64, 65, 200, 257}) {
            auto x = random_complex(n, n);
            auto r = icvmd_decompose(x, config(3, 2, 500.0));
            auto y = reconstruct(r, Selection::all());
            CAPTURE(n);
            CHECK(rel_l2(y.samples(), x.samples()) <= 1e-9);
        }
    }
    SUBCASE("empty selection gives zeros") {
        auto x = random_complex(64, 1);
        auto y = reconstruct(icvmd_decompose(x, config(2, 2)), Selection{});
        REQUIRE(y.size() == 64);
        for (const auto& v : y.samples()) CHECK(v == cplx{});
    }
    SUBCASE("signal part denoises a tone at 0 dB") {
        auto clean = exp_tones(1024, {0.1});
        auto noisy = synth::add_awgn(clean, 0.0, 12);
        auto cfg = config(3, 3);
        auto r = icvmd_decompose(noisy, cfg);
        auto restored = reconstruct(r, Selection::parse("signal"));
        CHECK(ncc(restored.samples(), clean.samples()) > ncc(noisy.samples(), clean.samples()));
    }
    SUBCASE("swapping sides of a real signal changes nothing") {
        auto z = random_complex(128, 6);
        std::vector<cplx> real_x(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) real_x[i] = z[i].real();
        auto cfg = config(3, 3, 400.0);
        cfg.dc_convention = DcConvention::DcSplit;
        auto r = icvmd_decompose(ComplexSignal(real_x), cfg);
        auto swapped = r;
        std::swap(swapped.pos_modes, swapped.neg_modes);
        std::swap(swapped.labels.pos, swapped.labels.neg);
        std::swap(swapped.residual_plus, swapped.residual_minus);
        auto a = reconstruct(r, Selection::all());
        auto b = reconstruct(swapped, Selection::all());
        CHECK(rel_l2(b.samples(), a.samples()) <= 1e-9);
    }
    SUBCASE("selection parsing") {
        auto s = Selection::parse("signal,dc");
        CHECK(s.signal);
        CHECK(s.dc);
        CHECK_FALSE(s.feature);
        CHECK_FALSE(s.residual);
        CHECK_THROWS_AS(Selection::parse("signal,bogus"), ParameterError);
    }
    CHECK_THROWS_AS(reconstruct(IcvmdResult{}, Selection::all()), ParameterError);
}

TEST_CASE("K perturbation leaves the signal part stable") {
    auto x = exp_tones(1024, {0.05, 0.25});
    auto cfg5 = config(5, 5);
    cfg5.partition.n_signal_modes = 2;
    auto cfg6 = cfg5;
    cfg6.pos.K = 6;
    auto a = reconstruct(icvmd_decompose(x, cfg5), Selection::parse("signal"));
    auto b = reconstruct(icvmd_decompose(x, cfg6), Selection::parse("signal"));
    CHECK(rel_l2(b.samples(), a.samples()) <= 0.1);
}

TEST_CASE("partition_modes") {
    PartitionPolicy policy;
    SUBCASE("strong mode near Nyquist is Special") {
        // energy shares: 0.7 and 0.3
        auto pos = fake_side({0.5, 0.98 * kPi}, {std::sqrt(0.7), std::sqrt(0.3)});
        auto neg = fake_side({0.5}, {0.0});
        policy.special_lo = 0.9 * kPi;
        policy.special_energy_min = 0.05;
        auto labels = partition_modes(pos, neg, policy);
        CHECK(labels.pos[1] == Label::Special);
        CHECK(labels.pos[0] == Label::SignalPart);
    }
    SUBCASE("dc-locked mode with Separate policy is DC") {
        auto pos = fake_side({0.0, 1.0}, {1.0, 1.0});
        auto neg = fake_side({1.0}, {1.0});
        policy.dc_policy = DcPolicy::Separate;
        auto labels = partition_modes(pos, neg, policy);
        CHECK(labels.pos[0] == Label::DC);
        CHECK(labels.pos[1] == Label::SignalPart);

        policy.dc_policy = DcPolicy::MergeIntoSignal;
        labels = partition_modes(pos, neg, policy);
        CHECK(labels.pos[0] == Label::SignalPart);
    }
    SUBCASE("energy ranking picks the signal modes") {
        auto pos = fake_side({0.3, 0.6, 0.9, 1.2}, {std::sqrt(10.0), std::sqrt(5.0), std::sqrt(2.0), 1.0});
        auto neg = fake_side({0.3, 0.6}, {1.0, 1.0});
        policy.n_signal_modes = 2;
        auto labels = partition_modes(pos, neg, policy);
        CHECK(labels.pos == std::vector<Label>{Label::SignalPart, Label::SignalPart, Label::FeaturePart,
                                               Label::FeaturePart});
        CHECK(labels.neg.size() == 2);
    }
    SUBCASE("a split tone is ranked as one component") {
        // Two modes 0.005 rad apart share one tone; alpha 2000 gives a 0.0158 rad half-width.
        auto pos = fake_side({0.5, 0.505, 1.5}, {std::sqrt(4.0), std::sqrt(3.0), std::sqrt(5.0)});
        auto neg = fake_side({0.3}, {0.1});
        policy.n_signal_modes = 1;
        auto labels = partition_modes(pos, neg, policy);
        CHECK(labels.pos == std::vector<Label>{Label::SignalPart, Label::SignalPart, Label::FeaturePart});
        policy.merge_halfwidths = 0.0;
        labels = partition_modes(pos, neg, policy);
        CHECK(labels.pos == std::vector<Label>{Label::FeaturePart, Label::FeaturePart, Label::SignalPart});
    }
    SUBCASE("ties go to the lower index") {
        auto pos = fake_side({0.4, 0.4 + 0.5, 1.4}, {1.0, 1.0, 1.0});
        auto neg = fake_side({0.3}, {1.0});
        policy.n_signal_modes = 1;
        auto labels = partition_modes(pos, neg, policy);
        CHECK(labels.pos[0] == Label::SignalPart);
        CHECK(labels.pos[1] == Label::FeaturePart);
    }
    SUBCASE("every mode gets exactly one label") {
        auto x = random_complex(256, 9);
        auto r = icvmd_decompose(x, config(5, 4));
        CHECK(r.labels.pos.size() == 5);
        CHECK(r.labels.neg.size() == 4);
    }
    SUBCASE("too many signal modes") {
        policy.n_signal_modes = 3;
        CHECK_THROWS_AS(partition_modes(fake_side({0.5, 1.0}, {1, 1}), fake_side({0.5, 1.0}, {1, 1}), policy),
                        ParameterError);
    }
}

TEST_CASE("probe_parameters") {
    SUBCASE("single tone falls back to the 5..8 window") {
        auto s = probe_parameters(exp_tones(1024, {0.1}));
        CHECK(s.peaks == 1);
        CHECK(s.k_low == 5);
        CHECK(s.k_high == 8);
    }
    SUBCASE("deterministic") {
        auto x = synth::add_awgn(exp_tones(2048, {0.05, 0.25}), 10.0, 3);
        CHECK(probe_parameters(x) == probe_parameters(x));
    }
    SUBCASE("two tones suggest alpha within a decade of 1000") {
        auto s = probe_parameters(exp_tones(2048, {0.05, 0.25}));
        CHECK(s.peaks == 2);
        CHECK(std::abs(std::log10(s.alpha) - 3.0) <= 1.0);
    }
    SUBCASE("only the magnitude spectrum matters") {
        auto x = synth::add_awgn(exp_tones(1024, {0.05, 0.3, -0.2}), 5.0, 8);
        auto X = fft::forward(x.samples());
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
        for (auto& v : X) v *= std::polar(1.0, u(rng));
        auto scrambled = ComplexSignal(fft::inverse(X));
        CHECK(probe_parameters(scrambled) == probe_parameters(x));
    }
    CHECK_THROWS_AS(probe_parameters(exp_tones(32, {0.1})), ParameterError);
}
