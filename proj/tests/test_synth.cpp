#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rfsei/errors.hpp"
#include "rfsei/synth.hpp"

using namespace rfsei;
using namespace rfsei::synth;

namespace {

ComplexSignal random_signal(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<cplx> v(n);
    for (auto& s : v) s = cplx(g(rng), g(rng));
    return ComplexSignal(v);
}

// Direct-form FIR used as an independent reference for the Volterra first-order path.
std::vector<cplx> fir(const std::vector<cplx>& x, const std::vector<double>& h) {
    std::vector<cplx> y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n)
        for (std::size_t q = 0; q < h.size(); ++q)
            if (n >= q) y[n] += h[q] * x[n - q];
    return y;
}

double noise_power_db(const ComplexSignal& clean, const ComplexSignal& noisy) {
    double acc = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) acc += std::norm(noisy[i] - clean[i]);
    return 10.0 * std::log10(acc / static_cast<double>(clean.size()));
}

}  // namespace

TEST_CASE("gen_baseband CW matches the complex exponential") {
    auto x = gen_baseband({.kind = Modulation::CW, .carrier = 0.1}, 4);
    REQUIRE(x.size() == 4);
    for (int t = 0; t < 4; ++t) {
        const auto expect = std::polar(1.0, 2.0 * std::numbers::pi * 0.1 * t);
        CHECK(std::abs(x[static_cast<std::size_t>(t)] - expect) < 1e-15);
    }
}

TEST_CASE("every modulation kind is constant envelope") {
    for (auto kind : kAllModulations) {
        ModulationSpec spec{.kind = kind, .seed = 42};
        auto x = gen_baseband(spec, 2100);
        double lo = 1e9, hi = -1e9;
        for (const auto& s : x.samples()) {
            lo = std::min(lo, std::abs(s));
            hi = std::max(hi, std::abs(s));
        }
        CAPTURE(to_string(kind));
        CHECK(hi - lo <= 1e-9);
        CHECK(std::abs(hi - 1.0) < 1e-12);
    }
}

TEST_CASE("keyed modulations are deterministic in the seed") {
    for (auto kind : {Modulation::BPSK, Modulation::QPSK, Modulation::PSK8, Modulation::MSK}) {
        ModulationSpec spec{.kind = kind, .seed = 7};
        auto a = gen_baseband(spec, 512);
        auto b = gen_baseband(spec, 512);
        CHECK(a.vec() == b.vec());
        spec.seed = 8;
        auto c = gen_baseband(spec, 512);
        CHECK(a.vec() != c.vec());
    }
}

TEST_CASE("BPSK symbols take two phases") {
    auto x = gen_baseband({.kind = Modulation::BPSK, .carrier = 0.0, .samples_per_symbol = 4, .seed = 3}, 400);
    for (const auto& s : x.samples()) {
        CHECK(std::abs(s.imag()) < 1e-12);
        CHECK(std::abs(std::abs(s.real()) - 1.0) < 1e-12);
    }
}

TEST_CASE("MSK has continuous phase and the expected deviation") {
    const int sps = 8;
    auto x = gen_baseband({.kind = Modulation::MSK, .carrier = 0.1, .samples_per_symbol = sps, .seed = 5}, 800);
    for (std::size_t t = 1; t < x.size(); ++t) {
        const double step = std::arg(x[t] * std::conj(x[t - 1])) / (2.0 * std::numbers::pi);
        const double dev = std::abs(step - 0.1);
        CHECK(std::abs(dev - 1.0 / (4.0 * sps)) < 1e-9);
    }
}

TEST_CASE("gen_baseband rejects bad input") {
    CHECK_THROWS_AS(gen_baseband({}, 0), ParameterError);
    CHECK_THROWS_AS(gen_baseband({.kind = Modulation::LFM, .carrier = 0.4, .sweep_span = 0.3}, 16),
                    ParameterError);
    CHECK_THROWS_AS(gen_baseband({.kind = Modulation::CW, .carrier = 0.5}, 16), ParameterError);
    CHECK_THROWS_AS(gen_baseband({.kind = Modulation::BPSK, .samples_per_symbol = 0}, 16), ParameterError);
}

TEST_CASE("normalize_power") {
    SUBCASE("constant amplitude 2 becomes amplitude 1") {
        auto y = normalize_power(ComplexSignal(std::vector<cplx>(8, cplx(2.0, 0.0))));
        for (const auto& s : y.samples()) CHECK(std::abs(s - cplx(1.0, 0.0)) < 1e-15);
    }
    SUBCASE("unit-power tone is unchanged") {
        auto x = gen_baseband({.kind = Modulation::CW, .carrier = 0.2}, 100);
        auto y = normalize_power(x);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-12);
    }
    SUBCASE("[3,0,0,0] is divided by sqrt(9/4)") {
        auto y = normalize_power(ComplexSignal({3.0, 0.0, 0.0, 0.0}));
        CHECK(std::abs(y[0] - cplx(2.0, 0.0)) < 1e-15);
        CHECK(std::abs(y[1]) == 0.0);
    }
    SUBCASE("mean power 1 and phases preserved on random input") {
        auto x = random_signal(257, 11);
        auto y = normalize_power(x);
        CHECK(std::abs(y.mean_power() - 1.0) < 1e-12);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(std::arg(y[i]) - std::arg(x[i])) < 1e-12);
    }
    CHECK_THROWS_AS(normalize_power(ComplexSignal(std::vector<cplx>(4))), DegenerateInputError);
}

TEST_CASE("hammerstein_apply") {
    const auto table = reference_emitters();
    REQUIRE(table.size() == 7);

    SUBCASE("impulse through Radiation1 polynomial, memoryless stage") {
        EmitterProfile p{"r1", table[0].b, {1.0}};
        auto y = hammerstein_apply(ComplexSignal({1.0, 0.0, 0.0}), p);
        CHECK(std::abs(y[0] - cplx(1.4063, 0.0)) < 1e-12);
        CHECK(std::abs(y[1]) == 0.0);
        CHECK(std::abs(y[2]) == 0.0);
    }
    SUBCASE("zero input gives zero output") {
        auto y = hammerstein_apply(ComplexSignal(std::vector<cplx>(16)), table[3]);
        for (const auto& s : y.samples()) CHECK(s == cplx{});
    }
    SUBCASE("pure-delay linear stage delays the polynomial response") {
        EmitterProfile memless{"m", table[2].b, {1.0}};
        EmitterProfile delayed{"d", table[2].b, {0.0, 1.0}};
        auto x = random_signal(32, 2);
        auto y0 = hammerstein_apply(x, memless);
        auto y1 = hammerstein_apply(x, delayed);
        CHECK(y1[0] == cplx{});
        for (std::size_t i = 1; i < x.size(); ++i) CHECK(std::abs(y1[i] - y0[i - 1]) < 1e-15);
    }
    SUBCASE("b=[1], c=[1] is the identity") {
        auto x = random_signal(64, 3);
        auto y = hammerstein_apply(x, {"id", {1.0}, {1.0}});
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) <= 1e-12);
    }
    SUBCASE("Table I profiles are amplitude dependent") {
        auto x = random_signal(64, 4);
        std::vector<cplx> doubled(x.vec());
        for (auto& s : doubled) s *= 2.0;
        auto y1 = hammerstein_apply(x, table[0]);
        auto y2 = hammerstein_apply(ComplexSignal(doubled), table[0]);
        double worst = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(y2[i] - 2.0 * y1[i]));
        CHECK(worst > 1e-3);
    }
    SUBCASE("seven profiles give pairwise distinct CW gains") {
        auto cw = gen_baseband({.kind = Modulation::CW, .carrier = 0.1}, 64);
        std::vector<cplx> gains;
        for (const auto& p : table) gains.push_back(hammerstein_apply(cw, p)[20] / cw[20]);
        for (std::size_t i = 0; i < gains.size(); ++i)
            for (std::size_t j = i + 1; j < gains.size(); ++j) CHECK(std::abs(gains[i] - gains[j]) > 1e-3);
    }
    SUBCASE("invalid profiles are rejected") {
        CHECK_THROWS_AS(hammerstein_apply(ComplexSignal({1.0}), {"x", {1.0, 0.0}, {1.0}}), ParameterError);
        CHECK_THROWS_AS(hammerstein_apply(ComplexSignal({1.0}), {"x", {0.0}, {1.0}}), ParameterError);
        CHECK_THROWS_AS(hammerstein_apply(ComplexSignal({1.0}), {"x", {1.0}, {}}), ParameterError);
    }
}

TEST_CASE("volterra_apply") {
    SUBCASE("first-order identity kernel") {
        auto x = random_signal(16, 5);
        auto y = volterra_apply(x, {.order = 1, .memory = 0, .h = {{1, {1.0}}}});
        CHECK(y.vec() == x.vec());
    }
    SUBCASE("unit delay") {
        auto y = volterra_apply(ComplexSignal({1.0, 2.0, 3.0}), {.order = 1, .memory = 1, .h = {{1, {0.0, 1.0}}}});
        CHECK(y[0] == cplx(0.0));
        CHECK(y[1] == cplx(1.0));
        CHECK(y[2] == cplx(2.0));
    }
    SUBCASE("memoryless square") {
        auto y = volterra_apply(ComplexSignal({2.0, 3.0}), {.order = 2, .memory = 0, .h = {{2, {1.0}}}});
        CHECK(y[0] == cplx(4.0));
        CHECK(y[1] == cplx(9.0));
    }
    SUBCASE("second-order cross term h2(0,1) = x(n) x(n-1)") {
        auto y = volterra_apply(ComplexSignal({2.0, 3.0, 5.0}),
                                {.order = 2, .memory = 1, .h = {{2, {0.0, 1.0, 0.0, 0.0}}}});
        CHECK(y[0] == cplx(0.0));
        CHECK(y[1] == cplx(6.0));
        CHECK(y[2] == cplx(15.0));
    }
    SUBCASE("first-order kernel equals direct FIR") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> h(7);
        for (auto& v : h) v = u(rng);
        auto x = random_signal(100, 6);
        auto y = volterra_apply(x, {.order = 1, .memory = 6, .h = {{1, h}}});
        auto ref = fir(x.vec(), h);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - ref[i]) <= 1e-12);
    }
    CHECK_THROWS_AS(volterra_apply(ComplexSignal({1.0}), {.order = 1, .memory = 1, .h = {{2, {1.0}}}}),
                    ParameterError);
}

TEST_CASE("add_awgn") {
    const auto clean = gen_baseband({.kind = Modulation::CW, .carrier = 0.13}, 100000);
    SUBCASE("same seed gives identical realizations") {
        auto a = add_awgn(clean, 10.0, 99);
        auto b = add_awgn(clean, 10.0, 99);
        CHECK(a.vec() == b.vec());
    }
    SUBCASE("20 dB") {
        auto y = add_awgn(clean, 20.0, 1);
        CHECK(std::abs(noise_power_db(clean, y) - (-20.0)) <= 0.5);
    }
    SUBCASE("-4 dB") {
        auto y = add_awgn(clean, -4.0, 2);
        CHECK(std::abs(noise_power_db(clean, y) - 4.0) <= 0.5);
    }
    SUBCASE("I and Q carry half the variance each") {
        auto y = add_awgn(clean, 0.0, 3);
        double vi = 0.0, vq = 0.0;
        for (std::size_t i = 0; i < clean.size(); ++i) {
            const auto d = y[i] - clean[i];
            vi += d.real() * d.real();
            vq += d.imag() * d.imag();
        }
        vi /= static_cast<double>(clean.size());
        vq /= static_cast<double>(clean.size());
        CHECK(std::abs(vi - 0.5) < 0.02);
        CHECK(std::abs(vq - 0.5) < 0.02);
    }
    CHECK_THROWS_AS(add_awgn(ComplexSignal(std::vector<cplx>(8)), 10.0, 0), DegenerateInputError);
}
