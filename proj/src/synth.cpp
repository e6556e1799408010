#include "rfsei/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "rfsei/errors.hpp"

namespace rfsei::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_keyed(Modulation m) {
    return m == Modulation::BPSK || m == Modulation::QPSK || m == Modulation::PSK8 ||
           m == Modulation::MSK;
}

int psk_order(Modulation m) {
    switch (m) {
        case Modulation::BPSK: return 2;
        case Modulation::QPSK: return 4;
        case Modulation::PSK8: return 8;
        default: return 1;
    }
}

}  // namespace

std::string_view to_string(Modulation m) {
    switch (m) {
        case Modulation::CW: return "CW";
        case Modulation::LFM: return "LFM";
        case Modulation::BPSK: return "BPSK";
        case Modulation::QPSK: return "QPSK";
        case Modulation::PSK8: return "8PSK";
        case Modulation::MSK: return "MSK";
    }
    return "?";
}

std::optional<Modulation> modulation_from_string(std::string_view name) {
    for (auto m : kAllModulations)
        if (to_string(m) == name) return m;
    if (name == "PSK8") return Modulation::PSK8;
    return std::nullopt;
}

void ModulationSpec::validate() const {
    if (!(carrier >= 0.0 && carrier < 0.5))
        throw ParameterError("ModulationSpec: carrier must lie in [0, 0.5)");
    if (is_keyed(kind) && samples_per_symbol < 1)
        throw ParameterError("ModulationSpec: samples_per_symbol must be >= 1");
    double upper = carrier;
    if (kind == Modulation::LFM) {
        if (!(sweep_span >= 0.0)) throw ParameterError("ModulationSpec: negative sweep_span");
        upper = carrier + sweep_span / 2.0;
    } else if (kind == Modulation::MSK) {
        upper = carrier + 1.0 / (4.0 * samples_per_symbol);
    }
    if (!(upper < 0.5)) throw ParameterError("ModulationSpec: occupied band aliases past 0.5");
}

void EmitterProfile::validate() const {
    if (b.empty() || b.size() % 2 == 0)
        throw ParameterError("EmitterProfile: nonlinear order must be odd and >= 1");
    if (c.empty()) throw ParameterError("EmitterProfile: memory depth must be >= 1");
    bool b_nonzero = false, c_nonzero = false;
    for (double v : b) {
        if (!std::isfinite(v)) throw ParameterError("EmitterProfile: non-finite b");
        b_nonzero |= v != 0.0;
    }
    for (double v : c) {
        if (!std::isfinite(v)) throw ParameterError("EmitterProfile: non-finite c");
        c_nonzero |= v != 0.0;
    }
    if (!b_nonzero || !c_nonzero)
        throw ParameterError("EmitterProfile: b and c need at least one nonzero entry");
}

std::vector<double> default_linear_stage() { return {1.0, 0.05, 0.01, 0.005, 0.001, 0.0005}; }

std::vector<EmitterProfile> reference_emitters() {
    const std::array<std::array<double, 2>, 7> odd_terms = {{
        {0.1126, 0.2937},
        {0.2479, 0.1396},
        {0.3959, 0.1948},
        {0.5027, 0.2833},
        {0.1683, 0.4412},
        {0.3246, 0.3463},
        {0.4698, 0.3946},
    }};
    std::vector<EmitterProfile> out;
    for (std::size_t i = 0; i < odd_terms.size(); ++i) {
        out.push_back({"Radiation" + std::to_string(i + 1),
                       {1.0, 0.0, odd_terms[i][0], 0.0, odd_terms[i][1]},
                       default_linear_stage()});
    }
    return out;
}

void VolterraKernels::validate() const {
    if (order < 1) throw ParameterError("VolterraKernels: order must be >= 1");
    if (memory < 0) throw ParameterError("VolterraKernels: memory must be >= 0");
    for (const auto& [k, coeffs] : h) {
        if (k < 1 || k > order) throw ParameterError("VolterraKernels: kernel order out of range");
        std::size_t expected = 1;
        for (int i = 0; i < k; ++i) expected *= static_cast<std::size_t>(memory + 1);
        if (coeffs.size() != expected)
            throw ParameterError("VolterraKernels: kernel size does not match memory^order");
        for (double v : coeffs)
            if (!std::isfinite(v)) throw ParameterError("VolterraKernels: non-finite coefficient");
    }
}

ComplexSignal gen_baseband(const ModulationSpec& spec, std::size_t n) {
    if (n == 0) throw ParameterError("gen_baseband: n must be >= 1");
    spec.validate();
    std::vector<cplx> out(n);
    std::mt19937_64 rng(spec.seed);
    const auto sps = static_cast<std::size_t>(spec.samples_per_symbol);

    switch (spec.kind) {
        case Modulation::CW:
            for (std::size_t t = 0; t < n; ++t)
                out[t] = std::polar(1.0, kTwoPi * spec.carrier * static_cast<double>(t));
            break;
        case Modulation::LFM: {
            // Instantaneous frequency runs linearly from carrier - span/2 to carrier + span/2.
            const double f0 = spec.carrier - spec.sweep_span / 2.0;
            const double rate = spec.sweep_span / static_cast<double>(n);
            for (std::size_t t = 0; t < n; ++t) {
                const double td = static_cast<double>(t);
                out[t] = std::polar(1.0, kTwoPi * (f0 * td + 0.5 * rate * td * td));
            }
            break;
        }
        case Modulation::BPSK:
        case Modulation::QPSK:
        case Modulation::PSK8: {
            const int order = psk_order(spec.kind);
            const double offset = spec.kind == Modulation::QPSK ? std::numbers::pi / 4.0 : 0.0;
            std::uniform_int_distribution<int> pick(0, order - 1);
            double symbol_phase = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                if (t % sps == 0) symbol_phase = offset + kTwoPi * pick(rng) / order;
                out[t] = std::polar(1.0, kTwoPi * spec.carrier * static_cast<double>(t) + symbol_phase);
            }
            break;
        }
        case Modulation::MSK: {
            const double deviation = 1.0 / (4.0 * static_cast<double>(sps));
            std::uniform_int_distribution<int> pick(0, 1);
            double phase = 0.0;
            double freq = spec.carrier;
            for (std::size_t t = 0; t < n; ++t) {
                if (t % sps == 0) freq = spec.carrier + (pick(rng) == 0 ? -deviation : deviation);
                out[t] = std::polar(1.0, phase);
                phase = std::fmod(phase + kTwoPi * freq, kTwoPi);
            }
            break;
        }
    }
    return ComplexSignal(std::move(out));
}

ComplexSignal normalize_power(const ComplexSignal& x) {
    const double p = x.mean_power();
    if (!(p > 0.0)) throw DegenerateInputError("normalize_power: all-zero input");
    const double scale = 1.0 / std::sqrt(p);
    std::vector<cplx> out(x.vec());
    for (auto& v : out) v *= scale;
    return ComplexSignal(std::move(out), x.sample_rate());
}

ComplexSignal hammerstein_apply(const ComplexSignal& x, const EmitterProfile& p) {
    p.validate();
    const auto n = x.size();
    std::vector<cplx> shaped(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double mag = std::abs(x[i]);
        double mag_pow = 1.0;
        cplx acc = 0.0;
        for (double bk : p.b) {
            acc += bk * x[i] * mag_pow;
            mag_pow *= mag;
        }
        shaped[i] = acc;
    }
    std::vector<cplx> out(n, cplx{});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t q = 0; q < p.c.size() && q <= i; ++q) out[i] += p.c[q] * shaped[i - q];
    return ComplexSignal(std::move(out), x.sample_rate());
}

ComplexSignal volterra_apply(const ComplexSignal& x, const VolterraKernels& h) {
    h.validate();
    const auto n = x.size();
    const auto taps = static_cast<std::size_t>(h.memory + 1);
    auto delayed = [&](std::size_t t, std::size_t q) { return q <= t ? x[t - q] : cplx{}; };

    std::vector<cplx> out(n, cplx{});
    for (const auto& [k, coeffs] : h.h) {
        std::vector<std::size_t> delays(static_cast<std::size_t>(k), 0);
        for (std::size_t flat = 0; flat < coeffs.size(); ++flat) {
            // Decode row-major index into the delay tuple (q1, ..., qk).
            std::size_t rem = flat;
            for (int j = k - 1; j >= 0; --j) {
                delays[static_cast<std::size_t>(j)] = rem % taps;
                rem /= taps;
            }
            const double coeff = coeffs[flat];
            if (coeff == 0.0) continue;
            for (std::size_t t = 0; t < n; ++t) {
                cplx prod = coeff;
                for (auto q : delays) prod *= delayed(t, q);
                out[t] += prod;
            }
        }
    }
    return ComplexSignal(std::move(out), x.sample_rate());
}

ComplexSignal add_awgn(const ComplexSignal& x, double snr_db, std::uint64_t seed) {
    const double p = x.mean_power();
    if (!(p > 0.0)) throw DegenerateInputError("add_awgn: zero-power input");
    if (!std::isfinite(snr_db)) throw ParameterError("add_awgn: non-finite snr");
    const double noise_var = p / std::pow(10.0, snr_db / 10.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var / 2.0));
    std::vector<cplx> out(x.vec());
    for (auto& v : out) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += cplx(re, im);
    }
    return ComplexSignal(std::move(out), x.sample_rate());
}

}  // namespace rfsei::synth
