#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rfsei/signal.hpp"

namespace rfsei::synth {

enum class Modulation { CW, LFM, BPSK, QPSK, PSK8, MSK };

inline constexpr std::array<Modulation, 6> kAllModulations = {
    Modulation::CW, Modulation::LFM, Modulation::BPSK,
    Modulation::QPSK, Modulation::PSK8, Modulation::MSK};

std::string_view to_string(Modulation m);
std::optional<Modulation> modulation_from_string(std::string_view name);

struct ModulationSpec {
    Modulation kind = Modulation::CW;
    double carrier = 0.1;          // cycles/sample
    int samples_per_symbol = 8;    // keyed kinds only
    double sweep_span = 0.2;       // LFM only, cycles/sample
    std::uint64_t seed = 0;

    void validate() const;
};

/// Hammerstein power-amplifier fingerprint: odd-order memoryless polynomial
/// `b` followed by the FIR memory stage `c`.
struct EmitterProfile {
    std::string name;
    std::vector<double> b;
    std::vector<double> c;

    int nonlinear_order() const { return static_cast<int>(b.size()); }
    int memory_depth() const { return static_cast<int>(c.size()); }
    void validate() const;
};

/// Linear stage shared by the stock profiles (memory depth 6, decaying taps).
std::vector<double> default_linear_stage();

/// The seven reference emitters (Radiation1..7).
std::vector<EmitterProfile> reference_emitters();

/// Dense Volterra kernels. `h.at(k)` holds (memory+1)^k coefficients indexed
/// row-major by the delays (q1, ..., qk).
struct VolterraKernels {
    int order = 1;
    int memory = 0;
    std::map<int, std::vector<double>> h;

    void validate() const;
};

ComplexSignal gen_baseband(const ModulationSpec& spec, std::size_t n);
ComplexSignal normalize_power(const ComplexSignal& x);
ComplexSignal hammerstein_apply(const ComplexSignal& x, const EmitterProfile& p);
ComplexSignal volterra_apply(const ComplexSignal& x, const VolterraKernels& h);
ComplexSignal add_awgn(const ComplexSignal& x, double snr_db, std::uint64_t seed);

}  // namespace rfsei::synth
