#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rfsei/signal.hpp"
#include "rfsei/vmd.hpp"

namespace rfsei::icvmd {

enum class DcConvention { DcToPositive, DcSplit };

/// Real-valued positive- and negative-frequency views of a complex signal.
///
/// The imaginary parts of the DC and Nyquist bins cannot be carried by either
/// real sequence (their quadrature is zero), so they are kept as scalars and
/// restored together with the residuals.
struct AnalyticPair {
    std::vector<double> x_plus;
    std::vector<double> x_minus;
    DcConvention dc_convention = DcConvention::DcToPositive;
    std::size_t length = 0;
    double dc_imag = 0.0;       // imaginary mean of the input
    double nyquist_imag = 0.0;  // imaginary amplitude of the (-1)^n component
};

enum class Label { SignalPart, FeaturePart, DC, Special };
std::string_view to_string(Label l);
std::optional<Label> label_from_string(std::string_view name);

enum class DcPolicy { MergeIntoSignal, Separate, Drop };

struct PartitionPolicy {
    int n_signal_modes = 1;
    DcPolicy dc_policy = DcPolicy::Separate;
    double special_lo = 0.9 * std::numbers::pi;
    double special_hi = std::numbers::pi;
    double special_energy_min = 0.05;
    // Modes whose center frequencies chain within this many Wiener half-widths
    // (1/sqrt(2 alpha)) are ranked as one component, so a tone split across two
    // modes is labeled as a unit. 0 ranks every mode on its own.
    double merge_halfwidths = 2.0;

    void validate() const;
};

struct IcvmdConfig {
    vmd::VmdConfig pos;
    vmd::VmdConfig neg;
    PartitionPolicy partition;
    DcConvention dc_convention = DcConvention::DcToPositive;
    // Shared-parameter (CVMD-style) mode: the negative side reuses `pos`.
    bool shared_parameters = false;

    const vmd::VmdConfig& negative_side() const { return shared_parameters ? pos : neg; }
    void validate() const;
};

struct SideLabels {
    std::vector<Label> pos;
    std::vector<Label> neg;
};

struct IcvmdResult {
    vmd::VmdResult pos_modes;
    vmd::VmdResult neg_modes;
    SideLabels labels;
    std::vector<double> residual_plus;
    std::vector<double> residual_minus;
    AnalyticPair split;
    double sample_rate = 1.0;

    std::size_t length() const { return split.length; }
};

/// Which parts of a decomposition to sum back. `residual` also restores the
/// DC/Nyquist quadrature scalars kept in AnalyticPair.
struct Selection {
    bool signal = false;
    bool feature = false;
    bool dc = false;
    bool special = false;
    bool residual = false;

    static Selection all() { return {true, true, true, true, true}; }
    bool contains(Label l) const;
    // Comma-separated names: signal, feature, dc, special, residual, all.
    static Selection parse(std::string_view list);
};

AnalyticPair analytic_split(const ComplexSignal& x, DcConvention dc = DcConvention::DcToPositive);

// Quadrature component of the analytic signal built by one-sided spectrum doubling.
std::vector<double> hilbert_imag(std::span<const double> x);

// x + j H[x].
std::vector<cplx> analytic_signal(std::span<const double> x);

IcvmdResult icvmd_decompose(const ComplexSignal& x, const IcvmdConfig& cfg);

ComplexSignal reconstruct(const IcvmdResult& r, const Selection& selection);

SideLabels partition_modes(const vmd::VmdResult& pos, const vmd::VmdResult& neg,
                           const PartitionPolicy& policy);

// Mode energies as fractions of the combined energy of both sides.
std::pair<std::vector<double>, std::vector<double>> energy_fractions(const vmd::VmdResult& pos,
                                                                     const vmd::VmdResult& neg);

struct ProbeSuggestion {
    int k_low = 5;
    int k_high = 8;
    double alpha = 1000.0;
    int peaks = 0;
    double mean_bandwidth = 0.0;  // rad/sample

    bool operator==(const ProbeSuggestion&) const = default;
};

ProbeSuggestion probe_parameters(const ComplexSignal& x);

}  // namespace rfsei::icvmd
