#include "rfsei/icvmd.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <string>

#include "rfsei/errors.hpp"
#include "rfsei/fft.hpp"

namespace rfsei::icvmd {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> real_part(const std::vector<cplx>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
    return out;
}

std::vector<double> side_sum(const vmd::VmdResult& side, const std::vector<Label>& labels,
                             const Selection& sel, std::span<const double> residual) {
    std::vector<double> acc(residual.size(), 0.0);
    for (std::size_t k = 0; k < side.mode_count(); ++k) {
        if (!sel.contains(labels[k])) continue;
        const auto& mode = side.modes_time[k];
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += mode[i];
    }
    if (sel.residual)
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += residual[i];
    return acc;
}

std::vector<Label> label_side(const vmd::VmdResult& side, std::span<const double> fractions,
                              const PartitionPolicy& policy) {
    const auto K = side.mode_count();
    if (K == 0) throw ParameterError("partition_modes: empty mode set");
    if (static_cast<std::size_t>(policy.n_signal_modes) > K)
        throw ParameterError("partition_modes: n_signal_modes exceeds available modes");

    const double dc_limit = side.mode_set.grid.step();
    std::vector<Label> labels(K, Label::FeaturePart);
    std::vector<bool> assigned(K, false);
    for (std::size_t k = 0; k < K; ++k) {
        const double w = side.mode_set.omegas[k];
        if (w < dc_limit) {
            labels[k] = policy.dc_policy == DcPolicy::MergeIntoSignal ? Label::SignalPart : Label::DC;
            assigned[k] = true;
        } else if (w > policy.special_lo && w <= policy.special_hi &&
                   fractions[k] >= policy.special_energy_min) {
            labels[k] = Label::Special;
            assigned[k] = true;
        }
    }

    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < K; ++k)
        if (!assigned[k]) rest.push_back(k);

    // Group the remaining modes into clusters of near-coincident center frequencies.
    // Omegas are ascending, so chaining neighbours is enough.
    const double merge_width = policy.merge_halfwidths / std::sqrt(2.0 * side.mode_set.alpha);
    std::vector<std::vector<std::size_t>> clusters;
    for (auto k : rest) {
        if (!clusters.empty() &&
            side.mode_set.omegas[k] - side.mode_set.omegas[clusters.back().back()] < merge_width)
            clusters.back().push_back(k);
        else
            clusters.push_back({k});
    }
    std::vector<double> cluster_energy;
    for (const auto& c : clusters) {
        double e = 0.0;
        for (auto k : c) e += fractions[k];
        cluster_energy.push_back(e);
    }
    std::vector<std::size_t> order(clusters.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cluster_energy[a] > cluster_energy[b]; });
    const auto n_signal = std::min(order.size(), static_cast<std::size_t>(policy.n_signal_modes));
    for (std::size_t i = 0; i < n_signal; ++i)
        for (auto k : clusters[order[i]]) labels[k] = Label::SignalPart;
    return labels;
}

}  // namespace

std::string_view to_string(Label l) {
    switch (l) {
        case Label::SignalPart: return "signal";
        case Label::FeaturePart: return "feature";
        case Label::DC: return "dc";
        case Label::Special: return "special";
    }
    return "?";
}

std::optional<Label> label_from_string(std::string_view name) {
    for (auto l : {Label::SignalPart, Label::FeaturePart, Label::DC, Label::Special})
        if (to_string(l) == name) return l;
    return std::nullopt;
}

void PartitionPolicy::validate() const {
    if (n_signal_modes < 0) throw ParameterError("PartitionPolicy: n_signal_modes must be >= 0");
    if (!(special_energy_min >= 0.0 && special_energy_min <= 1.0))
        throw ParameterError("PartitionPolicy: special_energy_min must lie in [0, 1]");
    if (!(merge_halfwidths >= 0.0)) throw ParameterError("PartitionPolicy: merge_halfwidths must be >= 0");
    if (!(special_lo >= 0.0 && special_lo < special_hi && special_hi <= kPi))
        throw ParameterError("PartitionPolicy: special window must satisfy 0 <= lo < hi <= pi");
}

void IcvmdConfig::validate() const {
    pos.validate();
    negative_side().validate();
    partition.validate();
}

bool Selection::contains(Label l) const {
    switch (l) {
        case Label::SignalPart: return signal;
        case Label::FeaturePart: return feature;
        case Label::DC: return dc;
        case Label::Special: return special;
    }
    return false;
}

Selection Selection::parse(std::string_view list) {
    Selection sel;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto end = std::min(list.find(',', start), list.size());
        const auto item = list.substr(start, end - start);
        if (item == "signal") sel.signal = true;
        else if (item == "feature") sel.feature = true;
        else if (item == "dc") sel.dc = true;
        else if (item == "special") sel.special = true;
        else if (item == "residual") sel.residual = true;
        else if (item == "all") sel = Selection::all();
        else if (!item.empty()) throw ParameterError("unknown selection item '" + std::string(item) + "'");
        start = end + 1;
    }
    return sel;
}

AnalyticPair analytic_split(const ComplexSignal& x, DcConvention dc) {
    const auto N = x.size();
    if (N < 4) throw ParameterError("analytic_split: need at least 4 samples");
    const auto X = fft::forward(x.samples());
    std::vector<cplx> plus(N, cplx{}), minus(N, cplx{});
    const auto half = (N - 1) / 2;  // strictly positive bins below Nyquist
    for (std::size_t m = 1; m <= half; ++m) {
        plus[m] = X[m];
        minus[m] = std::conj(X[N - m]);
    }
    const double dc_re = X[0].real();
    if (dc == DcConvention::DcToPositive) {
        plus[0] = dc_re;
    } else {
        plus[0] = 0.5 * dc_re;
        minus[0] = 0.5 * dc_re;
    }
    AnalyticPair pair;
    pair.dc_convention = dc;
    pair.length = N;
    pair.dc_imag = X[0].imag() / static_cast<double>(N);
    if (N % 2 == 0) {
        const cplx nyq = X[N / 2];
        plus[N / 2] = 0.5 * nyq.real();
        minus[N / 2] = 0.5 * nyq.real();
        pair.nyquist_imag = nyq.imag() / static_cast<double>(N);
    }
    pair.x_plus = real_part(fft::inverse(plus));
    pair.x_minus = real_part(fft::inverse(minus));
    return pair;
}

std::vector<double> hilbert_imag(std::span<const double> x) {
    const auto N = x.size();
    if (N < 4) throw ParameterError("hilbert_imag: need at least 4 samples");
    auto X = fft::forward(x);
    X[0] = 0.0;
    for (std::size_t m = 1; m < N; ++m) {
        if (2 * m < N) X[m] *= 2.0;
        else if (2 * m == N) X[m] = 0.0;
        else X[m] = 0.0;
    }
    const auto y = fft::inverse(X);
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i) out[i] = y[i].imag();
    return out;
}

std::vector<cplx> analytic_signal(std::span<const double> x) {
    const auto h = hilbert_imag(x);
    std::vector<cplx> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = cplx(x[i], h[i]);
    return out;
}

std::pair<std::vector<double>, std::vector<double>> energy_fractions(const vmd::VmdResult& pos,
                                                                     const vmd::VmdResult& neg) {
    auto energies = [](const vmd::VmdResult& side) {
        std::vector<double> e;
        for (const auto& m : side.modes_time) e.push_back(energy(std::span<const double>(m)));
        return e;
    };
    auto ep = energies(pos);
    auto en = energies(neg);
    const double total = std::accumulate(ep.begin(), ep.end(), 0.0) +
                         std::accumulate(en.begin(), en.end(), 0.0);
    if (total > 0.0) {
        for (auto& v : ep) v /= total;
        for (auto& v : en) v /= total;
    }
    return {ep, en};
}

SideLabels partition_modes(const vmd::VmdResult& pos, const vmd::VmdResult& neg,
                           const PartitionPolicy& policy) {
    policy.validate();
    const auto [fp, fn] = energy_fractions(pos, neg);
    return {label_side(pos, fp, policy), label_side(neg, fn, policy)};
}

IcvmdResult icvmd_decompose(const ComplexSignal& x, const IcvmdConfig& cfg) {
    cfg.validate();
    IcvmdResult r;
    r.split = analytic_split(x, cfg.dc_convention);
    r.sample_rate = x.sample_rate();
    // The two sides share no state.
    auto neg_future = std::async(std::launch::async, [&] {
        return vmd::vmd_decompose(r.split.x_minus, cfg.negative_side());
    });
    r.pos_modes = vmd::vmd_decompose(r.split.x_plus, cfg.pos);
    r.neg_modes = neg_future.get();
    r.labels = partition_modes(r.pos_modes, r.neg_modes, cfg.partition);
    r.residual_plus = r.pos_modes.residual;
    r.residual_minus = r.neg_modes.residual;
    return r;
}

ComplexSignal reconstruct(const IcvmdResult& r, const Selection& selection) {
    const auto N = r.length();
    if (N == 0) throw ParameterError("reconstruct: empty decomposition");
    const auto s_plus = side_sum(r.pos_modes, r.labels.pos, selection, r.residual_plus);
    const auto s_minus = side_sum(r.neg_modes, r.labels.neg, selection, r.residual_minus);
    const auto a_plus = analytic_signal(s_plus);
    const auto a_minus = analytic_signal(s_minus);
    std::vector<cplx> out(N);
    for (std::size_t i = 0; i < N; ++i) out[i] = a_plus[i] + std::conj(a_minus[i]);
    if (selection.residual) {
        const bool even = N % 2 == 0;
        for (std::size_t i = 0; i < N; ++i) {
            double q = r.split.dc_imag;
            if (even) q += (i % 2 == 0 ? 1.0 : -1.0) * r.split.nyquist_imag;
            out[i] += cplx(0.0, q);
        }
    }
    return ComplexSignal(std::move(out), r.sample_rate);
}

ProbeSuggestion probe_parameters(const ComplexSignal& x) {
    const auto N = x.size();
    if (N < 64) throw ParameterError("probe_parameters: need at least 64 samples");
    const auto X = fft::forward(x.samples());
    std::vector<double> power(N);
    for (std::size_t m = 0; m < N; ++m) power[m] = std::norm(X[m]) / static_cast<double>(N);

    // Circular moving average, width ~N/16 (odd).
    std::size_t width = std::max<std::size_t>(3, N / 16);
    if (width % 2 == 0) ++width;
    const auto half = width / 2;
    std::vector<double> smooth(N, 0.0);
    double window = 0.0;
    for (std::size_t j = 0; j < width; ++j) window += power[(N - half + j) % N];
    for (std::size_t m = 0; m < N; ++m) {
        smooth[m] = window / static_cast<double>(width);
        window += power[(m + half + 1) % N] - power[(m + N - half) % N];
    }

    std::vector<double> sorted = smooth;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(N / 2), sorted.end());
    const double median = sorted[N / 2];
    const double peak_max = *std::max_element(smooth.begin(), smooth.end());
    // +6 dB over the median, floored 60 dB under the strongest bin so roundoff is not a peak.
    const double threshold = std::max(median * std::pow(10.0, 0.6), peak_max * 1e-6);

    ProbeSuggestion out;
    std::vector<double> bandwidths;
    std::size_t start = N;
    for (std::size_t m = 0; m < N; ++m)
        if (smooth[m] <= threshold) {
            start = m;
            break;
        }
    if (start == N) {
        // Everything above threshold: a single flat region.
        out.peaks = 1;
        bandwidths.push_back(2.0 * kPi);
    } else {
        std::size_t i = 0;
        while (i < N) {
            const auto m = (start + i) % N;
            if (smooth[m] <= threshold) {
                ++i;
                continue;
            }
            std::vector<double> region;
            while (i < N && smooth[(start + i) % N] > threshold) {
                region.push_back(smooth[(start + i) % N]);
                ++i;
            }
            const double top = *std::max_element(region.begin(), region.end());
            const auto above = std::count_if(region.begin(), region.end(),
                                             [&](double v) { return v >= 0.5 * top; });
            bandwidths.push_back(2.0 * kPi * static_cast<double>(above) / static_cast<double>(N));
            ++out.peaks;
        }
    }
    out.k_low = std::max(out.peaks, 5);
    out.k_high = std::max(out.peaks + 2, 8);
    out.mean_bandwidth =
        bandwidths.empty()
            ? 2.0 * kPi * static_cast<double>(width) / static_cast<double>(N)
            : std::accumulate(bandwidths.begin(), bandwidths.end(), 0.0) /
                  static_cast<double>(bandwidths.size());
    const double raw_alpha = static_cast<double>(N) / (4.0 * out.mean_bandwidth);
    out.alpha = std::pow(10.0, std::round(std::log10(raw_alpha)));
    return out;
}

}  // namespace rfsei::icvmd
