#include "rfsei/features.hpp"

#include <algorithm>
#include <cmath>

#include "rfsei/errors.hpp"

namespace rfsei::harness {

Cumulants cumulants(std::span<const cplx> y) {
    if (y.empty()) throw ParameterError("cumulants: empty sequence");
    const double n = static_cast<double>(y.size());
    cplx mean(0.0, 0.0);
    for (const auto& v : y) mean += v;
    mean /= n;
    cplx m20(0.0, 0.0), m40(0.0, 0.0);
    double m21 = 0.0, m42 = 0.0;
    for (const auto& raw : y) {
        const cplx v = raw - mean;
        const cplx sq = v * v;
        const double p = std::norm(v);
        m20 += sq;
        m21 += p;
        m40 += sq * sq;
        m42 += p * p;
    }
    m20 /= n;
    m21 /= n;
    m40 /= n;
    m42 /= n;
    Cumulants c;
    c.c20 = std::abs(m20);
    c.c21 = m21;
    c.c40 = std::abs(m40 - 3.0 * m20 * m20);
    c.c42 = std::abs(m42 - std::norm(m20) - 2.0 * m21 * m21);
    return c;
}

std::vector<std::string> feature_names(std::size_t retained_modes) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < retained_modes; ++i) {
        const auto slot = "mode" + std::to_string(i);
        names.push_back(slot + ".omega");
        names.push_back(slot + ".bandwidth");
        names.push_back(slot + ".energy_fraction");
    }
    for (const char* c : {"abs_c20", "c21", "abs_c40", "abs_c42"}) names.emplace_back(c);
    return names;
}

double mode_bandwidth(const vmd::ModeSet& modes, std::size_t k) {
    const auto& spec = modes.mode_spectra.at(k);
    if (spec.empty()) return 0.0;
    std::size_t peak = 0;
    for (std::size_t m = 1; m < spec.size(); ++m)
        if (std::norm(spec[m]) > std::norm(spec[peak])) peak = m;
    const double half = std::norm(spec[peak]) / 2.0;
    if (half == 0.0) return 0.0;
    std::size_t lo = peak, hi = peak;
    while (lo > 0 && std::norm(spec[lo - 1]) >= half) --lo;
    while (hi + 1 < spec.size() && std::norm(spec[hi + 1]) >= half) ++hi;
    return static_cast<double>(hi - lo + 1) * modes.grid.step();
}

FeatureVector extract_features(const icvmd::IcvmdResult& r, std::size_t retained_modes) {
    struct Slot {
        double omega, bandwidth, fraction;
    };
    const auto [fp, fn] = icvmd::energy_fractions(r.pos_modes, r.neg_modes);
    std::vector<Slot> slots;
    bool any_feature = false;
    auto collect = [&](const vmd::VmdResult& side, const std::vector<icvmd::Label>& labels,
                       const std::vector<double>& fractions, double sign) {
        for (std::size_t k = 0; k < labels.size(); ++k) {
            if (labels[k] == icvmd::Label::FeaturePart) any_feature = true;
            if (labels[k] != icvmd::Label::FeaturePart && labels[k] != icvmd::Label::Special) continue;
            slots.push_back({sign * side.mode_set.omegas[k], mode_bandwidth(side.mode_set, k), fractions[k]});
        }
    };
    collect(r.pos_modes, r.labels.pos, fp, 1.0);
    collect(r.neg_modes, r.labels.neg, fn, -1.0);
    if (!any_feature) throw DegenerateInputError("extract_features: decomposition has no FeaturePart mode");
    std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.fraction > b.fraction; });
    slots.resize(retained_modes, Slot{0.0, 0.0, 0.0});

    FeatureVector f;
    for (const auto& s : slots) f.values.insert(f.values.end(), {s.omega, s.bandwidth, s.fraction});
    icvmd::Selection feature_only;
    feature_only.feature = true;
    const auto y = icvmd::reconstruct(r, feature_only);
    const auto c = cumulants(y.samples());
    f.values.insert(f.values.end(), {c.c20, c.c21, c.c40, c.c42});
    return f;
}

FeatureVector raw_cumulant_features(const ComplexSignal& x) {
    const auto c = cumulants(x.samples());
    return {{c.c20, c.c21, c.c40, c.c42}};
}

}  // namespace rfsei::harness
