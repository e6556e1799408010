#pragma once

#include <span>
#include <string>
#include <vector>

#include "rfsei/icvmd.hpp"

namespace rfsei::harness {

/// Magnitudes of the second- and fourth-order cumulants of the centered sequence.
struct Cumulants {
    double c20 = 0.0;
    double c21 = 0.0;
    double c40 = 0.0;
    double c42 = 0.0;
};

Cumulants cumulants(std::span<const cplx> y);

/// Layout: for each retained slot (signed center frequency, 3 dB bandwidth,
/// energy fraction), then |C20|, C21, |C40|, |C42| of the FeaturePart reconstruction.
struct FeatureVector {
    std::vector<double> values;
};

std::vector<std::string> feature_names(std::size_t retained_modes);

/// 3 dB width (rad/sample) of the spectral lobe around a mode's peak.
double mode_bandwidth(const vmd::ModeSet& modes, std::size_t k);

/// Retained modes are FeaturePart and Special modes of both sides, strongest first,
/// zero-padded to `retained_modes` slots. Negative-side frequencies carry a minus sign.
FeatureVector extract_features(const icvmd::IcvmdResult& r, std::size_t retained_modes = 4);

/// Baseline: the same four cumulants taken on the raw signal.
FeatureVector raw_cumulant_features(const ComplexSignal& x);

}  // namespace rfsei::harness
