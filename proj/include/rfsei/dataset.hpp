#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "rfsei/io.hpp"
#include "rfsei/synth.hpp"

namespace rfsei::harness {

struct DatasetSpec {
    std::vector<synth::EmitterProfile> emitters = synth::reference_emitters();
    std::vector<synth::Modulation> modulations = {synth::kAllModulations.begin(), synth::kAllModulations.end()};
    std::vector<double> snr_grid_db = default_snr_grid();
    std::size_t n_samples = 2100;
    /// Signals per emitter at each SNR point, spread evenly over the modulations.
    std::size_t signals_per_emitter = 60;
    std::uint64_t seed = 1;
    double carrier = 0.1;  // cycles/sample
    int samples_per_symbol = 8;

    static std::vector<double> default_snr_grid();
    void validate() const;
};

/// Signals per modulation for one emitter and SNR point: an even share, with the
/// remainder going to the first modulations in spec order.
std::vector<std::size_t> modulation_counts(const DatasetSpec& spec);

/// Emitters with b3, b5 drawn uniformly from [0.1, 0.5] (b2 = b4 = 0) and the
/// shared linear stage, for pretraining on hardware disjoint from the reference set.
std::vector<synth::EmitterProfile> auxiliary_emitters(std::uint64_t seed, std::size_t count = 5);

/// SplitMix64 chain over `parts`, used to give every signal an independent seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

struct LabeledSignal {
    std::string id;
    ComplexSignal signal;
    io::SignalMeta meta;
};

/// In-memory version of generate_dataset; same signals, same order.
std::vector<LabeledSignal> synthesize(const DatasetSpec& spec);

/// Writes `signals/<id>.iqf32` with sidecars and `manifest.json`; returns the manifest.
io::json generate_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir);
std::vector<LabeledSignal> load_dataset(const std::filesystem::path& dir);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified by (label, SNR): each cell is shuffled with `seed` and its first
/// round(test_fraction * size) entries go to the test split.
Split split_train_test(const std::vector<LabeledSignal>& data, double test_fraction, std::uint64_t seed);

struct Subsample {
    std::vector<std::size_t> indices;
    std::vector<int> empty_classes;  // classes with no sample left
};

/// Keeps round(proportion * n_c) of each class c within `pool` (seeded shuffle).
Subsample subsample_per_class(const std::vector<LabeledSignal>& data, const std::vector<std::size_t>& pool,
                              double proportion, std::size_t n_classes, std::uint64_t seed);

}  // namespace rfsei::harness
