#include "rfsei/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include "rfsei/config.hpp"
#include "rfsei/errors.hpp"
#include "rfsei/parallel.hpp"

namespace rfsei::harness {

namespace fs = std::filesystem;

std::vector<double> DatasetSpec::default_snr_grid() {
    std::vector<double> grid;
    for (int snr = -4; snr <= 20; snr += 2) grid.push_back(snr);
    return grid;
}

void DatasetSpec::validate() const {
    if (emitters.empty()) throw ParameterError("DatasetSpec: no emitters");
    if (modulations.empty()) throw ParameterError("DatasetSpec: no modulations");
    if (snr_grid_db.empty()) throw ParameterError("DatasetSpec: empty SNR grid");
    if (n_samples < 64) throw ParameterError("DatasetSpec: n_samples must be >= 64");
    if (signals_per_emitter == 0) throw ParameterError("DatasetSpec: signals_per_emitter must be >= 1");
    for (const auto& e : emitters) e.validate();
    for (double snr : snr_grid_db)
        if (!std::isfinite(snr)) throw ParameterError("DatasetSpec: non-finite SNR");
    for (auto m : modulations) synth::ModulationSpec{m, carrier, samples_per_symbol}.validate();
}

std::vector<std::size_t> modulation_counts(const DatasetSpec& spec) {
    const auto M = spec.modulations.size();
    std::vector<std::size_t> counts(M, spec.signals_per_emitter / M);
    for (std::size_t i = 0; i < spec.signals_per_emitter % M; ++i) ++counts[i];
    return counts;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t s = mix(base);
    for (auto p : parts) s = mix(s ^ p);
    return s;
}

std::vector<synth::EmitterProfile> auxiliary_emitters(std::uint64_t seed, std::size_t count) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(0.1, 0.5);
    std::vector<synth::EmitterProfile> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double b3 = coef(rng);
        const double b5 = coef(rng);
        out.push_back({"Auxiliary" + std::to_string(i + 1), {1.0, 0.0, b3, 0.0, b5}, synth::default_linear_stage()});
    }
    return out;
}

namespace {

struct Job {
    std::size_t emitter;
    std::size_t modulation;
    std::size_t snr_index;
    std::size_t repetition;
};

std::string signal_id(const DatasetSpec& spec, const Job& job) {
    std::ostringstream id;
    id << "e" << job.emitter << "_" << synth::to_string(spec.modulations[job.modulation]) << "_snr"
       << (spec.snr_grid_db[job.snr_index] < 0 ? "m" : "p") << std::fixed << std::setprecision(1)
       << std::abs(spec.snr_grid_db[job.snr_index]) << "_r" << std::setw(4) << std::setfill('0') << job.repetition;
    return id.str();
}

}  // namespace

std::vector<LabeledSignal> synthesize(const DatasetSpec& spec) {
    spec.validate();
    const auto counts = modulation_counts(spec);
    std::vector<Job> jobs;
    for (std::size_t e = 0; e < spec.emitters.size(); ++e)
        for (std::size_t s = 0; s < spec.snr_grid_db.size(); ++s)
            for (std::size_t m = 0; m < spec.modulations.size(); ++m)
                for (std::size_t r = 0; r < counts[m]; ++r) jobs.push_back({e, m, s, r});

    std::vector<std::optional<LabeledSignal>> slots(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const auto& job = jobs[i];
        const auto modulation = spec.modulations[job.modulation];
        const std::uint64_t seed = derive_seed(
            spec.seed, {job.emitter, static_cast<std::uint64_t>(modulation), job.snr_index, job.repetition});
        synth::ModulationSpec ms{modulation, spec.carrier, spec.samples_per_symbol};
        ms.seed = seed;
        const double snr = spec.snr_grid_db[job.snr_index];
        auto x = synth::add_awgn(
            synth::hammerstein_apply(synth::normalize_power(synth::gen_baseband(ms, spec.n_samples)),
                                     spec.emitters[job.emitter]),
            snr, derive_seed(seed, {1}));
        io::SignalMeta meta{1.0, static_cast<int>(job.emitter), std::string(synth::to_string(modulation)), snr, seed,
                            spec.emitters[job.emitter].name};
        slots[i] = LabeledSignal{signal_id(spec, job), std::move(x), std::move(meta)};
    });
    std::vector<LabeledSignal> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

io::json generate_dataset(const DatasetSpec& spec, const fs::path& out_dir) {
    const auto signals = synthesize(spec);
    std::error_code ec;
    fs::create_directories(out_dir / "signals", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "signals").string() + ": " + ec.message());
    io::json files = io::json::array();
    for (const auto& s : signals) {
        const auto rel = fs::path("signals") / (s.id + ".iqf32");
        io::write_iqf32(out_dir / rel, s.signal);
        io::write_sidecar(out_dir / rel, s.meta);
        auto entry = io::to_json(s.meta);
        entry["id"] = s.id;
        entry["file"] = rel.generic_string();
        files.push_back(std::move(entry));
    }
    io::json manifest = {{"schema_version", config::kSchemaVersion},
                         {"spec", config::to_json(spec)},
                         {"n_classes", spec.emitters.size()},
                         {"signals", files}};
    io::write_json(out_dir / "manifest.json", manifest);
    return manifest;
}

std::vector<LabeledSignal> load_dataset(const fs::path& dir) {
    const auto manifest = io::read_json(dir / "manifest.json");
    std::vector<LabeledSignal> out;
    try {
        for (const auto& entry : manifest.at("signals")) {
            const auto file = dir / entry.at("file").get<std::string>();
            auto meta = io::read_sidecar(file);
            out.push_back({entry.at("id").get<std::string>(), io::read_iqf32(file, meta.sample_rate), std::move(meta)});
        }
    } catch (const io::json::exception& e) {
        throw IoError("malformed dataset manifest: " + std::string(e.what()));
    }
    return out;
}

Split split_train_test(const std::vector<LabeledSignal>& data, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ParameterError("test_fraction must lie in (0, 1)");
    std::map<std::pair<int, double>, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < data.size(); ++i) cells[{data[i].meta.label, data[i].meta.snr_db}].push_back(i);
    Split split;
    for (auto& [key, members] : cells) {
        std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(key.first),
                                               static_cast<std::uint64_t>(std::llround(key.second * 1000.0))}));
        std::shuffle(members.begin(), members.end(), rng);
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
        split.test.insert(split.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
        split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Subsample subsample_per_class(const std::vector<LabeledSignal>& data, const std::vector<std::size_t>& pool,
                              double proportion, std::size_t n_classes, std::uint64_t seed) {
    if (!(proportion > 0.0 && proportion <= 1.0)) throw ParameterError("proportion must lie in (0, 1]");
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (auto i : pool) {
        const int label = data[i].meta.label;
        if (label < 0 || static_cast<std::size_t>(label) >= n_classes)
            throw ParameterError("subsample: label outside the class range");
        by_class[static_cast<std::size_t>(label)].push_back(i);
    }
    Subsample out;
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto& members = by_class[c];
        std::mt19937_64 rng(derive_seed(seed, {c}));
        std::shuffle(members.begin(), members.end(), rng);
        const auto keep = static_cast<std::size_t>(std::llround(proportion * static_cast<double>(members.size())));
        if (keep == 0) out.empty_classes.push_back(static_cast<int>(c));
        out.indices.insert(out.indices.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::sort(out.indices.begin(), out.indices.end());
    return out;
}

}  // namespace rfsei::harness
