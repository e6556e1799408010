#include "rfsei/fewshot.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "rfsei/config.hpp"
#include "rfsei/errors.hpp"
#include "rfsei/parallel.hpp"

namespace rfsei::harness {

namespace {

constexpr std::array<std::pair<Pipeline, const char*>, 5> kPipelines = {{
    {Pipeline::RawCumulants, "raw-cumulants"},
    {Pipeline::RawCNNProxy, "raw-cnn-proxy"},
    {Pipeline::IcvmdFeatures, "icvmd-features"},
    {Pipeline::IcvmdSAT, "icvmd-sat"},
    {Pipeline::IcvmdScratch, "icvmd-scratch"},
}};

ComplexSignal cut_to_segments(const ComplexSignal& x, std::size_t segment_length) {
    const auto n = x.size() / segment_length * segment_length;
    if (n == 0) throw ParameterError("signal is shorter than one segment");
    std::vector<cplx> v(x.samples().begin(), x.samples().begin() + static_cast<std::ptrdiff_t>(n));
    return ComplexSignal(std::move(v), x.sample_rate());
}

std::vector<Prediction> predict_all(const std::vector<tcn::Example>& test, const std::vector<double>& snrs,
                                    const tcn::NetParams& p) {
    std::vector<Prediction> out(test.size());
    parallel_for(test.size(), [&](std::size_t i) { out[i] = {test[i].label, tcn::predict(test[i], p), snrs[i]}; });
    return out;
}

}  // namespace

std::string_view to_string(Pipeline p) {
    for (const auto& [value, name] : kPipelines)
        if (value == p) return name;
    return "?";
}

std::optional<Pipeline> pipeline_from_string(std::string_view name) {
    for (const auto& [value, text] : kPipelines)
        if (name == text) return value;
    return std::nullopt;
}

bool uses_network(Pipeline p) { return p != Pipeline::RawCumulants && p != Pipeline::IcvmdFeatures; }

icvmd::IcvmdConfig ExperimentConfig::default_feature_icvmd() {
    icvmd::IcvmdConfig c;
    c.pos.K = 3;
    c.pos.alpha = 0.5;
    c.shared_parameters = true;
    c.partition.n_signal_modes = 0;
    return c;
}

icvmd::IcvmdConfig ExperimentConfig::default_network_icvmd() {
    icvmd::IcvmdConfig c;
    c.pos.K = 3;
    c.pos.alpha = 5.0;
    c.shared_parameters = true;
    // The strongest mode alone feeds the branch; its neighbours stay in the main input.
    c.partition.merge_halfwidths = 0.0;
    return c;
}

tcn::ArchConfig ExperimentConfig::default_experiment_arch() {
    tcn::ArchConfig a;
    a.frame = 4;
    a.channels = 8;
    a.branch_channels = 4;
    a.tcn_blocks = 3;
    a.segment_length = 100;
    a.logit_dim = 8;
    return a;
}

tcn::TrainConfig ExperimentConfig::default_finetune() {
    tcn::TrainConfig t;
    t.lr = 3e-3;
    t.batch_size = 16;
    t.epochs = 100;
    t.seed = 11;
    return t;
}

tcn::TrainConfig ExperimentConfig::default_pretrain() {
    tcn::TrainConfig t;
    t.lr = 3e-3;
    t.batch_size = 32;
    t.epochs = 40;
    t.seed = 13;
    return t;
}

void ExperimentConfig::validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ParameterError("test_fraction must lie in (0, 1)");
    feature_icvmd.validate();
    network_icvmd.validate();
    arch.validate();
    train.validate();
    pretrain.validate();
    if (retained_modes == 0) throw ParameterError("retained_modes must be >= 1");
    if (aux_emitters < 2) throw ParameterError("aux_emitters must be >= 2");
    if (aux_signals_per_emitter == 0) throw ParameterError("aux_signals_per_emitter must be >= 1");
}

nlohmann::json to_json(const ExperimentConfig& c) {
    return {{"test_fraction", c.test_fraction},
            {"seed", c.seed},
            {"feature_icvmd", config::to_json(c.feature_icvmd)},
            {"network_icvmd", config::to_json(c.network_icvmd)},
            {"retained_modes", c.retained_modes},
            {"snr_matched", c.snr_matched},
            {"arch", config::to_json(c.arch)},
            {"train", config::to_json(c.train)},
            {"pretrain", config::to_json(c.pretrain)},
            {"aux_emitters", c.aux_emitters},
            {"aux_signals_per_emitter", c.aux_signals_per_emitter}};
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParameterError("experiment config: expected a JSON object");
    ExperimentConfig c;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "schema_version") continue;
            if (key == "test_fraction") c.test_fraction = value.get<double>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "feature_icvmd") c.feature_icvmd = config::icvmd_from_json(value);
            else if (key == "network_icvmd") c.network_icvmd = config::icvmd_from_json(value);
            else if (key == "snr_matched") c.snr_matched = value.get<bool>();
            else if (key == "retained_modes") c.retained_modes = value.get<std::size_t>();
            else if (key == "arch") c.arch = config::arch_from_json(value);
            else if (key == "train") c.train = config::train_from_json(value);
            else if (key == "pretrain") c.pretrain = config::train_from_json(value);
            else if (key == "aux_emitters") c.aux_emitters = value.get<std::size_t>();
            else if (key == "aux_signals_per_emitter") c.aux_signals_per_emitter = value.get<std::size_t>();
            else throw ParameterError("experiment config: unknown field '" + key + "'");
        } catch (const nlohmann::json::exception&) {
            throw ParameterError("experiment config: field '" + key + "' has the wrong type");
        }
    }
    c.validate();
    return c;
}

std::vector<tcn::Example> make_examples(const std::vector<LabeledSignal>& signals,
                                        const std::vector<std::size_t>& indices, InputKind kind,
                                        const icvmd::IcvmdConfig& icvmd, std::size_t segment_length) {
    std::vector<tcn::Example> out(indices.size());
    parallel_for(indices.size(), [&](std::size_t i) {
        const auto& s = signals[indices[i]];
        const auto x = cut_to_segments(s.signal, segment_length);
        tcn::Example ex;
        ex.label = s.meta.label;
        if (kind == InputKind::Raw) {
            ex.main = x.vec();
            ex.branch = x.vec();
        } else {
            const auto r = icvmd::icvmd_decompose(x, icvmd);
            icvmd::Selection feature, signal;
            feature.feature = true;
            signal.signal = true;
            ex.main = icvmd::reconstruct(r, feature).vec();
            ex.branch = icvmd::reconstruct(r, signal).vec();
        }
        out[i] = std::move(ex);
    });
    return out;
}

tcn::NetParams pretrain_auxiliary(const DatasetSpec& target_spec, const ExperimentConfig& cfg) {
    DatasetSpec aux = target_spec;
    aux.emitters = auxiliary_emitters(derive_seed(target_spec.seed, {0xA0}), cfg.aux_emitters);
    aux.signals_per_emitter = cfg.aux_signals_per_emitter;
    aux.seed = derive_seed(target_spec.seed, {0xA1});
    const auto signals = synthesize(aux);
    std::vector<std::size_t> all(signals.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto examples = make_examples(signals, all, InputKind::Decomposed, cfg.network_icvmd, cfg.arch.segment_length);
    auto arch = cfg.arch;
    arch.n_classes = cfg.aux_emitters;
    const auto init = tcn::init_params(arch, derive_seed(cfg.seed, {0xA2}), true);
    return tcn::train(examples, cfg.pretrain, init).params;
}

std::vector<ExperimentReport> run_fewshot(const DatasetSpec& spec, std::span<const double> proportions,
                                          Pipeline pipeline, const ExperimentConfig& cfg) {
    spec.validate();
    cfg.validate();
    if (proportions.empty()) throw ParameterError("run_fewshot: no proportions given");
    for (double p : proportions)
        if (!(p > 0.0 && p <= 1.0)) throw ParameterError("run_fewshot: proportions must lie in (0, 1]");

    const auto n_classes = spec.emitters.size();
    const auto data = synthesize(spec);
    const auto split = split_train_test(data, cfg.test_fraction, cfg.seed);
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    // Per-signal representations are computed once and shared by every proportion.
    std::vector<std::vector<double>> features;
    std::vector<tcn::Example> examples;
    if (pipeline == Pipeline::RawCumulants) {
        features.resize(data.size());
        parallel_for(data.size(), [&](std::size_t i) { features[i] = raw_cumulant_features(data[i].signal).values; });
    } else if (pipeline == Pipeline::IcvmdFeatures) {
        features.resize(data.size());
        parallel_for(data.size(), [&](std::size_t i) {
            features[i] = extract_features(icvmd::icvmd_decompose(data[i].signal, cfg.feature_icvmd), cfg.retained_modes).values;
        });
    } else {
        const auto kind = pipeline == Pipeline::RawCNNProxy ? InputKind::Raw : InputKind::Decomposed;
        examples = make_examples(data, all, kind, cfg.network_icvmd, cfg.arch.segment_length);
    }
    std::optional<tcn::NetParams> pretrained;
    if (pipeline == Pipeline::IcvmdSAT) pretrained = pretrain_auxiliary(spec, cfg);

    std::vector<ExperimentReport> reports;
    for (double proportion : proportions) {
        const auto started = std::chrono::steady_clock::now();
        const auto sub = subsample_per_class(data, split.train, proportion, n_classes,
                                             derive_seed(cfg.seed, {static_cast<std::uint64_t>(std::llround(proportion * 1e6))}));
        if (!sub.empty_classes.empty()) {
            reports.push_back(unsupported_report(std::string(to_string(pipeline)), proportion,
                                                 "a class has no training sample at this proportion"));
            continue;
        }
        std::vector<Prediction> predictions;
        if (!uses_network(pipeline)) {
            // Pooled fitting is the single-group case of SNR-matched fitting.
            auto group_of = [&](std::size_t i) { return cfg.snr_matched ? data[i].meta.snr_db : 0.0; };
            std::map<double, std::pair<std::vector<std::vector<double>>, std::vector<int>>> groups;
            for (auto i : sub.indices) {
                auto& [X, y] = groups[group_of(i)];
                X.push_back(features[i]);
                y.push_back(data[i].meta.label);
            }
            std::map<double, NearestCentroid> models;
            for (const auto& [g, xy] : groups) {
                std::set<int> seen(xy.second.begin(), xy.second.end());
                if (seen.size() == n_classes) models.emplace(g, fit_nearest_centroid(xy.first, xy.second, n_classes));
            }
            bool complete = true;
            for (auto i : split.test) complete = complete && models.count(group_of(i)) > 0;
            if (!complete) {
                reports.push_back(unsupported_report(std::string(to_string(pipeline)), proportion,
                                                     "an SNR point has a class without training samples"));
                continue;
            }
            for (auto i : split.test)
                predictions.push_back({data[i].meta.label, classify(models.at(group_of(i)), features[i]), data[i].meta.snr_db});
        } else {
            std::vector<tcn::Example> train_set, test_set;
            std::vector<double> test_snr;
            for (auto i : sub.indices) train_set.push_back(examples[i]);
            for (auto i : split.test) {
                test_set.push_back(examples[i]);
                test_snr.push_back(data[i].meta.snr_db);
            }
            auto arch = cfg.arch;
            arch.n_classes = n_classes;
            tcn::NetParams model;
            if (pipeline == Pipeline::IcvmdSAT) {
                model = tcn::sat_transfer(*pretrained, train_set, n_classes, cfg.train);
            } else {
                const bool with_branch = pipeline == Pipeline::IcvmdScratch;
                model = tcn::train(train_set, cfg.train, tcn::init_params(arch, derive_seed(cfg.seed, {0xB0}), with_branch)).params;
            }
            predictions = predict_all(test_set, test_snr, model);
        }
        auto report = evaluate(predictions, n_classes);
        report.pipeline = std::string(to_string(pipeline));
        report.proportion = proportion;
        report.config = {{"spec", config::to_json(spec)}, {"experiment", to_json(cfg)}};
        report.seeds = {spec.seed, cfg.seed};
        report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace rfsei::harness
