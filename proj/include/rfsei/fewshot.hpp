#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rfsei/dataset.hpp"
#include "rfsei/features.hpp"
#include "rfsei/report.hpp"
#include "rfsei/train.hpp"

namespace rfsei::harness {

enum class Pipeline {
    RawCumulants,   // nearest centroid on raw-signal cumulants
    RawCNNProxy,    // TCN on raw I/Q, no decomposition, no attention branch
    IcvmdFeatures,  // nearest centroid on decomposition features
    IcvmdSAT,       // TCN on decomposition parts, branch pretrained on auxiliary emitters and frozen
    IcvmdScratch,   // same network as IcvmdSAT trained from a random start
};

std::string_view to_string(Pipeline p);
std::optional<Pipeline> pipeline_from_string(std::string_view name);
bool uses_network(Pipeline p);

/// What a network sees: the raw signal, or FeaturePart (main) and SignalPart (branch)
/// reconstructions of the decomposition.
enum class InputKind { Raw, Decomposed };

struct ExperimentConfig {
    double test_fraction = 0.3;
    std::uint64_t seed = 7;  // split, subsample and network initialization
    // The feature path wants wide modes that together keep most of the signal; the
    // network path wants a narrow SignalPart to feed the attention branch.
    icvmd::IcvmdConfig feature_icvmd = default_feature_icvmd();
    icvmd::IcvmdConfig network_icvmd = default_network_icvmd();
    std::size_t retained_modes = 2;
    bool snr_matched = true;  // nearest centroid: one classifier per SNR, fitted on that SNR only
    tcn::ArchConfig arch = default_experiment_arch();
    tcn::TrainConfig train = default_finetune();
    tcn::TrainConfig pretrain = default_pretrain();
    std::size_t aux_emitters = 5;
    std::size_t aux_signals_per_emitter = 60;

    static icvmd::IcvmdConfig default_feature_icvmd();
    static icvmd::IcvmdConfig default_network_icvmd();
    static tcn::ArchConfig default_experiment_arch();
    static tcn::TrainConfig default_finetune();
    static tcn::TrainConfig default_pretrain();
    void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Nested object without schema_version; missing keys keep their defaults.
ExperimentConfig experiment_from_json(const nlohmann::json& j);

/// Network inputs for `signals[indices]`. Decomposed inputs run the decomposition;
/// lengths are cut to a whole number of segments.
std::vector<tcn::Example> make_examples(const std::vector<LabeledSignal>& signals,
                                        const std::vector<std::size_t>& indices, InputKind kind,
                                        const icvmd::IcvmdConfig& icvmd, std::size_t segment_length);

/// Trains the auxiliary-emitter model whose branch the transfer pipeline reuses.
tcn::NetParams pretrain_auxiliary(const DatasetSpec& target_spec, const ExperimentConfig& cfg);

/// One report per proportion. Proportions that leave a class without training
/// samples yield an unsupported report.
std::vector<ExperimentReport> run_fewshot(const DatasetSpec& spec, std::span<const double> proportions,
                                          Pipeline pipeline, const ExperimentConfig& cfg);

}  // namespace rfsei::harness
