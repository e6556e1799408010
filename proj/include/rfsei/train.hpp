#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "rfsei/tcn.hpp"

namespace rfsei::tcn {

struct TrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 128;
    std::size_t epochs = 10;
    std::uint64_t seed = 0;
    /// Branch tensors are left untouched (transfer fine-tuning).
    bool freeze_branch = false;

    void validate() const;
};

struct TrainResult {
    NetParams params;
    std::vector<double> loss_history;  // one mean training loss per epoch
};

/// Mini-batch Adam on mean cross-entropy. Batches follow a shuffle schedule
/// fixed by cfg.seed.
TrainResult train(std::span<const Example> dataset, const TrainConfig& cfg, const NetParams& init);

double accuracy(std::span<const Example> dataset, const NetParams& p);

/// Largest relative difference between analytic and central-difference
/// gradients over `n_coords` randomly chosen parameters.
double grad_check(const NetParams& p, std::span<const Example> batch, double h, std::uint64_t seed,
                  std::size_t n_coords = 200);

/// Copies `pretrained`, resizes and re-initializes classifier2 for `n_classes`,
/// then fine-tunes everything except the frozen branch.
NetParams sat_transfer(const NetParams& pretrained, std::span<const Example> target, std::size_t n_classes,
                       const TrainConfig& cfg);

/// Single-file checkpoint: magic, format version, JSON architecture manifest,
/// then every tensor as row-major little-endian float64.
/// `metadata` is stored verbatim in the manifest for callers (input representation etc.).
void save_checkpoint(const std::filesystem::path& path, const NetParams& p, const nlohmann::json& metadata = {});
NetParams load_checkpoint(const std::filesystem::path& path);
nlohmann::json load_checkpoint_metadata(const std::filesystem::path& path);
/// Loads into `target` shapes. Any shape mismatch is rejected except a
/// different class count, in which case classifier2 is re-initialized from `head_seed`.
NetParams load_checkpoint_resized(const std::filesystem::path& path, const ArchConfig& target,
                                  std::uint64_t head_seed);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace rfsei::tcn
