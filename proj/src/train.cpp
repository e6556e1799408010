#include "rfsei/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "rfsei/config.hpp"
#include "rfsei/errors.hpp"
#include "rfsei/parallel.hpp"

namespace rfsei::tcn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void TrainConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ParameterError("TrainConfig: lr must be finite and >= 0");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        throw ParameterError("TrainConfig: beta1 and beta2 must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw ParameterError("TrainConfig: epsilon must be positive");
    if (batch_size == 0) throw ParameterError("TrainConfig: batch_size must be >= 1");
}

TrainResult train(std::span<const Example> dataset, const TrainConfig& cfg, const NetParams& init) {
    cfg.validate();
    validate(init);
    if (dataset.empty()) throw ParameterError("train: empty dataset");
    std::set<int> classes;
    for (const auto& ex : dataset) {
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= init.arch.n_classes)
            throw ParameterError("train: label outside the model's class range");
        classes.insert(ex.label);
    }
    if (classes.size() < 2) throw ParameterError("train: dataset holds a single class");
    if (cfg.freeze_branch && !init.branch) throw ParameterError("train: freeze_branch set on a model without branch");

    TrainResult result{init, {}};
    NetParams& p = result.params;
    auto views = tensors(p);
    std::vector<std::vector<double>> m(views.size()), v(views.size());
    for (std::size_t t = 0; t < views.size(); ++t) {
        m[t].assign(views[t].data.size(), 0.0);
        v[t].assign(views[t].data.size(), 0.0);
    }

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed);
    std::vector<Example> batch;
    std::uint64_t step = 0;
    NetParams grads;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const auto stop = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);
            loss_sum += loss_and_gradient(p, batch, &grads) * static_cast<double>(batch.size());

            ++step;
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            auto gviews = tensors(grads);
            for (std::size_t t = 0; t < views.size(); ++t) {
                if (cfg.freeze_branch && is_branch_tensor(views[t].name)) continue;
                auto w = views[t].data;
                const auto g = gviews[t].data;
                for (std::size_t i = 0; i < w.size(); ++i) {
                    m[t][i] = cfg.beta1 * m[t][i] + (1.0 - cfg.beta1) * g[i];
                    v[t][i] = cfg.beta2 * v[t][i] + (1.0 - cfg.beta2) * g[i] * g[i];
                    const double update = cfg.lr * (m[t][i] / c1) / (std::sqrt(v[t][i] / c2) + cfg.epsilon);
                    if (update != 0.0) w[i] -= update;
                }
            }
        }
        result.loss_history.push_back(loss_sum / static_cast<double>(dataset.size()));
    }
    return result;
}

double accuracy(std::span<const Example> dataset, const NetParams& p) {
    if (dataset.empty()) throw ParameterError("accuracy: empty dataset");
    std::vector<int> hit(dataset.size(), 0);
    parallel_for(dataset.size(), [&](std::size_t i) { hit[i] = predict(dataset[i], p) == dataset[i].label; });
    return static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) / static_cast<double>(dataset.size());
}

double grad_check(const NetParams& p, std::span<const Example> batch, double h, std::uint64_t seed,
                  std::size_t n_coords) {
    if (!(h > 0.0)) throw ParameterError("grad_check: step must be positive");
    NetParams analytic;
    loss_and_gradient(p, batch, &analytic);
    NetParams probe = p;
    auto pv = tensors(probe);
    auto av = tensors(analytic);

    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t t = 0; t < pv.size(); ++t)
        for (std::size_t i = 0; i < pv[t].data.size(); ++i) coords.emplace_back(t, i);
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min(coords.size(), n_coords));

    double worst = 0.0;
    for (const auto& [t, i] : coords) {
        double& w = pv[t].data[i];
        const double saved = w;
        w = saved + h;
        const double up = loss_and_gradient(probe, batch, nullptr);
        w = saved - h;
        const double down = loss_and_gradient(probe, batch, nullptr);
        w = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double exact = av[t].data[i];
        // Gradients below the floor are compared on an absolute scale.
        const double scale = std::max({std::abs(numeric), std::abs(exact), 1e-4});
        worst = std::max(worst, std::abs(numeric - exact) / scale);
    }
    return worst;
}

NetParams sat_transfer(const NetParams& pretrained, std::span<const Example> target, std::size_t n_classes,
                       const TrainConfig& cfg) {
    if (!pretrained.branch) throw ParameterError("sat_transfer: pretrained model has no attention branch");
    if (n_classes < 2) throw ParameterError("sat_transfer: target needs at least 2 classes");
    NetParams start = pretrained;
    start.arch.n_classes = n_classes;
    start.classifier2 = Linear::zeros(start.arch.logit_dim, n_classes);
    init_linear(start.classifier2, cfg.seed);
    TrainConfig frozen = cfg;
    frozen.freeze_branch = true;
    if (cfg.epochs == 0) return start;
    return train(target, frozen, start).params;
}

namespace {

constexpr char kMagic[8] = {'R', 'F', 'S', 'E', 'I', 'C', 'K', 'P'};

struct StoredTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

struct StoredCheckpoint {
    nlohmann::json metadata;
    ArchConfig arch;
    bool has_branch = false;
    std::vector<StoredTensor> tensors;
};

StoredCheckpoint read_stored(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[8];
    std::uint32_t version = 0;
    std::uint64_t manifest_size = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&manifest_size), sizeof manifest_size);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw IoError("not a checkpoint file: " + path.string());
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    if (manifest_size > (1u << 26)) throw IoError("corrupt checkpoint manifest size");
    std::string text(manifest_size, '\0');
    in.read(text.data(), static_cast<std::streamsize>(manifest_size));
    if (!in) throw IoError("truncated checkpoint manifest");

    StoredCheckpoint out;
    try {
        const auto manifest = nlohmann::json::parse(text);
        out.arch = config::arch_from_json(manifest.at("architecture"));
        out.has_branch = manifest.at("has_branch").get<bool>();
        out.metadata = manifest.value("metadata", nlohmann::json::object());
        for (const auto& t : manifest.at("tensors")) {
            StoredTensor st{t.at("name").get<std::string>(), t.at("shape").get<std::vector<std::size_t>>(), {}};
            std::size_t count = 1;
            for (auto d : st.shape) count *= d;
            st.data.resize(count);
            out.tensors.push_back(std::move(st));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed checkpoint manifest: ") + e.what());
    } catch (const ParameterError& e) {
        throw IoError(std::string("invalid checkpoint architecture: ") + e.what());
    }
    for (auto& t : out.tensors) {
        in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in) throw IoError("truncated checkpoint tensor data");
    }
    return out;
}

// Copies stored arrays into `p`; `skip_head` leaves classifier2 untouched.
void fill_params(const StoredCheckpoint& stored, NetParams& p, bool skip_head) {
    auto views = tensors(p);
    if (views.size() != stored.tensors.size()) throw ParameterError("checkpoint layer layout mismatch");
    for (std::size_t t = 0; t < views.size(); ++t) {
        const auto& st = stored.tensors[t];
        if (st.name != views[t].name) throw ParameterError("checkpoint layer name mismatch: " + st.name);
        if (skip_head && st.name.starts_with("classifier2.")) continue;
        if (st.shape != views[t].shape) throw ParameterError("checkpoint shape mismatch in " + st.name);
        std::copy(st.data.begin(), st.data.end(), views[t].data.begin());
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NetParams& p, const nlohmann::json& metadata) {
    validate(p);
    NetParams copy = p;
    auto views = tensors(copy);
    nlohmann::json manifest;
    manifest["schema_version"] = kCheckpointVersion;
    manifest["architecture"] = config::to_json(p.arch);
    manifest["has_branch"] = p.branch.has_value();
    manifest["metadata"] = metadata.is_null() ? nlohmann::json::object() : metadata;
    manifest["tensors"] = nlohmann::json::array();
    for (const auto& t : views) manifest["tensors"].push_back({{"name", t.name}, {"shape", t.shape}});
    const std::string text = manifest.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t size = text.size();
    out.write(kMagic, 8);
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&size), sizeof size);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : views)
        out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size_bytes()));
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

NetParams load_checkpoint(const std::filesystem::path& path) {
    const auto stored = read_stored(path);
    NetParams p = make_zero_params(stored.arch, stored.has_branch);
    fill_params(stored, p, false);
    validate(p);
    return p;
}

nlohmann::json load_checkpoint_metadata(const std::filesystem::path& path) { return read_stored(path).metadata; }

NetParams load_checkpoint_resized(const std::filesystem::path& path, const ArchConfig& target,
                                  std::uint64_t head_seed) {
    const auto stored = read_stored(path);
    ArchConfig stored_same_head = stored.arch;
    stored_same_head.n_classes = target.n_classes;
    if (!(stored_same_head == target))
        throw ParameterError("checkpoint architecture differs from the target beyond the class count");
    NetParams p = make_zero_params(target, stored.has_branch);
    const bool resize = stored.arch.n_classes != target.n_classes;
    fill_params(stored, p, resize);
    if (resize) init_linear(p.classifier2, head_seed);
    validate(p);
    return p;
}

}  // namespace rfsei::tcn
