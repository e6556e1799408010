// Command-line front end: dataset generation, decomposition, training and experiments.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "rfsei/config.hpp"
#include "rfsei/errors.hpp"
#include "rfsei/fewshot.hpp"
#include "rfsei/io.hpp"

namespace fs = std::filesystem;
using namespace rfsei;
using nlohmann::json;

namespace {

constexpr int kExitParameter = 2;
constexpr int kExitIo = 3;

json read_document(const fs::path& path, const std::string& what) {
    json j = io::read_json(path);
    config::check_schema(j, what);
    return j;
}

ComplexSignal read_signal(const fs::path& path) {
    double rate = 1.0;
    if (fs::exists(io::sidecar_path(path))) rate = io::read_sidecar(path).sample_rate;
    return io::read_iqf32(path, rate);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<double> parse_proportions(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ParameterError("bad proportion '" + item + "'");
        }
    }
    if (out.empty()) throw ParameterError("no proportions given");
    return out;
}

// Settings for `train`: what the network sees, its shape and the optimizer.
struct TrainDocument {
    harness::InputKind input = harness::InputKind::Decomposed;
    icvmd::IcvmdConfig icvmd = harness::ExperimentConfig::default_network_icvmd();
    tcn::ArchConfig arch = harness::ExperimentConfig::default_experiment_arch();
    tcn::TrainConfig train = harness::ExperimentConfig::default_finetune();
    std::uint64_t init_seed = 0;
};

TrainDocument train_document(const json& j) {
    TrainDocument d;
    for (const auto& [key, value] : j.items()) {
        if (key == "schema_version") continue;
        if (key == "input") {
            const auto text = value.get<std::string>();
            if (text == "raw") d.input = harness::InputKind::Raw;
            else if (text == "decomposed") d.input = harness::InputKind::Decomposed;
            else throw ParameterError("train config: input must be 'raw' or 'decomposed'");
        } else if (key == "icvmd") d.icvmd = config::icvmd_from_json(value);
        else if (key == "arch") d.arch = config::arch_from_json(value);
        else if (key == "train") d.train = config::train_from_json(value);
        else if (key == "init_seed") d.init_seed = value.get<std::uint64_t>();
        else throw ParameterError("train config: unknown field '" + key + "'");
    }
    return d;
}

std::vector<std::size_t> every_index(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

std::size_t class_count(const std::vector<harness::LabeledSignal>& data) {
    int top = -1;
    for (const auto& s : data) top = std::max(top, s.meta.label);
    return static_cast<std::size_t>(top + 1);
}

int run_gen(const fs::path& spec_path, const fs::path& out) {
    const auto spec = config::dataset_spec_from_json(read_document(spec_path, spec_path.string()));
    const auto manifest = harness::generate_dataset(spec, out);
    std::cout << "wrote " << manifest.at("signals").size() << " signals to " << out.string() << "\n";
    return 0;
}

int run_decompose(const fs::path& in, const fs::path& cfg_path, const fs::path& out) {
    icvmd::IcvmdConfig cfg;
    if (!cfg_path.empty()) cfg = config::icvmd_from_json(read_document(cfg_path, cfg_path.string()));
    const auto r = icvmd::icvmd_decompose(read_signal(in), cfg);
    io::write_mode_dump(out, r);
    std::cout << "positive side: " << r.pos_modes.mode_count() << " modes, "
              << (r.pos_modes.mode_set.converged ? "converged" : "not converged") << "\n"
              << "negative side: " << r.neg_modes.mode_count() << " modes, "
              << (r.neg_modes.mode_set.converged ? "converged" : "not converged") << "\n";
    return 0;
}

int run_reconstruct(const fs::path& in, const std::string& select, fs::path out) {
    const auto selection = icvmd::Selection::parse(select);
    if (out.empty()) out = in / "reconstruction.iqf32";
    io::write_iqf32(out, io::reconstruct_from_dump(in, selection));
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int run_probe(const fs::path& in) {
    const auto s = icvmd::probe_parameters(read_signal(in));
    std::cout << json{{"k_low", s.k_low}, {"k_high", s.k_high}, {"alpha", s.alpha},
                      {"peaks", s.peaks}, {"mean_bandwidth", s.mean_bandwidth}}.dump(2)
              << "\n";
    return 0;
}

int run_train(const fs::path& data_dir, const fs::path& cfg_path, const fs::path& ckpt) {
    TrainDocument doc;
    if (!cfg_path.empty()) doc = train_document(read_document(cfg_path, cfg_path.string()));
    const auto data = harness::load_dataset(data_dir);
    if (data.empty()) throw ParameterError("dataset is empty");
    doc.arch.n_classes = class_count(data);
    const auto examples =
        harness::make_examples(data, every_index(data.size()), doc.input, doc.icvmd, doc.arch.segment_length);
    const bool with_branch = doc.input == harness::InputKind::Decomposed;
    const auto result = tcn::train(examples, doc.train, tcn::init_params(doc.arch, doc.init_seed, with_branch));
    const json metadata = {{"input", doc.input == harness::InputKind::Raw ? "raw" : "decomposed"},
                           {"icvmd", config::to_json(doc.icvmd)},
                           {"train", config::to_json(doc.train)},
                           {"loss_history", result.loss_history}};
    tcn::save_checkpoint(ckpt, result.params, metadata);
    std::cout << "final training loss " << result.loss_history.back() << ", training accuracy "
              << tcn::accuracy(examples, result.params) << "\n";
    return 0;
}

int run_eval(const fs::path& ckpt, const fs::path& data_dir, const fs::path& csv) {
    const auto params = tcn::load_checkpoint(ckpt);
    const auto meta = tcn::load_checkpoint_metadata(ckpt);
    const auto input = meta.value("input", std::string("decomposed")) == "raw" ? harness::InputKind::Raw
                                                                               : harness::InputKind::Decomposed;
    const auto icfg = meta.contains("icvmd") ? config::icvmd_from_json(meta.at("icvmd"))
                                             : harness::ExperimentConfig::default_network_icvmd();
    const auto data = harness::load_dataset(data_dir);
    if (data.empty()) throw ParameterError("dataset is empty");
    const auto examples = harness::make_examples(data, every_index(data.size()), input, icfg, params.arch.segment_length);
    std::vector<harness::Prediction> predictions;
    for (std::size_t i = 0; i < examples.size(); ++i)
        predictions.push_back({examples[i].label, tcn::predict(examples[i], params), data[i].meta.snr_db});
    auto report = harness::evaluate(predictions, params.arch.n_classes);
    report.pipeline = "checkpoint";
    const std::vector<harness::ExperimentReport> reports = {report};
    const auto text = harness::report_csv(reports);
    if (!csv.empty()) write_text(csv, text);
    std::cout << text << "overall accuracy " << report.accuracy << "\n";
    return 0;
}

int run_fewshot(const fs::path& spec_path, const std::string& pipeline_name, const std::string& proportions,
                const fs::path& cfg_path, const fs::path& csv, const fs::path& report_path) {
    const auto spec = config::dataset_spec_from_json(read_document(spec_path, spec_path.string()));
    const auto pipeline = harness::pipeline_from_string(pipeline_name);
    if (!pipeline) throw ParameterError("unknown pipeline '" + pipeline_name + "'");
    harness::ExperimentConfig cfg;
    if (!cfg_path.empty()) cfg = harness::experiment_from_json(read_document(cfg_path, cfg_path.string()));
    const auto props = parse_proportions(proportions);
    const auto reports = harness::run_fewshot(spec, props, *pipeline, cfg);
    const auto text = harness::report_csv(reports);
    if (!csv.empty()) write_text(csv, text);
    if (!report_path.empty()) {
        json all = json::array();
        for (const auto& r : reports) all.push_back(harness::report_json(r));
        io::write_json(report_path, {{"schema_version", config::kSchemaVersion}, {"reports", all}});
    }
    std::cout << text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RF emitter identification toolkit: ICVMD decomposition, TCN classifiers, experiments"};
    app.require_subcommand(1);

    fs::path spec_path, out, in, cfg_path, data_dir, ckpt, csv, report_path;
    std::string select = "all", pipeline = "icvmd-features", proportions = "0.3,0.1,0.03";

    auto* gen = app.add_subcommand("gen", "Generate a simulated emitter dataset");
    gen->add_option("--spec", spec_path, "Dataset spec JSON")->required();
    gen->add_option("--out", out, "Output directory")->required();

    auto* decompose = app.add_subcommand("decompose", "Decompose one iqf32 signal into labeled modes");
    decompose->add_option("--in", in, "Input iqf32 file")->required();
    decompose->add_option("--config", cfg_path, "ICVMD config JSON (defaults when omitted)");
    decompose->add_option("--out", out, "Mode dump directory")->required();

    auto* reconstruct = app.add_subcommand("reconstruct", "Rebuild a signal from selected modes of a dump");
    reconstruct->add_option("--in", in, "Mode dump directory")->required();
    reconstruct->add_option("--select", select, "Comma list of signal, feature, dc, special, residual, all");
    reconstruct->add_option("--out", out, "Output iqf32 file (default <in>/reconstruction.iqf32)");

    auto* probe = app.add_subcommand("probe", "Suggest K and alpha from a signal's spectrum");
    probe->add_option("--in", in, "Input iqf32 file")->required();

    auto* train = app.add_subcommand("train", "Train a TCN classifier on a generated dataset");
    train->add_option("--data", data_dir, "Dataset directory")->required();
    train->add_option("--config", cfg_path, "Training config JSON (defaults when omitted)");
    train->add_option("--ckpt", ckpt, "Checkpoint output file")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    eval->add_option("--ckpt", ckpt, "Checkpoint file")->required();
    eval->add_option("--data", data_dir, "Dataset directory")->required();
    eval->add_option("--csv", csv, "Write the CSV report here");

    auto* fewshot = app.add_subcommand("fewshot", "Run the few-shot experiment for one pipeline");
    fewshot->add_option("--spec", spec_path, "Dataset spec JSON")->required();
    fewshot->add_option("--pipeline", pipeline,
                        "raw-cumulants, raw-cnn-proxy, icvmd-features, icvmd-sat or icvmd-scratch");
    fewshot->add_option("--proportions", proportions, "Comma list of training proportions in (0, 1]");
    fewshot->add_option("--config", cfg_path, "Experiment config JSON (defaults when omitted)");
    fewshot->add_option("--csv", csv, "Write the CSV report here");
    fewshot->add_option("--report", report_path, "Write the full JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitParameter;
    }

    try {
        if (*gen) return run_gen(spec_path, out);
        if (*decompose) return run_decompose(in, cfg_path, out);
        if (*reconstruct) return run_reconstruct(in, select, out);
        if (*probe) return run_probe(in);
        if (*train) return run_train(data_dir, cfg_path, ckpt);
        if (*eval) return run_eval(ckpt, data_dir, csv);
        if (*fewshot) return run_fewshot(spec_path, pipeline, proportions, cfg_path, csv, report_path);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return kExitParameter;
    } catch (const DegenerateInputError& e) {
        std::cerr << "degenerate input: " << e.what() << "\n";
        return kExitParameter;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return kExitParameter;
    }
    return kExitParameter;
}
