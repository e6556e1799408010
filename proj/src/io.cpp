#include "rfsei/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rfsei/errors.hpp"

namespace rfsei::io {

static_assert(std::endian::native == std::endian::little, "iqf32 I/O assumes a little-endian host");

json to_json(const SignalMeta& m) {
    return {{"sample_rate", m.sample_rate}, {"label", m.label},   {"modulation", m.modulation},
            {"snr_db", m.snr_db},           {"seed", m.seed},     {"emitter_id", m.emitter_id}};
}

SignalMeta meta_from_json(const json& j) {
    try {
        SignalMeta m;
        m.sample_rate = j.at("sample_rate").get<double>();
        m.label = j.at("label").get<int>();
        m.modulation = j.at("modulation").get<std::string>();
        m.snr_db = j.at("snr_db").get<double>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.emitter_id = j.at("emitter_id").get<std::string>();
        return m;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed signal sidecar: ") + e.what());
    }
}

void write_iqf32(const fs::path& path, const ComplexSignal& x) {
    std::vector<float> buffer;
    buffer.reserve(2 * x.size());
    for (const auto& v : x.samples()) {
        buffer.push_back(static_cast<float>(v.real()));
        buffer.push_back(static_cast<float>(v.imag()));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    if (!out) throw IoError("failed writing " + path.string());
}

ComplexSignal read_iqf32(const fs::path& path, double sample_rate) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.empty() || bytes.size() % (2 * sizeof(float)) != 0)
        throw IoError(path.string() + ": size is not a whole number of I/Q float32 pairs");
    std::vector<float> buffer(bytes.size() / sizeof(float));
    std::memcpy(buffer.data(), bytes.data(), bytes.size());
    std::vector<cplx> samples(buffer.size() / 2);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = {buffer[2 * i], buffer[2 * i + 1]};
    try {
        return ComplexSignal(std::move(samples), sample_rate);
    } catch (const ParameterError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

fs::path sidecar_path(const fs::path& signal_path) {
    auto p = signal_path;
    p.replace_extension(".json");
    return p;
}

void write_sidecar(const fs::path& signal_path, const SignalMeta& meta) {
    write_json(sidecar_path(signal_path), to_json(meta));
}

SignalMeta read_sidecar(const fs::path& signal_path) { return meta_from_json(read_json(sidecar_path(signal_path))); }

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

namespace {

std::vector<cplx> mode_contribution(std::span<const double> mode, bool negative_side) {
    auto a = icvmd::analytic_signal(mode);
    if (negative_side)
        for (auto& v : a) v = std::conj(v);
    return a;
}

}  // namespace

void write_mode_dump(const fs::path& dir, const icvmd::IcvmdResult& r) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const auto [fp, fn] = icvmd::energy_fractions(r.pos_modes, r.neg_modes);
    json modes = json::array();
    auto dump_side = [&](const vmd::VmdResult& side, const std::vector<icvmd::Label>& labels,
                         const std::vector<double>& fractions, bool negative) {
        const std::string name = negative ? "neg" : "pos";
        for (std::size_t k = 0; k < side.modes_time.size(); ++k) {
            std::ostringstream file;
            file << name << "_mode" << std::setw(2) << std::setfill('0') << k << ".iqf32";
            write_iqf32(dir / file.str(),
                        ComplexSignal(mode_contribution(side.modes_time[k], negative), r.sample_rate));
            modes.push_back({{"file", file.str()},
                             {"side", name},
                             {"omega", side.mode_set.omegas[k]},
                             {"energy_fraction", fractions[k]},
                             {"label", std::string(icvmd::to_string(labels[k]))}});
        }
    };
    dump_side(r.pos_modes, r.labels.pos, fp, false);
    dump_side(r.neg_modes, r.labels.neg, fn, true);
    icvmd::Selection residual_only;
    residual_only.residual = true;
    write_iqf32(dir / "residual.iqf32", icvmd::reconstruct(r, residual_only));
    write_json(dir / "manifest.json", {{"schema_version", 1},
                                       {"length", r.length()},
                                       {"sample_rate", r.sample_rate},
                                       {"modes", modes},
                                       {"residual", "residual.iqf32"}});
}

ComplexSignal reconstruct_from_dump(const fs::path& dir, const icvmd::Selection& selection) {
    const json manifest = read_json(dir / "manifest.json");
    std::size_t length = 0;
    double rate = 1.0;
    std::vector<std::pair<std::string, icvmd::Label>> modes;
    try {
        length = manifest.at("length").get<std::size_t>();
        rate = manifest.at("sample_rate").get<double>();
        for (const auto& m : manifest.at("modes")) {
            const auto label = icvmd::label_from_string(m.at("label").get<std::string>());
            if (!label) throw IoError("unknown mode label in " + dir.string());
            modes.emplace_back(m.at("file").get<std::string>(), *label);
        }
    } catch (const json::exception& e) {
        throw IoError("malformed mode manifest: " + std::string(e.what()));
    }
    std::vector<cplx> out(length, cplx(0.0, 0.0));
    auto add = [&](const fs::path& file) {
        const auto x = read_iqf32(file, rate);
        if (x.size() != length) throw IoError(file.string() + ": length differs from manifest");
        for (std::size_t i = 0; i < length; ++i) out[i] += x[i];
    };
    for (const auto& [file, label] : modes)
        if (selection.contains(label)) add(dir / file);
    if (selection.residual) add(dir / "residual.iqf32");
    return ComplexSignal(std::move(out), rate);
}

}  // namespace rfsei::io
