#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfsei/icvmd.hpp"
#include "rfsei/signal.hpp"

namespace rfsei::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Sidecar metadata stored next to every iqf32 file.
struct SignalMeta {
    double sample_rate = 1.0;
    int label = 0;
    std::string modulation;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    std::string emitter_id;

    bool operator==(const SignalMeta&) const = default;
};

json to_json(const SignalMeta& m);
SignalMeta meta_from_json(const json& j);

/// Little-endian float32, interleaved I/Q.
void write_iqf32(const fs::path& path, const ComplexSignal& x);
ComplexSignal read_iqf32(const fs::path& path, double sample_rate = 1.0);

/// `foo.iqf32` -> `foo.json`.
fs::path sidecar_path(const fs::path& signal_path);
void write_sidecar(const fs::path& signal_path, const SignalMeta& meta);
SignalMeta read_sidecar(const fs::path& signal_path);

json read_json(const fs::path& path);
/// Pretty-printed with a trailing newline, so equal documents give equal bytes.
void write_json(const fs::path& path, const json& j);

/// One complex contribution file per mode plus `residual.iqf32` and `manifest.json`.
/// Summing every file reproduces the full reconstruction.
void write_mode_dump(const fs::path& dir, const icvmd::IcvmdResult& r);
ComplexSignal reconstruct_from_dump(const fs::path& dir, const icvmd::Selection& selection);

}  // namespace rfsei::io
