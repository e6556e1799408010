#pragma once

#include <json.hpp>

#include "rfsei/dataset.hpp"
#include "rfsei/icvmd.hpp"
#include "rfsei/train.hpp"
#include "rfsei/vmd.hpp"

namespace rfsei::config {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Top-level documents must carry a matching `schema_version`.
void check_schema(const json& j, const std::string& what);

// Every reader starts from the struct defaults, so omitted keys keep their
// default values. Unknown keys raise ParameterError.
json to_json(const vmd::VmdConfig& c);
vmd::VmdConfig vmd_from_json(const json& j);
json to_json(const icvmd::PartitionPolicy& p);
icvmd::PartitionPolicy partition_from_json(const json& j);
json to_json(const icvmd::IcvmdConfig& c);
icvmd::IcvmdConfig icvmd_from_json(const json& j);
json to_json(const tcn::ArchConfig& a);
tcn::ArchConfig arch_from_json(const json& j);
json to_json(const tcn::TrainConfig& c);
tcn::TrainConfig train_from_json(const json& j);
json to_json(const synth::EmitterProfile& e);
synth::EmitterProfile emitter_from_json(const json& j);
json to_json(const harness::DatasetSpec& s);
harness::DatasetSpec dataset_spec_from_json(const json& j);

}  // namespace rfsei::config
