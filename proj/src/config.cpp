#include "rfsei/config.hpp"

#include <set>

#include "rfsei/errors.hpp"

namespace rfsei::config {
namespace {

// Reads optional keys into existing fields and rejects keys nobody asked for.
class Fields {
public:
    Fields(const json& j, std::string context) : j_(j), context_(std::move(context)) {
        if (!j_.is_object()) throw ParameterError(context_ + ": expected a JSON object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ParameterError(context_ + ": field '" + key + "' has the wrong type");
        }
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    const json& at(const char* key) const { return j_.at(key); }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (key != "schema_version" && !seen_.contains(key))
                throw ParameterError(context_ + ": unknown field '" + key + "'");
    }

private:
    const json& j_;
    std::string context_;
    std::set<std::string> seen_;
};

template <class Enum, std::size_t N>
Enum enum_from(const std::string& text, const std::array<std::pair<Enum, const char*>, N>& table,
               const std::string& what) {
    for (const auto& [value, name] : table)
        if (text == name) return value;
    throw ParameterError("unknown " + what + " '" + text + "'");
}

template <class Enum, std::size_t N>
std::string enum_name(Enum e, const std::array<std::pair<Enum, const char*>, N>& table) {
    for (const auto& [value, name] : table)
        if (value == e) return name;
    return "?";
}

constexpr std::array<std::pair<vmd::InitKind, const char*>, 3> kInit = {{
    {vmd::InitKind::UniformSpread, "uniform"}, {vmd::InitKind::AllZero, "zero"}, {vmd::InitKind::RandomSeeded, "random"}}};
constexpr std::array<std::pair<icvmd::DcPolicy, const char*>, 3> kDcPolicy = {{
    {icvmd::DcPolicy::MergeIntoSignal, "merge"}, {icvmd::DcPolicy::Separate, "separate"}, {icvmd::DcPolicy::Drop, "drop"}}};
constexpr std::array<std::pair<icvmd::DcConvention, const char*>, 2> kDcConvention = {{
    {icvmd::DcConvention::DcToPositive, "positive"}, {icvmd::DcConvention::DcSplit, "split"}}};

}  // namespace

void check_schema(const json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("schema_version"))
        throw ParameterError(what + ": missing schema_version");
    if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kSchemaVersion)
        throw ParameterError(what + ": unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
}

json to_json(const vmd::VmdConfig& c) {
    json j = {{"K", c.K},
              {"alpha", c.alpha},
              {"exact_reconstruction", c.exact_reconstruction},
              {"tol", c.tol},
              {"max_iter", c.max_iter},
              {"init", enum_name(c.init, kInit)},
              {"init_seed", c.init_seed},
              {"dc_lock", c.dc_lock}};
    if (c.tau) j["tau"] = *c.tau;
    return j;
}

vmd::VmdConfig vmd_from_json(const json& j) {
    vmd::VmdConfig c;
    Fields f(j, "vmd config");
    f.get("K", c.K);
    f.get("alpha", c.alpha);
    if (f.has("tau")) {
        double tau = 0.0;
        f.get("tau", tau);
        c.tau = tau;
    }
    f.get("exact_reconstruction", c.exact_reconstruction);
    f.get("tol", c.tol);
    f.get("max_iter", c.max_iter);
    std::string init = enum_name(c.init, kInit);
    f.get("init", init);
    c.init = enum_from(init, kInit, "init kind");
    f.get("init_seed", c.init_seed);
    f.get("dc_lock", c.dc_lock);
    f.finish();
    c.validate();
    return c;
}

json to_json(const icvmd::PartitionPolicy& p) {
    return {{"n_signal_modes", p.n_signal_modes},
            {"dc_policy", enum_name(p.dc_policy, kDcPolicy)},
            {"special_lo", p.special_lo},
            {"special_hi", p.special_hi},
            {"special_energy_min", p.special_energy_min},
            {"merge_halfwidths", p.merge_halfwidths}};
}

icvmd::PartitionPolicy partition_from_json(const json& j) {
    icvmd::PartitionPolicy p;
    Fields f(j, "partition policy");
    f.get("n_signal_modes", p.n_signal_modes);
    std::string dc = enum_name(p.dc_policy, kDcPolicy);
    f.get("dc_policy", dc);
    p.dc_policy = enum_from(dc, kDcPolicy, "dc policy");
    f.get("special_lo", p.special_lo);
    f.get("special_hi", p.special_hi);
    f.get("special_energy_min", p.special_energy_min);
    f.get("merge_halfwidths", p.merge_halfwidths);
    f.finish();
    p.validate();
    return p;
}

json to_json(const icvmd::IcvmdConfig& c) {
    json j = {{"pos", to_json(c.pos)},
              {"partition", to_json(c.partition)},
              {"dc_convention", enum_name(c.dc_convention, kDcConvention)},
              {"shared_parameters", c.shared_parameters}};
    if (!c.shared_parameters) j["neg"] = to_json(c.neg);
    return j;
}

icvmd::IcvmdConfig icvmd_from_json(const json& j) {
    icvmd::IcvmdConfig c;
    Fields f(j, "icvmd config");
    if (f.has("pos")) c.pos = vmd_from_json(f.at("pos"));
    if (f.has("neg")) c.neg = vmd_from_json(f.at("neg"));
    if (f.has("partition")) c.partition = partition_from_json(f.at("partition"));
    std::string dc = enum_name(c.dc_convention, kDcConvention);
    f.get("dc_convention", dc);
    c.dc_convention = enum_from(dc, kDcConvention, "dc convention");
    f.get("shared_parameters", c.shared_parameters);
    f.finish();
    c.validate();
    return c;
}

json to_json(const tcn::ArchConfig& a) {
    return {{"frame", a.frame},
            {"channels", a.channels},
            {"branch_channels", a.branch_channels},
            {"encoder_width", a.encoder_width},
            {"tcn_width", a.tcn_width},
            {"tcn_blocks", a.tcn_blocks},
            {"dilation_base", a.dilation_base},
            {"segment_length", a.segment_length},
            {"logit_dim", a.logit_dim},
            {"n_classes", a.n_classes},
            {"activation", std::string(tcn::to_string(a.activation))},
            {"hard_decision", a.hard_decision}};
}

tcn::ArchConfig arch_from_json(const json& j) {
    tcn::ArchConfig a;
    Fields f(j, "architecture");
    f.get("frame", a.frame);
    f.get("channels", a.channels);
    f.get("branch_channels", a.branch_channels);
    f.get("encoder_width", a.encoder_width);
    f.get("tcn_width", a.tcn_width);
    f.get("tcn_blocks", a.tcn_blocks);
    f.get("dilation_base", a.dilation_base);
    f.get("segment_length", a.segment_length);
    f.get("logit_dim", a.logit_dim);
    f.get("n_classes", a.n_classes);
    std::string act(tcn::to_string(a.activation));
    f.get("activation", act);
    a.activation = tcn::activation_from_string(act);
    f.get("hard_decision", a.hard_decision);
    f.finish();
    a.validate();
    return a;
}

json to_json(const tcn::TrainConfig& c) {
    return {{"lr", c.lr},           {"beta1", c.beta1},   {"beta2", c.beta2},
            {"epsilon", c.epsilon}, {"batch_size", c.batch_size}, {"epochs", c.epochs},
            {"seed", c.seed},       {"freeze_branch", c.freeze_branch}};
}

tcn::TrainConfig train_from_json(const json& j) {
    tcn::TrainConfig c;
    Fields f(j, "train config");
    f.get("lr", c.lr);
    f.get("beta1", c.beta1);
    f.get("beta2", c.beta2);
    f.get("epsilon", c.epsilon);
    f.get("batch_size", c.batch_size);
    f.get("epochs", c.epochs);
    f.get("seed", c.seed);
    f.get("freeze_branch", c.freeze_branch);
    f.finish();
    c.validate();
    return c;
}

json to_json(const synth::EmitterProfile& e) { return {{"name", e.name}, {"b", e.b}, {"c", e.c}}; }

synth::EmitterProfile emitter_from_json(const json& j) {
    synth::EmitterProfile e;
    Fields f(j, "emitter");
    f.get("name", e.name);
    f.get("b", e.b);
    e.c = synth::default_linear_stage();
    f.get("c", e.c);
    f.finish();
    e.validate();
    return e;
}

json to_json(const harness::DatasetSpec& s) {
    json emitters = json::array();
    for (const auto& e : s.emitters) emitters.push_back(to_json(e));
    json mods = json::array();
    for (auto m : s.modulations) mods.push_back(std::string(synth::to_string(m)));
    return {{"emitters", emitters},
            {"modulations", mods},
            {"snr_grid_db", s.snr_grid_db},
            {"n_samples", s.n_samples},
            {"signals_per_emitter", s.signals_per_emitter},
            {"seed", s.seed},
            {"carrier", s.carrier},
            {"samples_per_symbol", s.samples_per_symbol}};
}

harness::DatasetSpec dataset_spec_from_json(const json& j) {
    harness::DatasetSpec s;
    Fields f(j, "dataset spec");
    if (f.has("emitters")) {
        s.emitters.clear();
        for (const auto& e : f.at("emitters")) s.emitters.push_back(emitter_from_json(e));
    }
    if (f.has("modulations")) {
        s.modulations.clear();
        for (const auto& m : f.at("modulations")) {
            if (!m.is_string()) throw ParameterError("dataset spec: modulation names must be strings");
            const auto kind = synth::modulation_from_string(m.get<std::string>());
            if (!kind) throw ParameterError("dataset spec: unknown modulation '" + m.get<std::string>() + "'");
            s.modulations.push_back(*kind);
        }
    }
    f.get("snr_grid_db", s.snr_grid_db);
    f.get("n_samples", s.n_samples);
    f.get("signals_per_emitter", s.signals_per_emitter);
    f.get("seed", s.seed);
    f.get("carrier", s.carrier);
    f.get("samples_per_symbol", s.samples_per_symbol);
    f.finish();
    s.validate();
    return s;
}

}  // namespace rfsei::config
