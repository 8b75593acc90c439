#include "coresim/serialize.hpp"

#include <json.hpp>

#include <sstream>

namespace coresim {

using nlohmann::json;

namespace {

json op_to_json(const MicroOp& op) {
    json j;
    j["seq"] = op.seq;
    j["op"] = to_string(op.op);
    j["deps"] = op.deps;
    if (op.branch_info) {
        json b;
        b["predicted_outcome"] = op.branch_info->predicted_outcome;
        b["actual_outcome"] = op.branch_info->actual_outcome;
        json alt = json::array();
        for (const auto& a : op.branch_info->alt_path) alt.push_back(op_to_json(a));
        b["alt_path"] = std::move(alt);
        j["branch_info"] = std::move(b);
    }
    if (op.fu_kind) j["fu_kind"] = *op.fu_kind;
    return j;
}

MicroOp op_from_json(const json& j) {
    MicroOp op;
    op.seq = j.at("seq").get<uint32_t>();
    auto cls = op_class_from_string(j.at("op").get<std::string>());
    if (!cls) throw ValidationError("unknown op class '" + j.at("op").get<std::string>() + "'");
    op.op = *cls;
    op.deps = j.at("deps").get<std::vector<uint32_t>>();
    if (j.contains("branch_info")) {
        const json& b = j.at("branch_info");
        BranchInfo bi;
        bi.predicted_outcome = b.at("predicted_outcome").get<bool>();
        bi.actual_outcome = b.at("actual_outcome").get<bool>();
        for (const auto& a : b.at("alt_path")) bi.alt_path.push_back(op_from_json(a));
        op.branch_info = std::move(bi);
    }
    if (j.contains("fu_kind")) op.fu_kind = j.at("fu_kind").get<std::string>();
    return op;
}

void check_version(const json& j, const char* what) {
    if (!j.contains("v") || j.at("v").get<int>() != kSchemaVersion)
        throw ValidationError(std::string(what) + ": missing or unsupported schema version (want v=" +
                              std::to_string(kSchemaVersion) + ")");
}

json parse_json(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ValidationError(std::string(what) + ": malformed JSON");
    return j;
}

json config_to_json(const CoreConfig& config) {
    json j;
    j["v"] = kSchemaVersion;
    j["rob_size"] = config.rob_size;
    j["scheduler_size"] = config.scheduler_size;
    j["dispatch_width"] = config.dispatch_width;
    j["retire_width"] = config.retire_width;
    json ports = json::array();
    for (const auto& p : config.ports) ports.push_back({{"port_id", p.port_id}, {"fu_kinds", p.fu_kinds}});
    j["ports"] = std::move(ports);
    json fus = json::array();
    for (const auto& fu : config.fus) {
        json stages = json::array();
        for (const auto& s : fu.stages)
            stages.push_back({{"latency", s.latency}, {"pipelined", s.pipelined}});
        fus.push_back({{"kind", fu.kind}, {"stages", std::move(stages)}, {"count", fu.count}});
    }
    j["fus"] = std::move(fus);
    j["policy"] = to_string(config.policy);
    j["resteer_delay"] = config.resteer_delay;
    return j;
}

CoreConfig config_from_json(const json& j) {
    check_version(j, "core config");
    CoreConfig config;
    config.rob_size = j.at("rob_size").get<uint32_t>();
    config.scheduler_size = j.at("scheduler_size").get<uint32_t>();
    config.dispatch_width = j.at("dispatch_width").get<uint32_t>();
    config.retire_width = j.at("retire_width").get<uint32_t>();
    for (const auto& p : j.at("ports"))
        config.ports.push_back({p.at("port_id").get<uint32_t>(),
                                p.at("fu_kinds").get<std::vector<std::string>>()});
    for (const auto& f : j.at("fus")) {
        FunctionalUnitSpec fu;
        fu.kind = f.at("kind").get<std::string>();
        for (const auto& s : f.at("stages"))
            fu.stages.push_back({s.at("latency").get<uint32_t>(), s.at("pipelined").get<bool>()});
        fu.count = f.at("count").get<uint32_t>();
        config.fus.push_back(std::move(fu));
    }
    auto pol = policy_from_string(j.at("policy").get<std::string>());
    if (!pol) throw ValidationError("unknown scheduler policy '" + j.at("policy").get<std::string>() + "'");
    config.policy = *pol;
    config.resteer_delay = j.at("resteer_delay").get<uint32_t>();
    validate_config(config);
    return config;
}

} // namespace

std::string emit_program(const Program& program) {
    json j;
    j["v"] = kSchemaVersion;
    j["label"] = program.label;
    json ops = json::array();
    for (const auto& op : program.ops) ops.push_back(op_to_json(op));
    j["ops"] = std::move(ops);
    return j.dump(2);
}

Program parse_program(const std::string& json_text) {
    json j = parse_json(json_text, "program");
    check_version(j, "program");
    Program p;
    p.label = j.at("label").get<std::string>();
    for (const auto& o : j.at("ops")) p.ops.push_back(op_from_json(o));
    return p;
}

std::string emit_core_config(const CoreConfig& config) { return config_to_json(config).dump(2); }

CoreConfig parse_core_config(const std::string& json_text) {
    return config_from_json(parse_json(json_text, "core config"));
}

uint64_t config_hash(const CoreConfig& config) {
    const std::string dump = config_to_json(config).dump();
    uint64_t h = 0xcbf29ce484222325ull; // FNV-1a
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex(uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

CoreConfig core_config_preset(const std::string& name) {
    if (name == "skylake") return make_core_config("skylake_divsd");
    if (name == "strict_in_order")
        return make_core_config("skylake_divsd", SchedulerPolicy::StrictInOrder);
    if (name == "fully_pipelined") return make_core_config("fully_pipelined_divsd");
    throw ValidationError("unknown core preset '" + name +
                          "'; valid presets: skylake strict_in_order fully_pipelined");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j = parse_json(json_text, "experiment config");
    check_version(j, "experiment config");
    ExperimentConfig cfg;

    if (!j.contains("core")) throw ValidationError("experiment config: missing field 'core'");
    if (j.at("core").is_string()) {
        cfg.core_preset = j.at("core").get<std::string>();
        cfg.core = core_config_preset(cfg.core_preset);
    } else {
        cfg.core = config_from_json(j.at("core"));
    }

    if (!j.contains("channel")) throw ValidationError("experiment config: missing field 'channel'");
    const json& ch = j.at("channel");
    if (ch.contains("n_recv_divs")) cfg.channel.n_recv_divs = ch.at("n_recv_divs").get<uint32_t>();
    if (ch.contains("n_send_divs")) cfg.channel.n_send_divs = ch.at("n_send_divs").get<uint32_t>();
    if (ch.contains("fu_preset")) cfg.channel.fu_preset = ch.at("fu_preset").get<std::string>();
    if (ch.contains("secret_bits")) cfg.channel.secret_bits = ch.at("secret_bits").get<std::string>();
    if (ch.contains("trials_per_bit")) cfg.channel.trials_per_bit = ch.at("trials_per_bit").get<uint32_t>();

    if (j.contains("noise")) {
        const json& n = j.at("noise");
        std::string kind = n.at("kind").get<std::string>();
        if (kind == "none") {
            cfg.noise = NoiseModel::none();
        } else if (kind == "uniform") {
            cfg.noise = NoiseModel::uniform(n.at("lo").get<uint64_t>(), n.at("hi").get<uint64_t>());
        } else if (kind == "gaussian") {
            cfg.noise = NoiseModel::gaussian(n.at("sigma").get<double>());
        } else {
            throw ValidationError("experiment config: unknown noise kind '" + kind + "'");
        }
    }

    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    if (j.contains("outputs")) cfg.outputs = j.at("outputs").get<std::string>();
    if (j.contains("clock_ghz")) cfg.clock_ghz = j.at("clock_ghz").get<double>();
    return cfg;
}

std::string emit_experiment_config(const ExperimentConfig& cfg) {
    json j;
    j["v"] = kSchemaVersion;
    if (!cfg.core_preset.empty())
        j["core"] = cfg.core_preset;
    else
        j["core"] = config_to_json(cfg.core);
    json ch;
    ch["n_recv_divs"] = cfg.channel.n_recv_divs;
    if (cfg.channel.n_send_divs) ch["n_send_divs"] = *cfg.channel.n_send_divs;
    ch["fu_preset"] = cfg.channel.fu_preset;
    ch["secret_bits"] = cfg.channel.secret_bits;
    ch["trials_per_bit"] = cfg.channel.trials_per_bit;
    j["channel"] = std::move(ch);
    json n;
    switch (cfg.noise.kind) {
        case NoiseModel::Kind::None: n["kind"] = "none"; break;
        case NoiseModel::Kind::Uniform:
            n["kind"] = "uniform";
            n["lo"] = cfg.noise.lo;
            n["hi"] = cfg.noise.hi;
            break;
        case NoiseModel::Kind::Gaussian:
            n["kind"] = "gaussian";
            n["sigma"] = cfg.noise.sigma;
            break;
    }
    j["noise"] = std::move(n);
    if (cfg.seed) j["seed"] = *cfg.seed;
    j["outputs"] = cfg.outputs;
    j["clock_ghz"] = cfg.clock_ghz;
    return j.dump(2);
}

} // namespace coresim
