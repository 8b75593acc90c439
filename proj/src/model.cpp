#include "coresim/model.hpp"

#include <algorithm>
#include <sstream>

namespace coresim {

const char* to_string(OpClass op) {
    switch (op) {
        case OpClass::FpDiv: return "FpDiv";
        case OpClass::FpMul: return "FpMul";
        case OpClass::IntAlu: return "IntAlu";
        case OpClass::Load: return "Load";
        case OpClass::Branch: return "Branch";
        case OpClass::TimerStart: return "TimerStart";
        case OpClass::TimerStop: return "TimerStop";
        case OpClass::Nop: return "Nop";
    }
    return "?";
}

std::optional<OpClass> op_class_from_string(const std::string& s) {
    for (OpClass op : {OpClass::FpDiv, OpClass::FpMul, OpClass::IntAlu, OpClass::Load,
                       OpClass::Branch, OpClass::TimerStart, OpClass::TimerStop, OpClass::Nop}) {
        if (s == to_string(op)) return op;
    }
    return std::nullopt;
}

const char* to_string(SchedulerPolicy p) {
    return p == SchedulerPolicy::OldestFirstReady ? "OldestFirstReady" : "StrictInOrder";
}

std::optional<SchedulerPolicy> policy_from_string(const std::string& s) {
    if (s == "OldestFirstReady") return SchedulerPolicy::OldestFirstReady;
    if (s == "StrictInOrder") return SchedulerPolicy::StrictInOrder;
    return std::nullopt;
}

bool BranchInfo::operator==(const BranchInfo& other) const {
    return predicted_outcome == other.predicted_outcome &&
           actual_outcome == other.actual_outcome && alt_path == other.alt_path;
}

uint32_t FunctionalUnitSpec::total_latency() const {
    uint32_t total = 0;
    for (const auto& s : stages) total += s.latency;
    return total;
}

uint32_t FunctionalUnitSpec::initiation_interval() const {
    if (stages.empty()) return 1;
    return stages.front().pipelined ? 1 : stages.front().latency;
}

const FunctionalUnitSpec* CoreConfig::find_fu(const std::string& kind) const {
    for (const auto& fu : fus)
        if (fu.kind == kind) return &fu;
    return nullptr;
}

void validate_config(const CoreConfig& config) {
    if (config.rob_size < 1 || config.scheduler_size < 1)
        throw ValidationError("rob_size and scheduler_size must be >= 1");
    if (config.rob_size < config.scheduler_size)
        throw ValidationError("rob_size must be >= scheduler_size");
    if (config.dispatch_width < 1 || config.retire_width < 1)
        throw ValidationError("dispatch_width and retire_width must be >= 1");
    for (const auto& fu : config.fus) {
        if (fu.kind.empty()) throw ValidationError("functional unit with empty kind");
        if (fu.stages.empty())
            throw ValidationError("functional unit '" + fu.kind + "' has no stages");
        if (fu.count < 1)
            throw ValidationError("functional unit '" + fu.kind + "' has count 0");
        for (const auto& s : fu.stages)
            if (s.latency < 1)
                throw ValidationError("functional unit '" + fu.kind + "' has a zero-latency stage");
        size_t dups = 0;
        for (const auto& other : config.fus)
            if (other.kind == fu.kind) dups++;
        if (dups > 1) throw ValidationError("duplicate functional unit kind '" + fu.kind + "'");
    }
    for (const auto& port : config.ports) {
        for (const auto& kind : port.fu_kinds)
            if (!config.find_fu(kind))
                throw ValidationError("port " + std::to_string(port.port_id) +
                                      " references unknown fu kind '" + kind + "'");
        size_t dups = 0;
        for (const auto& other : config.ports)
            if (other.port_id == port.port_id) dups++;
        if (dups > 1)
            throw ValidationError("duplicate port id " + std::to_string(port.port_id));
    }
}

// ---------------------------------------------------------------------------
// build_program

OpSpec OpSpec::fp_div(std::vector<uint32_t> deps) { return {OpClass::FpDiv, std::move(deps), {}, {}, {}, {}}; }
OpSpec OpSpec::fp_mul(std::vector<uint32_t> deps) { return {OpClass::FpMul, std::move(deps), {}, {}, {}, {}}; }
OpSpec OpSpec::int_alu(std::vector<uint32_t> deps) { return {OpClass::IntAlu, std::move(deps), {}, {}, {}, {}}; }
OpSpec OpSpec::load(std::vector<uint32_t> deps) { return {OpClass::Load, std::move(deps), {}, {}, {}, {}}; }
OpSpec OpSpec::nop() { return {OpClass::Nop, {}, {}, {}, {}, {}}; }
OpSpec OpSpec::timer_start() { return {OpClass::TimerStart, {}, {}, {}, {}, {}}; }
OpSpec OpSpec::timer_stop() { return {OpClass::TimerStop, {}, {}, {}, {}, {}}; }

OpSpec OpSpec::branch(bool predicted, bool actual, std::vector<uint32_t> deps,
                      std::vector<OpSpec> alt_path) {
    OpSpec s;
    s.op = OpClass::Branch;
    s.deps = std::move(deps);
    s.predicted = predicted;
    s.actual = actual;
    s.alt_path = std::move(alt_path);
    return s;
}

namespace {

std::optional<std::string> default_fu_kind(OpClass op) {
    switch (op) {
        case OpClass::FpDiv: return "fp_div";
        case OpClass::FpMul: return "fp_mul";
        case OpClass::IntAlu: return "int_alu";
        case OpClass::Load: return "load";
        default: return std::nullopt; // branches, timers and nops run off the FU fabric
    }
}

struct TimerPositions {
    // flattened tree order; alt subtrees sit at their branch's position
    std::optional<size_t> start;
    std::optional<size_t> stop;
};

MicroOp convert_op(const OpSpec& spec, uint32_t seq, uint32_t max_dep_seq_exclusive,
                   bool in_alt, size_t& flat_pos, TimerPositions& timers);

std::vector<MicroOp> convert_alt(const std::vector<OpSpec>& alt, uint32_t branch_seq,
                                 size_t& flat_pos, TimerPositions& timers) {
    std::vector<MicroOp> out;
    out.reserve(alt.size());
    for (const auto& spec : alt)
        // alt-path uops get real seq numbers only at re-steer; deps may only
        // reference initial-stream uops at or before the owning branch
        out.push_back(convert_op(spec, 0, branch_seq + 1, true, flat_pos, timers));
    return out;
}

MicroOp convert_op(const OpSpec& spec, uint32_t seq, uint32_t max_dep_seq_exclusive,
                   bool in_alt, size_t& flat_pos, TimerPositions& timers) {
    const std::string where =
        in_alt ? "alt-path op (branch seq " + std::to_string(max_dep_seq_exclusive - 1) + ")"
               : "seq " + std::to_string(seq);

    MicroOp op;
    op.seq = seq;
    op.op = spec.op;
    op.deps = spec.deps;
    std::sort(op.deps.begin(), op.deps.end());
    op.deps.erase(std::unique(op.deps.begin(), op.deps.end()), op.deps.end());
    for (uint32_t d : op.deps) {
        if (!in_alt && d >= seq)
            throw ValidationError("forward or self dependence at " + where + " (dep " +
                                  std::to_string(d) + ")");
        if (d >= max_dep_seq_exclusive)
            throw ValidationError("dependence at " + where + " reaches past the enclosing branch (dep " +
                                  std::to_string(d) + ")");
    }

    if (spec.op == OpClass::Branch) {
        if (!spec.predicted || !spec.actual)
            throw ValidationError("branch at " + where + " missing predicted/actual outcome");
        BranchInfo bi;
        bi.predicted_outcome = *spec.predicted;
        bi.actual_outcome = *spec.actual;
        size_t pos_after_branch = flat_pos;
        bi.alt_path = convert_alt(spec.alt_path, in_alt ? max_dep_seq_exclusive - 1 : seq,
                                  pos_after_branch, timers);
        op.branch_info = std::move(bi);
    } else {
        if (spec.predicted || spec.actual || !spec.alt_path.empty())
            throw ValidationError("non-branch at " + where + " carries branch fields");
        if (spec.op == OpClass::TimerStart) {
            if (timers.start) throw ValidationError("more than one TimerStart (at " + where + ")");
            timers.start = flat_pos;
        }
        if (spec.op == OpClass::TimerStop) {
            if (timers.stop) throw ValidationError("more than one TimerStop (at " + where + ")");
            timers.stop = flat_pos;
        }
    }

    op.fu_kind = spec.fu_kind ? spec.fu_kind : default_fu_kind(spec.op);
    if (op.fu_kind && (spec.op == OpClass::Branch || spec.op == OpClass::TimerStart ||
                       spec.op == OpClass::TimerStop || spec.op == OpClass::Nop))
        throw ValidationError("op at " + where + " of class " + to_string(spec.op) +
                              " cannot consume a functional unit");
    flat_pos++;
    return op;
}

} // namespace

Program build_program(const std::vector<OpSpec>& spec, std::string label) {
    Program p;
    p.label = std::move(label);
    p.ops.reserve(spec.size());
    TimerPositions timers;
    size_t flat_pos = 0;
    for (uint32_t i = 0; i < spec.size(); i++)
        p.ops.push_back(convert_op(spec[i], i, i, false, flat_pos, timers));
    if (timers.start && timers.stop && *timers.start > *timers.stop)
        throw ValidationError("TimerStart must precede TimerStop");
    if (timers.stop && !timers.start)
        throw ValidationError("TimerStop without TimerStart");
    return p;
}

// ---------------------------------------------------------------------------
// Presets

FunctionalUnitSpec preset_fu(const std::string& name) {
    if (name == "skylake_divsd")
        return {"fp_div", {{4, false}, {9, true}}, 1};
    if (name == "haswell_divsd")
        return {"fp_div", {{8, false}, {8, true}}, 1};
    if (name == "fully_pipelined_divsd")
        return {"fp_div", {{13, true}}, 1};
    if (name == "appendix_unit")
        return {"fp_div", {{3, false}, {1, true}}, 1};
    if (name == "fp_mul")
        return {"fp_mul", {{4, true}}, 1};
    if (name == "int_alu")
        return {"int_alu", {{1, true}}, 1};
    if (name == "load")
        return {"load", {{1, true}}, 1};

    std::ostringstream msg;
    msg << "unknown functional unit preset '" << name << "'; valid presets:";
    for (const auto& n : fu_preset_names()) msg << " " << n;
    throw ValidationError(msg.str());
}

std::vector<std::string> fu_preset_names() {
    return {"skylake_divsd", "haswell_divsd", "fully_pipelined_divsd", "appendix_unit",
            "fp_mul", "int_alu", "load"};
}

CoreConfig make_core_config(const std::string& divider_preset, SchedulerPolicy policy,
                            uint32_t rob_size) {
    FunctionalUnitSpec divider = preset_fu(divider_preset);
    if (divider.kind != "fp_div")
        throw ValidationError("'" + divider_preset + "' is not a divider preset");

    CoreConfig config;
    config.rob_size = rob_size;
    config.scheduler_size = std::min<uint32_t>(rob_size, 97);
    config.dispatch_width = 4;
    config.retire_width = 4;
    config.policy = policy;
    config.resteer_delay = 1;
    config.fus = {divider, preset_fu("fp_mul"), preset_fu("int_alu"), preset_fu("load")};
    config.ports = {{0, {"fp_div"}}, {1, {"fp_mul"}}, {2, {"int_alu"}}, {3, {"load"}}};
    validate_config(config);
    return config;
}

} // namespace coresim
