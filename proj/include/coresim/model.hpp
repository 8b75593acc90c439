// coresim -- domain model
//
// Programs are flat lists of micro-ops with explicit data dependences.
// Functional units are described as ordered stage lists; a stage is either
// pipelined (accepts one uop per cycle, holds up to `latency` uops) or
// non-pipelined (holds a single uop and blocks entry for its full latency).

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace coresim {

// Thrown for invalid programs, configs, or parameters. CLI maps this to exit 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown for errors during simulation or analysis. CLI maps this to exit 1.
class SimError : public std::runtime_error {
public:
    explicit SimError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class OpClass : uint8_t {
    FpDiv,
    FpMul,
    IntAlu,
    Load,
    Branch,
    TimerStart, // serializing timing markers; retire like Nops, consume no FU
    TimerStop,
    Nop,
};

const char* to_string(OpClass op);
std::optional<OpClass> op_class_from_string(const std::string& s);

struct MicroOp;

// Attached to Branch uops only. The uops listed *after* a branch in the
// enclosing stream are its predicted-path continuation; alt_path is the
// other path, dispatched on mispredict re-steer with fresh seq numbers.
struct BranchInfo {
    bool predicted_outcome = false;
    bool actual_outcome = false;
    std::vector<MicroOp> alt_path;

    bool mispredicted() const { return predicted_outcome != actual_outcome; }
    bool operator==(const BranchInfo&) const;
};

struct MicroOp {
    uint32_t seq = 0;                      // program-order index; 0 placeholder inside alt_path
    OpClass op = OpClass::Nop;
    std::vector<uint32_t> deps;            // seq indices this uop reads from (all older)
    std::optional<BranchInfo> branch_info; // present iff op == Branch
    std::optional<std::string> fu_kind;    // FU kind consumed; absent for branches/timers/nops

    bool operator==(const MicroOp&) const = default;
};

struct StageSpec {
    uint32_t latency = 1; // >= 1
    bool pipelined = true;

    bool operator==(const StageSpec&) const = default;
};

struct FunctionalUnitSpec {
    std::string kind;              // e.g. "fp_div", "fp_mul", "int_alu", "load"
    std::vector<StageSpec> stages; // ordered, entry stage first
    uint32_t count = 1;            // unit instances of this kind

    uint32_t total_latency() const;
    // Cycles until the unit accepts the next uop: first-stage latency if that
    // stage is non-pipelined, otherwise 1.
    uint32_t initiation_interval() const;

    bool operator==(const FunctionalUnitSpec&) const = default;
};

enum class SchedulerPolicy : uint8_t {
    OldestFirstReady, // per port, the smallest-seq ready uop wins
    StrictInOrder,    // a uop issues only after every older live uop has issued
};

const char* to_string(SchedulerPolicy p);
std::optional<SchedulerPolicy> policy_from_string(const std::string& s);

struct PortSpec {
    uint32_t port_id = 0;
    std::vector<std::string> fu_kinds; // kinds reachable through this port

    bool operator==(const PortSpec&) const = default;
};

struct CoreConfig {
    uint32_t rob_size = 224;
    uint32_t scheduler_size = 97;
    uint32_t dispatch_width = 4;
    uint32_t retire_width = 4;
    std::vector<PortSpec> ports;
    std::vector<FunctionalUnitSpec> fus;
    SchedulerPolicy policy = SchedulerPolicy::OldestFirstReady;
    uint32_t resteer_delay = 1; // cycles from branch resolution to first alt-path dispatch

    const FunctionalUnitSpec* find_fu(const std::string& kind) const;
    bool operator==(const CoreConfig&) const = default;
};

// Validates structural invariants; throws ValidationError.
void validate_config(const CoreConfig& config);

struct Program {
    std::vector<MicroOp> ops; // seq == index for the initial stream
    std::string label;

    bool operator==(const Program&) const = default;
};

// ---------------------------------------------------------------------------
// Program construction

// Declarative entry for build_program. seq numbers are assigned in list
// order; deps reference earlier entries by index.
struct OpSpec {
    OpClass op = OpClass::Nop;
    std::vector<uint32_t> deps;
    std::optional<bool> predicted; // Branch only
    std::optional<bool> actual;    // Branch only
    std::vector<OpSpec> alt_path;  // Branch only; deps reference initial-stream seqs
    std::optional<std::string> fu_kind; // override; default derived from op class

    static OpSpec fp_div(std::vector<uint32_t> deps = {});
    static OpSpec fp_mul(std::vector<uint32_t> deps = {});
    static OpSpec int_alu(std::vector<uint32_t> deps = {});
    static OpSpec load(std::vector<uint32_t> deps = {});
    static OpSpec nop();
    static OpSpec timer_start();
    static OpSpec timer_stop();
    static OpSpec branch(bool predicted, bool actual, std::vector<uint32_t> deps,
                         std::vector<OpSpec> alt_path = {});
};

// Validates and assigns seq numbers. Throws ValidationError naming the
// offending seq on forward/self dependences, duplicate timers, or
// branch-info mismatches.
Program build_program(const std::vector<OpSpec>& spec, std::string label = {});

// ---------------------------------------------------------------------------
// Presets

// Known functional-unit presets:
//   skylake_divsd          [(4, non-pipelined), (9, pipelined)]   latency 13, initiation 4
//   haswell_divsd          [(8, non-pipelined), (8, pipelined)]   latency 16, initiation 8
//   fully_pipelined_divsd  [(13, pipelined)]                      latency 13, initiation 1
//   appendix_unit          [(3, non-pipelined), (1, pipelined)]   latency 4,  initiation 3
//   fp_mul                 [(4, pipelined)]
//   int_alu                [(1, pipelined)]
//   load                   [(1, pipelined)]
// Divider presets model the published (latency, throughput) pairs as a
// non-pipelined entry stage of length `throughput` followed by a pipelined
// drain stage. Throws ValidationError listing valid names on a miss.
FunctionalUnitSpec preset_fu(const std::string& name);

std::vector<std::string> fu_preset_names();

// Single-issue-per-kind core around the given divider preset: one port each
// for fp_div, fp_mul, int_alu, load.
CoreConfig make_core_config(const std::string& divider_preset = "skylake_divsd",
                            SchedulerPolicy policy = SchedulerPolicy::OldestFirstReady,
                            uint32_t rob_size = 224);

} // namespace coresim
