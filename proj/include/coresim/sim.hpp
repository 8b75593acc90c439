// coresim -- deterministic cycle-level out-of-order core simulator
//
// Per-cycle step order: resolve/squash -> issue -> stage-advance/complete ->
// dispatch -> retire. A uop issued at cycle t into a unit does its first
// cycle of stage work at t; its result becomes usable (complete_cycle) at
// t + total_latency, which is the first cycle a dependent may issue.

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coresim/model.hpp"

namespace coresim {

struct UopRecord {
    uint32_t seq = 0;
    OpClass op = OpClass::Nop;
    std::optional<std::string> fu_kind;
    std::vector<uint32_t> deps; // copied from the uop for post-hoc analysis

    uint64_t dispatch_cycle = 0;
    std::optional<uint64_t> issue_cycle;
    std::optional<uint64_t> complete_cycle; // first cycle the result is usable
    std::optional<uint64_t> retire_cycle;
    std::optional<uint64_t> squash_cycle;
    bool transient = false; // squashed, never architecturally visible

    // entry cycle per FU stage, in stage order (off-fabric ops: single span)
    std::vector<uint64_t> stage_entry_cycles;
};

enum class EventKind : uint8_t { Resolve, Squash, Resteer, Issue, Complete, Dispatch, Retire };

const char* to_string(EventKind k);

struct Event {
    uint64_t cycle = 0;
    EventKind kind = EventKind::Dispatch;
    uint32_t seq = 0;

    bool operator==(const Event&) const = default;
};

struct Trace {
    std::vector<UopRecord> records; // sorted by seq; never-dispatched uops have no record
    std::optional<uint64_t> attack_time; // retire(TimerStop) - retire(TimerStart)
    uint64_t total_cycles = 0;
    std::vector<Event> events; // sorted by (cycle, step order, seq)

    const UopRecord* find(uint32_t seq) const;
    const UopRecord& at(uint32_t seq) const; // throws SimError if absent
};

struct RunLimits {
    uint64_t max_cycles = 1'000'000; // non-termination guard
};

// Runs the program to completion (every dispatched uop retired or squashed).
// Pure function of its inputs: identical inputs yield identical traces.
Trace run(const Program& program, const CoreConfig& config, const RunLimits& limits = {});

// The set of seq numbers removed when the branch at branch_seq resolves
// mispredicted: every dispatched, not-yet-retired uop younger than the
// branch. Throws SimError when the branch was predicted correctly.
std::set<uint32_t> squash_set(const std::vector<uint32_t>& dispatched_unretired,
                              uint32_t branch_seq, bool branch_mispredicted);

} // namespace coresim
