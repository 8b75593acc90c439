#include "coresim/sim.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <unordered_map>

namespace coresim {

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Resolve: return "resolve";
        case EventKind::Squash: return "squash";
        case EventKind::Resteer: return "resteer";
        case EventKind::Issue: return "issue";
        case EventKind::Complete: return "complete";
        case EventKind::Dispatch: return "dispatch";
        case EventKind::Retire: return "retire";
    }
    return "?";
}

const UopRecord* Trace::find(uint32_t seq) const {
    auto it = std::lower_bound(records.begin(), records.end(), seq,
                               [](const UopRecord& r, uint32_t s) { return r.seq < s; });
    if (it == records.end() || it->seq != seq) return nullptr;
    return &*it;
}

const UopRecord& Trace::at(uint32_t seq) const {
    const UopRecord* r = find(seq);
    if (!r) throw SimError("no record for seq " + std::to_string(seq));
    return *r;
}

std::set<uint32_t> squash_set(const std::vector<uint32_t>& dispatched_unretired,
                              uint32_t branch_seq, bool branch_mispredicted) {
    if (!branch_mispredicted)
        throw SimError("squash_set called on a correctly predicted branch (seq " +
                       std::to_string(branch_seq) + ")");
    std::set<uint32_t> out;
    for (uint32_t s : dispatched_unretired)
        if (s > branch_seq) out.insert(s);
    return out;
}

namespace {

int event_rank(EventKind k) {
    switch (k) {
        case EventKind::Resolve: return 0;
        case EventKind::Squash: return 1;
        case EventKind::Resteer: return 2;
        case EventKind::Issue: return 3;
        case EventKind::Complete: return 4;
        case EventKind::Dispatch: return 5;
        case EventKind::Retire: return 6;
    }
    return 7;
}

struct Exec {
    uint32_t seq = 0;
    uint32_t remaining = 0;
    bool zombie = false; // squashed while in flight; vacates next cycle
};

struct StageState {
    StageSpec spec;
    std::vector<Exec> occupants; // non-pipelined: at most one
    bool entered_this_cycle = false;

    bool accepts() const {
        if (!spec.pipelined) return occupants.empty();
        return !entered_this_cycle && occupants.size() < spec.latency;
    }
};

struct UnitState {
    std::vector<StageState> stages;
};

struct PendingUop {
    MicroOp op;            // seq already assigned
    uint64_t min_dispatch; // earliest dispatch cycle
};

struct Engine {
    const CoreConfig& config;
    const RunLimits& limits;

    std::vector<UopRecord> records;                  // ascending seq (dispatch order)
    std::unordered_map<uint32_t, size_t> record_idx; // seq -> records index
    std::unordered_map<uint32_t, MicroOp> live_ops;  // dispatched uops by seq

    std::deque<PendingUop> queue; // front-end stream, ascending seq
    std::deque<uint32_t> rob;     // dispatched, unretired, unsquashed; ascending seq
    std::set<uint32_t> scheduler; // unissued uops holding scheduler entries
    std::deque<uint32_t> rob_only;      // dispatched but waiting for a scheduler entry
    std::set<uint32_t> live_unissued;   // dispatched, unsquashed, unissued
    std::set<uint32_t> pending_branches; // dispatched branches not yet resolved

    std::map<std::string, std::vector<UnitState>> units;
    struct ExecLoc { std::string kind; size_t unit; size_t stage; };
    std::unordered_map<uint32_t, ExecLoc> in_flight;

    std::vector<Event> events;
    uint32_t next_seq = 0;
    std::optional<uint64_t> timer_start_retire, timer_stop_retire;

    Engine(const CoreConfig& cfg, const RunLimits& lim) : config(cfg), limits(lim) {
        for (const auto& fu : config.fus) {
            std::vector<UnitState> insts(fu.count);
            for (auto& inst : insts)
                for (const auto& s : fu.stages) inst.stages.push_back({s, {}, false});
            units.emplace(fu.kind, std::move(insts));
        }
    }

    UopRecord& rec(uint32_t seq) { return records[record_idx.at(seq)]; }

    void push_event(uint64_t cycle, EventKind kind, uint32_t seq) {
        events.push_back({cycle, kind, seq});
    }

    bool ready(const MicroOp& op, uint64_t cycle) {
        for (uint32_t d : op.deps) {
            const UopRecord& r = rec(d);
            if (!r.complete_cycle || *r.complete_cycle > cycle) return false;
        }
        return true;
    }

    std::vector<uint32_t> ports_for(const std::string& kind) {
        std::vector<uint32_t> ids;
        for (const auto& p : config.ports)
            if (std::find(p.fu_kinds.begin(), p.fu_kinds.end(), kind) != p.fu_kinds.end())
                ids.push_back(p.port_id);
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    // --- cycle steps -------------------------------------------------------

    void purge_zombies() {
        for (auto& [kind, insts] : units)
            for (auto& inst : insts)
                for (auto& stage : inst.stages)
                    stage.occupants.erase(
                        std::remove_if(stage.occupants.begin(), stage.occupants.end(),
                                       [](const Exec& e) { return e.zombie; }),
                        stage.occupants.end());
    }

    void resolve_step(uint64_t cycle) {
        std::vector<uint32_t> branches(pending_branches.begin(), pending_branches.end());
        for (uint32_t bseq : branches) {
            if (!pending_branches.count(bseq)) continue; // squashed by an older branch
            UopRecord& r = rec(bseq);
            if (!r.complete_cycle || *r.complete_cycle > cycle) continue;
            pending_branches.erase(bseq);
            push_event(cycle, EventKind::Resolve, bseq);
            const BranchInfo& info = *live_ops.at(bseq).branch_info;
            if (!info.mispredicted()) continue;
            do_squash(cycle, bseq);
            if (!info.alt_path.empty()) resteer(cycle, bseq, info.alt_path);
        }
    }

    void do_squash(uint64_t cycle, uint32_t branch_seq) {
        std::vector<uint32_t> live(rob.begin(), rob.end());
        std::set<uint32_t> victims = squash_set(live, branch_seq, true);
        for (uint32_t v : victims) {
            UopRecord& r = rec(v);
            r.squash_cycle = cycle;
            r.transient = true;
            scheduler.erase(v);
            live_unissued.erase(v);
            pending_branches.erase(v);
            auto ro = std::find(rob_only.begin(), rob_only.end(), v);
            if (ro != rob_only.end()) rob_only.erase(ro);
            auto fl = in_flight.find(v);
            if (fl != in_flight.end()) {
                // a squashed uop holds its stage until the start of next cycle
                for (auto& e : units.at(fl->second.kind)[fl->second.unit]
                                   .stages[fl->second.stage].occupants)
                    if (e.seq == v) e.zombie = true;
                in_flight.erase(fl);
            }
            push_event(cycle, EventKind::Squash, v);
        }
        while (!rob.empty() && rob.back() > branch_seq) rob.pop_back();
        // abandon the not-yet-dispatched wrong-path stream
        std::erase_if(queue, [&](const PendingUop& p) { return p.op.seq > branch_seq; });
    }

    void resteer(uint64_t cycle, uint32_t branch_seq, const std::vector<MicroOp>& alt) {
        push_event(cycle, EventKind::Resteer, branch_seq);
        for (MicroOp op : alt) {
            op.seq = next_seq++;
            queue.push_back({std::move(op), cycle + config.resteer_delay});
        }
    }

    bool strict_blocked(uint32_t seq) const {
        auto it = live_unissued.begin();
        return it != live_unissued.end() && *it < seq;
    }

    std::pair<UnitState*, size_t> find_accepting_unit(const std::string& kind) {
        auto& insts = units.at(kind);
        for (size_t i = 0; i < insts.size(); i++)
            if (insts[i].stages.front().accepts()) return {&insts[i], i};
        return {nullptr, 0};
    }

    void issue_step(uint64_t cycle) {
        std::set<uint32_t> used_ports;
        std::vector<uint32_t> cands(scheduler.begin(), scheduler.end());
        for (uint32_t seq : cands) {
            UopRecord& r = rec(seq);
            const MicroOp& op = live_ops.at(seq);
            if (!ready(op, cycle)) continue;
            if (config.policy == SchedulerPolicy::StrictInOrder && strict_blocked(seq)) continue;

            if (!op.fu_kind) {
                // branches, timers and nops execute off the port fabric, latency 1
                r.issue_cycle = cycle;
                r.complete_cycle = cycle + 1;
                r.stage_entry_cycles = {cycle};
                push_event(cycle, EventKind::Issue, seq);
                push_event(cycle + 1, EventKind::Complete, seq);
                scheduler.erase(seq);
                live_unissued.erase(seq);
                continue;
            }

            for (uint32_t port : ports_for(*op.fu_kind)) {
                if (used_ports.count(port)) continue;
                auto [unit, unit_idx] = find_accepting_unit(*op.fu_kind);
                if (!unit) break; // no instance can accept; no port helps
                StageState& entry = unit->stages.front();
                entry.occupants.push_back({seq, entry.spec.latency, false});
                entry.entered_this_cycle = true;
                in_flight[seq] = {*op.fu_kind, unit_idx, 0};
                r.issue_cycle = cycle;
                r.stage_entry_cycles = {cycle};
                push_event(cycle, EventKind::Issue, seq);
                used_ports.insert(port);
                scheduler.erase(seq);
                live_unissued.erase(seq);
                break;
            }
        }
    }

    void advance_step(uint64_t cycle) {
        for (auto& [kind, insts] : units) {
            for (size_t u = 0; u < insts.size(); u++) {
                auto& stages = insts[u].stages;
                // downstream first so vacancies open up within the cycle
                for (size_t i = stages.size(); i-- > 0;) {
                    auto& occ = stages[i].occupants;
                    for (size_t j = 0; j < occ.size();) {
                        Exec& e = occ[j];
                        if (e.zombie) { j++; continue; }
                        if (e.remaining > 0) e.remaining--;
                        if (e.remaining > 0) { j++; continue; }
                        if (i + 1 == stages.size()) {
                            UopRecord& r = rec(e.seq);
                            r.complete_cycle = cycle + 1; // result usable next cycle
                            push_event(cycle + 1, EventKind::Complete, e.seq);
                            in_flight.erase(e.seq);
                            occ.erase(occ.begin() + j);
                        } else if (stages[i + 1].accepts()) {
                            uint32_t seq = e.seq;
                            stages[i + 1].occupants.push_back({seq, stages[i + 1].spec.latency, false});
                            stages[i + 1].entered_this_cycle = true;
                            in_flight[seq].stage = i + 1;
                            rec(seq).stage_entry_cycles.push_back(cycle + 1);
                            occ.erase(occ.begin() + j);
                        } else {
                            j++; // blocked at stage exit; keeps occupying
                        }
                    }
                }
            }
        }
        for (auto& [kind, insts] : units)
            for (auto& inst : insts)
                for (auto& stage : inst.stages) stage.entered_this_cycle = false;
    }

    void dispatch_step(uint64_t cycle) {
        // scheduler entries freed by this cycle's issues refill oldest-first
        while (!rob_only.empty() && scheduler.size() < config.scheduler_size) {
            scheduler.insert(rob_only.front());
            rob_only.pop_front();
        }
        uint32_t n = 0;
        while (n < config.dispatch_width && !queue.empty()) {
            const PendingUop& front = queue.front();
            if (front.min_dispatch > cycle) break;
            if (rob.size() >= config.rob_size) break;
            MicroOp op = front.op;
            queue.pop_front();

            UopRecord r;
            r.seq = op.seq;
            r.op = op.op;
            r.fu_kind = op.fu_kind;
            r.deps = op.deps;
            r.dispatch_cycle = cycle;
            record_idx[op.seq] = records.size();
            records.push_back(std::move(r));

            rob.push_back(op.seq);
            live_unissued.insert(op.seq);
            if (op.op == OpClass::Branch) pending_branches.insert(op.seq);
            if (scheduler.size() < config.scheduler_size)
                scheduler.insert(op.seq);
            else
                rob_only.push_back(op.seq);
            push_event(cycle, EventKind::Dispatch, op.seq);
            live_ops.emplace(op.seq, std::move(op));
            n++;
        }
    }

    void retire_step(uint64_t cycle) {
        uint32_t n = 0;
        while (n < config.retire_width && !rob.empty()) {
            uint32_t seq = rob.front();
            UopRecord& r = rec(seq);
            if (!r.complete_cycle || *r.complete_cycle > cycle) break;
            r.retire_cycle = cycle;
            rob.pop_front();
            push_event(cycle, EventKind::Retire, seq);
            if (r.op == OpClass::TimerStart) timer_start_retire = cycle;
            if (r.op == OpClass::TimerStop) timer_stop_retire = cycle;
            n++;
        }
    }

    Trace finish() {
        std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
            if (a.cycle != b.cycle) return a.cycle < b.cycle;
            if (event_rank(a.kind) != event_rank(b.kind))
                return event_rank(a.kind) < event_rank(b.kind);
            return a.seq < b.seq;
        });
        Trace t;
        t.records = std::move(records);
        t.events = std::move(events);
        t.total_cycles = t.events.empty() ? 0 : t.events.back().cycle;
        if (timer_start_retire && timer_stop_retire)
            t.attack_time = *timer_stop_retire - *timer_start_retire;
        return t;
    }
};

void check_op_against_config(const MicroOp& op, const CoreConfig& config) {
    if (op.fu_kind) {
        if (!config.find_fu(*op.fu_kind))
            throw ValidationError("uop seq " + std::to_string(op.seq) + " needs fu kind '" +
                                  *op.fu_kind + "' absent from config");
        bool reachable = false;
        for (const auto& p : config.ports)
            if (std::find(p.fu_kinds.begin(), p.fu_kinds.end(), *op.fu_kind) != p.fu_kinds.end())
                reachable = true;
        if (!reachable)
            throw ValidationError("fu kind '" + *op.fu_kind + "' is not reachable from any port");
    }
    if ((op.op == OpClass::Branch) != op.branch_info.has_value())
        throw ValidationError("branch_info must be present exactly on Branch uops (seq " +
                              std::to_string(op.seq) + ")");
    if (op.branch_info)
        for (const auto& alt : op.branch_info->alt_path)
            check_op_against_config(alt, config);
}

} // namespace

Trace run(const Program& program, const CoreConfig& config, const RunLimits& limits) {
    validate_config(config);
    for (const auto& op : program.ops) check_op_against_config(op, config);

    Engine eng(config, limits);
    eng.next_seq = static_cast<uint32_t>(program.ops.size());
    for (const auto& op : program.ops) eng.queue.push_back({op, 0});

    for (uint64_t cycle = 0;; cycle++) {
        if (eng.queue.empty() && eng.rob.empty()) break;
        if (cycle > limits.max_cycles)
            throw SimError("simulation exceeded " + std::to_string(limits.max_cycles) +
                           " cycles (non-termination guard)");
        eng.purge_zombies();
        eng.resolve_step(cycle);
        eng.issue_step(cycle);
        eng.advance_step(cycle);
        eng.dispatch_step(cycle);
        eng.retire_step(cycle);
    }
    return eng.finish();
}

} // namespace coresim
