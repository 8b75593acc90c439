#include "coresim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

namespace coresim {

uint64_t percentile_nearest_rank(std::vector<uint64_t> samples, double p) {
    if (samples.empty()) throw ValidationError("percentile of empty sample list");
    if (p <= 0.0 || p > 1.0) throw ValidationError("percentile p must be in (0, 1]");
    std::sort(samples.begin(), samples.end());
    size_t rank = static_cast<size_t>(std::ceil(p * static_cast<double>(samples.size())));
    if (rank < 1) rank = 1;
    if (rank > samples.size()) rank = samples.size();
    return samples[rank - 1];
}

double calibrate(const std::vector<uint64_t>& samples0, const std::vector<uint64_t>& samples1) {
    if (samples0.empty() || samples1.empty())
        throw ValidationError("calibrate requires nonempty sample lists for both bit values");
    const uint64_t p99_0 = percentile_nearest_rank(samples0, 0.99);
    const uint64_t p1_1 = percentile_nearest_rank(samples1, 0.01);
    if (p99_0 < p1_1) return (static_cast<double>(p99_0) + static_cast<double>(p1_1)) / 2.0;
    const uint64_t med0 = percentile_nearest_rank(samples0, 0.5);
    const uint64_t med1 = percentile_nearest_rank(samples1, 0.5);
    return (static_cast<double>(med0) + static_cast<double>(med1)) / 2.0;
}

ChannelStats rates(const std::vector<BitSamples>& bit_samples, double threshold,
                   double clock_hz) {
    ChannelStats stats;
    stats.threshold = threshold;
    std::vector<uint64_t> pool0, pool1;
    uint64_t misclassified = 0;
    for (const auto& bs : bit_samples) {
        for (uint64_t s : bs.samples) {
            const int decoded = static_cast<double>(s) <= threshold ? 0 : 1;
            if (decoded != bs.bit) misclassified++;
            stats.total_bits++;
            stats.total_cycles += s;
            (bs.bit == 0 ? pool0 : pool1).push_back(s);
        }
    }
    if (stats.total_bits == 0) throw ValidationError("rates requires at least one sample");
    stats.error_rate = static_cast<double>(misclassified) / static_cast<double>(stats.total_bits);
    stats.bits_per_cycle =
        static_cast<double>(stats.total_bits) / static_cast<double>(stats.total_cycles);
    stats.kbps = stats.bits_per_cycle * clock_hz / 8192.0;
    if (!pool0.empty()) {
        stats.median0 = static_cast<double>(percentile_nearest_rank(pool0, 0.5));
        stats.p99_0 = static_cast<double>(percentile_nearest_rank(pool0, 0.99));
    }
    if (!pool1.empty()) {
        stats.median1 = static_cast<double>(percentile_nearest_rank(pool1, 0.5));
        stats.p1_1 = static_cast<double>(percentile_nearest_rank(pool1, 0.01));
    }
    return stats;
}

std::vector<HistBin> histogram(const std::vector<uint64_t>& samples, uint64_t bin_width) {
    if (samples.empty()) throw ValidationError("histogram of empty sample list");
    if (bin_width < 1) throw ValidationError("bin_width must be >= 1");
    const uint64_t lo = *std::min_element(samples.begin(), samples.end());
    const uint64_t hi = *std::max_element(samples.begin(), samples.end());
    const uint64_t nbins = (hi - lo) / bin_width + 1;
    std::vector<HistBin> bins(nbins);
    for (uint64_t i = 0; i < nbins; i++) bins[i].bin_start = lo + i * bin_width;
    for (uint64_t s : samples) bins[(s - lo) / bin_width].probability += 1.0;
    for (auto& b : bins) b.probability /= static_cast<double>(samples.size());
    return bins;
}

std::vector<SweepRow> sweep_receiver_length(const std::vector<uint32_t>& lengths,
                                            const ChannelParams& params,
                                            const CoreConfig& config, const NoiseModel& noise,
                                            uint64_t seed) {
    if (lengths.empty()) throw ValidationError("sweep requires at least one length");
    std::vector<SweepRow> rows;
    rows.reserve(lengths.size());
    for (uint32_t n : lengths) {
        ChannelParams p = params;
        p.n_recv_divs = n;
        std::vector<BitSamples> samples = transmit(p, config, noise, seed);
        std::vector<uint64_t> pool0, pool1;
        for (const auto& bs : samples)
            for (uint64_t s : bs.samples) (bs.bit == 0 ? pool0 : pool1).push_back(s);
        const double threshold = calibrate(pool0, pool1);
        const ChannelStats stats = rates(samples, threshold, 3.0e9);
        SweepRow row;
        row.n_divs = n;
        row.median0 = stats.median0;
        row.median1 = stats.median1;
        row.diff = stats.median1 - stats.median0;
        row.bits_per_cycle = stats.bits_per_cycle;
        row.error_rate = stats.error_rate;
        rows.push_back(row);
    }
    return rows;
}

bool diff_non_decreasing(const std::vector<SweepRow>& rows) {
    for (size_t i = 1; i < rows.size(); i++)
        if (rows[i].diff < rows[i - 1].diff) return false;
    return true;
}

bool transfer_non_increasing(const std::vector<SweepRow>& rows) {
    for (size_t i = 1; i < rows.size(); i++)
        if (rows[i].bits_per_cycle > rows[i - 1].bits_per_cycle) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Taxonomy

std::string Taxonomy::to_string() const {
    std::string s;
    s += direction == AttackDirection::Backward ? "backward" : "forward";
    s += " / ";
    s += timing == AttackTiming::Inclusive ? "inclusive" : "exclusive";
    s += " / ";
    s += channel_kind == ChannelKind::Concurrent ? "concurrent" : "stateful";
    return s;
}

namespace {

uint64_t ready_cycle(const UopRecord& r, const Trace& trace) {
    uint64_t ready = r.dispatch_cycle + 1;
    for (uint32_t d : r.deps) {
        const UopRecord* dep = trace.find(d);
        if (dep && dep->complete_cycle) ready = std::max(ready, *dep->complete_cycle);
    }
    return ready;
}

uint64_t occupancy_end(const UopRecord& r) {
    if (r.complete_cycle) return *r.complete_cycle;
    if (r.squash_cycle) return *r.squash_cycle + 1; // vacates the cycle after squash
    return r.issue_cycle ? *r.issue_cycle : 0;
}

// T delayed R: same unit kind, T younger but issued first, and T's occupancy
// covers part of R's ready-to-issue wait
bool delays(const UopRecord& t, const UopRecord& r, const Trace& trace) {
    if (!t.fu_kind || !r.fu_kind || *t.fu_kind != *r.fu_kind) return false;
    if (!t.issue_cycle || !r.issue_cycle) return false;
    if (r.seq >= t.seq) return false;
    if (*t.issue_cycle >= *r.issue_cycle) return false;
    const uint64_t r_ready = ready_cycle(r, trace);
    if (*r.issue_cycle <= r_ready) return false; // issued as soon as it was ready
    return occupancy_end(t) > r_ready;
}

MicroOp remap_op(const MicroOp& op, const std::map<uint32_t, uint32_t>& seq_map, bool in_alt) {
    MicroOp out = op;
    for (auto& d : out.deps) d = seq_map.at(d);
    if (!in_alt) out.seq = seq_map.at(op.seq);
    if (out.branch_info)
        for (auto& alt : out.branch_info->alt_path) alt = remap_op(alt, seq_map, true);
    return out;
}

} // namespace

Program strip_transients(const Program& program, const Trace& trace) {
    Program stripped;
    stripped.label = program.label + "_stripped";
    std::map<uint32_t, uint32_t> seq_map;
    for (const auto& op : program.ops) {
        const UopRecord* rec = trace.find(op.seq);
        if (!rec || !rec->retire_cycle) continue; // squashed or never dispatched
        seq_map[op.seq] = static_cast<uint32_t>(stripped.ops.size());
        stripped.ops.push_back(remap_op(op, seq_map, false));
    }
    return stripped;
}

Taxonomy classify(const Program& program, const Trace& trace,
                  const CounterfactualTimes& counterfactual) {
    (void)program;
    std::vector<const UopRecord*> transients, retired;
    for (const auto& r : trace.records)
        (r.transient ? transients : retired).push_back(&r);
    if (transients.empty())
        throw SimError("unclassifiable: trace contains no transient uops");

    Taxonomy tax;

    tax.direction = AttackDirection::Forward;
    for (const UopRecord* t : transients) {
        for (const UopRecord* r : retired) {
            if (!r->retire_cycle) continue;
            if (delays(*t, *r, trace)) {
                tax.direction = AttackDirection::Backward;
                break;
            }
        }
        if (tax.direction == AttackDirection::Backward) break;
    }

    uint32_t first_transient = transients.front()->seq, last_transient = transients.front()->seq;
    for (const UopRecord* t : transients) {
        first_transient = std::min(first_transient, t->seq);
        last_transient = std::max(last_transient, t->seq);
    }
    const UopRecord* start = nullptr;
    const UopRecord* stop = nullptr;
    for (const auto& r : trace.records) {
        if (r.op == OpClass::TimerStart && r.retire_cycle) start = &r;
        if (r.op == OpClass::TimerStop && r.retire_cycle) stop = &r;
    }
    tax.timing = (start && stop && start->seq < first_transient && stop->seq > last_transient)
                     ? AttackTiming::Inclusive
                     : AttackTiming::Exclusive;

    tax.channel_kind = counterfactual.stripped_attack_time == counterfactual.uncontended_attack_time
                           ? ChannelKind::Concurrent
                           : ChannelKind::Stateful;
    return tax;
}

Taxonomy classify_simulated(const Program& program, const CoreConfig& config) {
    Trace trace = run(program, config);
    Program stripped = strip_transients(program, trace);
    Trace stripped_trace = run(stripped, config);
    CounterfactualTimes cf;
    cf.stripped_attack_time = stripped_trace.attack_time.value_or(0);
    cf.uncontended_attack_time = cf.stripped_attack_time;
    return classify(program, trace, cf);
}

// ---------------------------------------------------------------------------
// CSV export

namespace {
std::ostream& num(std::ostream& os) {
    os << std::setprecision(10);
    return os;
}
} // namespace

void write_stats_csv(std::ostream& os, const ChannelStats& stats) {
    os << "threshold,error_rate,bits_per_cycle,kbps,median0,median1,p99_0,p1_1\n";
    num(os) << stats.threshold << ',' << stats.error_rate << ',' << stats.bits_per_cycle << ','
            << stats.kbps << ',' << stats.median0 << ',' << stats.median1 << ',' << stats.p99_0
            << ',' << stats.p1_1 << "\n";
}

void write_histogram_csv(std::ostream& os, const std::vector<HistBin>& bins) {
    os << "bin_start,probability\n";
    for (const auto& b : bins) num(os) << b.bin_start << ',' << b.probability << "\n";
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "n_divs,median0,median1,diff,bits_per_cycle,error_rate\n";
    for (const auto& r : rows)
        num(os) << r.n_divs << ',' << r.median0 << ',' << r.median1 << ',' << r.diff << ','
                << r.bits_per_cycle << ',' << r.error_rate << "\n";
}

} // namespace coresim
