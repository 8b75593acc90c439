// coresim -- threshold calibration, channel rates, histograms, sensitivity
// sweeps, and attack taxonomy

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "coresim/channel.hpp"
#include "coresim/model.hpp"
#include "coresim/sim.hpp"

namespace coresim {

struct ChannelStats {
    double threshold = 0.0;
    double error_rate = 0.0;            // misclassified / total, sample <= threshold reads as 0
    double bits_per_cycle = 0.0;        // total bits / total measured cycles
    double kbps = 0.0;                  // bits_per_cycle * clock_hz / 8192
    double median0 = 0.0, median1 = 0.0;
    double p99_0 = 0.0, p1_1 = 0.0;
    uint64_t total_bits = 0;
    uint64_t total_cycles = 0;
};

// Nearest-rank percentile: the ceil(p*N)-th order statistic, p in (0, 1].
uint64_t percentile_nearest_rank(std::vector<uint64_t> samples, double p);

// Threshold between the two classes: midpoint of (p99 of the 0-samples,
// p1 of the 1-samples) when those separate, otherwise midpoint of the
// medians. Throws ValidationError on empty input.
double calibrate(const std::vector<uint64_t>& samples0, const std::vector<uint64_t>& samples1);

ChannelStats rates(const std::vector<BitSamples>& bit_samples, double threshold,
                   double clock_hz);

struct HistBin {
    uint64_t bin_start = 0;
    double probability = 0.0;
};

// Bins of the given width tiling [min, max]; probabilities sum to 1.
std::vector<HistBin> histogram(const std::vector<uint64_t>& samples, uint64_t bin_width);

struct SweepRow {
    uint32_t n_divs = 0;
    double median0 = 0.0, median1 = 0.0, diff = 0.0;
    double bits_per_cycle = 0.0;
    double error_rate = 0.0;
};

// One transmit + calibrate + rates pass per receiver length, rows in input
// order.
std::vector<SweepRow> sweep_receiver_length(const std::vector<uint32_t>& lengths,
                                            const ChannelParams& params,
                                            const CoreConfig& config, const NoiseModel& noise,
                                            uint64_t seed);

bool diff_non_decreasing(const std::vector<SweepRow>& rows);
bool transfer_non_increasing(const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------------------
// Taxonomy

enum class AttackDirection : uint8_t { Forward, Backward };
enum class AttackTiming : uint8_t { Inclusive, Exclusive };
enum class ChannelKind : uint8_t { Stateful, Concurrent };

struct Taxonomy {
    AttackDirection direction = AttackDirection::Forward;
    AttackTiming timing = AttackTiming::Exclusive;
    ChannelKind channel_kind = ChannelKind::Stateful;

    std::string to_string() const; // "backward / inclusive / concurrent"
    bool operator==(const Taxonomy&) const = default;
};

// Counterfactual pair deciding Stateful vs Concurrent: the attack time of a
// re-run with all transient uops stripped and FU state reset, and the
// uncontended (bit = 0 equivalent) attack time. Equal means the observed
// effect existed only through in-flight overlap (Concurrent); a stripped
// re-run that stays slow means the effect persists in microarchitectural
// state (Stateful).
struct CounterfactualTimes {
    uint64_t stripped_attack_time = 0;
    uint64_t uncontended_attack_time = 0;
};

// Rebuilds the program without the uops the trace squashed; retired
// alt-path uops are kept through their branches.
Program strip_transients(const Program& program, const Trace& trace);

// Direction: Backward iff some transient uop got into a shared unit ahead of
// an older retired uop and held it across that uop's ready-to-issue wait.
// Timing: Inclusive iff the timers bracket every transient seq.
// Throws SimError when the trace has no transient uops.
Taxonomy classify(const Program& program, const Trace& trace,
                  const CounterfactualTimes& counterfactual);

// Convenience for simulable programs: runs, strips, re-runs; the stripped
// run is by construction the uncontended reference.
Taxonomy classify_simulated(const Program& program, const CoreConfig& config);

// ---------------------------------------------------------------------------
// CSV export

void write_stats_csv(std::ostream& os, const ChannelStats& stats);
void write_histogram_csv(std::ostream& os, const std::vector<HistBin>& bins);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

} // namespace coresim
