// coresim -- covert-channel program generators and transmission driver
//
// The channel program times a chain of dependent divisions (receiver) that
// doubles as the speculation window. A mispredicted outer branch keeps a
// transient shadow alive until the chain completes; inside the shadow, a
// secret-dependent inner branch re-steers onto independent divisions
// (sender) that contend with the receiver on the divider's non-pipelined
// entry stage. Timing the whole window retire-to-retire reads the bit back.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coresim/model.hpp"
#include "coresim/sim.hpp"

namespace coresim {

struct ChannelParams {
    uint32_t n_recv_divs = 12;              // dependent receiver divisions (>= 1)
    std::optional<uint32_t> n_send_divs;    // independent sender divisions; auto-sized if absent
    std::string fu_preset = "skylake_divsd";
    std::string secret_bits = "01";
    uint32_t trials_per_bit = 1000;

    void validate() const; // throws ValidationError
    // ceil(window / initiation interval) + margin, enough senders to keep the
    // divider entry stage contended for the whole receiver span
    uint32_t effective_send_divs() const;
};

struct NoiseModel {
    enum class Kind : uint8_t { None, Uniform, Gaussian };
    Kind kind = Kind::None;
    uint64_t lo = 0, hi = 0; // uniform: inclusive jitter bounds
    double sigma = 0.0;      // gaussian: stddev, rounded to integer, clamped at 0

    static NoiseModel none() { return {}; }
    static NoiseModel uniform(uint64_t lo, uint64_t hi);
    static NoiseModel gaussian(double sigma);
    static NoiseModel parse(const std::string& spec); // "none" | "uniform:LO:HI" | "gaussian:SIGMA"
    std::string to_string() const;
};

struct BitSamples {
    uint32_t bit_index = 0; // position in secret_bits
    int bit = 0;            // 0 or 1
    std::vector<uint64_t> samples; // one attack_time per trial, noise applied
};

// Channel program for one bit value. Structure: TimerStart; receiver chain;
// outer branch (trained taken, actually not taken) whose fall-through
// alt-path is TimerStop; in the shadow a secret Load, then the inner branch
// (trained not-taken, actual == bit) followed inline by same-count IntAlu
// filler so ROB pressure is bit-independent; bit=1 re-steers the inner
// branch onto the sender divisions.
Program gen_channel_program(int bit, const ChannelParams& params);

// A generated program together with its contention-free twin: identical
// shape with the transient divisions replaced by same-count ops on an
// unrelated unit, so any attack-time delta isolates divider contention.
struct ScenarioPair {
    Program contended;
    Program baseline;
    CoreConfig config;
};

enum class Fig4Variant { A, B, C };

// Minimal victim/attacker pairs: (A) both ready the same cycle on a fully
// pipelined unit; (B) attacker ready one cycle earlier, fully pipelined
// unit; (C) attacker ready while the victim waits on a dependence, unit
// with a non-pipelined entry stage.
ScenarioPair gen_fig4_scenario(Fig4Variant variant);

// Worked two-stage-divider example: three dependent victim divisions, a
// mispredicted branch, two transient attacker divisions. The baseline twin
// sends its transient pair to the integer unit instead.
ScenarioPair gen_appendix_example();

// Per-trial jitter streams derive from (seed, bit index, trial), so results
// are independent of evaluation order.
class TrialRng {
public:
    TrialRng(uint64_t seed, uint32_t bit_index, uint32_t trial);
    uint64_t next();
    uint64_t next_below(uint64_t bound); // uniform in [0, bound)
    double next_unit();                  // uniform in (0, 1)

private:
    uint64_t state_;
};

uint64_t apply_noise(uint64_t attack_time, const NoiseModel& noise, TrialRng& rng);

// trials_per_bit simulator runs per secret bit; output order follows
// secret_bits. Throws on invalid params or simulator errors.
std::vector<BitSamples> transmit(const ChannelParams& params, const CoreConfig& config,
                                 const NoiseModel& noise, uint64_t seed);

void write_samples_csv(std::ostream& os, const std::vector<BitSamples>& samples);

} // namespace coresim
