#include "coresim/channel.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace coresim {

void ChannelParams::validate() const {
    if (n_recv_divs < 1)
        throw ValidationError("n_recv_divs must be >= 1 (no speculation window otherwise)");
    if (trials_per_bit < 1) throw ValidationError("trials_per_bit must be >= 1");
    if (secret_bits.empty()) throw ValidationError("secret_bits must be nonempty");
    for (char c : secret_bits)
        if (c != '0' && c != '1')
            throw ValidationError("secret_bits may contain only '0' and '1'");
    preset_fu(fu_preset); // throws on unknown preset
}

uint32_t ChannelParams::effective_send_divs() const {
    if (n_send_divs) return *n_send_divs;
    FunctionalUnitSpec fu = preset_fu(fu_preset);
    uint64_t window = static_cast<uint64_t>(n_recv_divs) * fu.total_latency();
    uint64_t ii = fu.initiation_interval();
    return static_cast<uint32_t>((window + ii - 1) / ii + 4);
}

NoiseModel NoiseModel::uniform(uint64_t lo, uint64_t hi) {
    if (lo > hi) throw ValidationError("uniform noise: lo must be <= hi");
    NoiseModel n;
    n.kind = Kind::Uniform;
    n.lo = lo;
    n.hi = hi;
    return n;
}

NoiseModel NoiseModel::gaussian(double sigma) {
    if (sigma < 0.0) throw ValidationError("gaussian noise: sigma must be >= 0");
    NoiseModel n;
    n.kind = Kind::Gaussian;
    n.sigma = sigma;
    return n;
}

NoiseModel NoiseModel::parse(const std::string& spec) {
    if (spec == "none") return none();
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string part;
        while (std::getline(ss, part, ':')) parts.push_back(part);
        return parts;
    };
    std::vector<std::string> parts = split(spec);
    try {
        if (parts.size() == 3 && parts[0] == "uniform")
            return uniform(std::stoull(parts[1]), std::stoull(parts[2]));
        if (parts.size() == 2 && parts[0] == "gaussian") return gaussian(std::stod(parts[1]));
    } catch (const std::logic_error&) {
        // fall through to the error below
    }
    throw ValidationError("bad noise spec '" + spec +
                          "'; expected none | uniform:LO:HI | gaussian:SIGMA");
}

std::string NoiseModel::to_string() const {
    switch (kind) {
        case Kind::None: return "none";
        case Kind::Uniform:
            return "uniform:" + std::to_string(lo) + ":" + std::to_string(hi);
        case Kind::Gaussian: {
            std::ostringstream os;
            os << "gaussian:" << sigma;
            return os.str();
        }
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Generators

Program gen_channel_program(int bit, const ChannelParams& params) {
    params.validate();
    if (bit != 0 && bit != 1) throw ValidationError("bit must be 0 or 1");
    const uint32_t n_recv = params.n_recv_divs;
    const uint32_t n_send = params.effective_send_divs();

    std::vector<OpSpec> ops;
    ops.push_back(OpSpec::timer_start());
    for (uint32_t i = 0; i < n_recv; i++)
        ops.push_back(OpSpec::fp_div(i == 0 ? std::vector<uint32_t>{}
                                            : std::vector<uint32_t>{i}));
    // outer branch: trained taken so the shadow below dispatches; actually
    // falls through to TimerStop once the receiver chain resolves it
    ops.push_back(OpSpec::branch(true, false, {n_recv}, {OpSpec::timer_stop()}));
    ops.push_back(OpSpec::load()); // secret bit, register/L1 resident
    // inner branch: trained not-taken; a 1 bit re-steers onto the senders
    std::vector<OpSpec> senders;
    for (uint32_t i = 0; i < n_send; i++) senders.push_back(OpSpec::fp_div());
    ops.push_back(OpSpec::branch(false, bit == 1, {n_recv + 2}, std::move(senders)));
    // not-taken path: same uop count on a unit the receiver never touches,
    // keeping ROB pressure independent of the bit
    for (uint32_t i = 0; i < n_send; i++) ops.push_back(OpSpec::int_alu());

    return build_program(ops, "channel_bit" + std::to_string(bit));
}

namespace {

ScenarioPair make_pair(std::vector<OpSpec> ops, size_t attacker_at, size_t attacker_count,
                       OpClass baseline_class, CoreConfig config, const std::string& label) {
    std::vector<OpSpec> base_ops = ops;
    for (size_t i = 0; i < attacker_count; i++) {
        OpSpec& slot = base_ops[attacker_at + i];
        slot = baseline_class == OpClass::IntAlu ? OpSpec::int_alu(slot.deps)
                                                 : OpSpec::fp_mul(slot.deps);
    }
    ScenarioPair pair;
    pair.contended = build_program(ops, label);
    pair.baseline = build_program(base_ops, label + "_baseline");
    pair.config = std::move(config);
    return pair;
}

} // namespace

ScenarioPair gen_fig4_scenario(Fig4Variant variant) {
    switch (variant) {
        case Fig4Variant::A: {
            // producer makes the victim ready the same cycle the attacker is;
            // the age-ordered scheduler picks the older victim
            std::vector<OpSpec> ops;
            ops.push_back(OpSpec::timer_start());
            ops.push_back(OpSpec::fp_div());          // speculation window
            ops.push_back(OpSpec::int_alu());         // victim's producer
            ops.push_back(OpSpec::fp_mul({2}));       // victim
            ops.push_back(OpSpec::branch(true, false, {1}, {OpSpec::timer_stop()}));
            ops.push_back(OpSpec::fp_mul());          // attacker (transient)
            return make_pair(std::move(ops), 5, 1, OpClass::IntAlu,
                             make_core_config("skylake_divsd"), "fig4a");
        }
        case Fig4Variant::B: {
            // two-deep producer chain: the attacker turns ready one cycle
            // before the victim but the pipelined unit absorbs both
            std::vector<OpSpec> ops;
            ops.push_back(OpSpec::timer_start());
            ops.push_back(OpSpec::fp_div());
            ops.push_back(OpSpec::int_alu());
            ops.push_back(OpSpec::int_alu({2}));
            ops.push_back(OpSpec::fp_mul({3}));       // victim
            ops.push_back(OpSpec::branch(true, false, {1}, {OpSpec::timer_stop()}));
            ops.push_back(OpSpec::fp_mul());          // attacker
            return make_pair(std::move(ops), 6, 1, OpClass::IntAlu,
                             make_core_config("skylake_divsd"), "fig4b");
        }
        case Fig4Variant::C: {
            // non-pipelined entry stage: the attacker slips in while the
            // victim waits on its producer and blocks it out of the stage
            std::vector<OpSpec> ops;
            ops.push_back(OpSpec::timer_start());
            ops.push_back(OpSpec::fp_div());          // victim's producer
            ops.push_back(OpSpec::fp_div({1}));       // victim
            ops.push_back(OpSpec::branch(true, false, {2}, {OpSpec::timer_stop()}));
            ops.push_back(OpSpec::fp_div());          // attacker
            return make_pair(std::move(ops), 4, 1, OpClass::IntAlu,
                             make_core_config("appendix_unit"), "fig4c");
        }
    }
    throw ValidationError("unknown fig4 variant");
}

ScenarioPair gen_appendix_example() {
    std::vector<OpSpec> ops;
    ops.push_back(OpSpec::timer_start());
    ops.push_back(OpSpec::fp_div());
    ops.push_back(OpSpec::fp_div({1}));
    ops.push_back(OpSpec::fp_div({2}));
    ops.push_back(OpSpec::branch(true, false, {3}, {OpSpec::timer_stop()}));
    ops.push_back(OpSpec::fp_div()); // transient attackers, independent of each other
    ops.push_back(OpSpec::fp_div());
    return make_pair(std::move(ops), 5, 2, OpClass::IntAlu, make_core_config("appendix_unit"),
                     "appendix");
}

// ---------------------------------------------------------------------------
// Transmission

namespace {

uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

} // namespace

TrialRng::TrialRng(uint64_t seed, uint32_t bit_index, uint32_t trial) {
    state_ = seed;
    state_ = mix64(state_ + kGolden * (static_cast<uint64_t>(bit_index) + 1));
    state_ = mix64(state_ + kGolden * (static_cast<uint64_t>(trial) + 1));
}

uint64_t TrialRng::next() {
    state_ += kGolden;
    return mix64(state_);
}

uint64_t TrialRng::next_below(uint64_t bound) { return bound == 0 ? 0 : next() % bound; }

double TrialRng::next_unit() {
    return (static_cast<double>(next() >> 11) + 1.0) / 9007199254740993.0; // (0, 1]
}

uint64_t apply_noise(uint64_t attack_time, const NoiseModel& noise, TrialRng& rng) {
    switch (noise.kind) {
        case NoiseModel::Kind::None:
            return attack_time;
        case NoiseModel::Kind::Uniform:
            return attack_time + noise.lo + rng.next_below(noise.hi - noise.lo + 1);
        case NoiseModel::Kind::Gaussian: {
            double u1 = rng.next_unit();
            double u2 = rng.next_unit();
            double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
            long long jitter = std::llround(noise.sigma * z);
            if (jitter < 0) jitter = 0; // additive jitter; samples never drop below the floor
            return attack_time + static_cast<uint64_t>(jitter);
        }
    }
    return attack_time;
}

std::vector<BitSamples> transmit(const ChannelParams& params, const CoreConfig& config,
                                 const NoiseModel& noise, uint64_t seed) {
    params.validate();
    std::vector<BitSamples> out;
    out.reserve(params.secret_bits.size());
    for (uint32_t i = 0; i < params.secret_bits.size(); i++) {
        const int bit = params.secret_bits[i] == '1' ? 1 : 0;
        Program program = gen_channel_program(bit, params);
        BitSamples bs;
        bs.bit_index = i;
        bs.bit = bit;
        bs.samples.reserve(params.trials_per_bit);
        for (uint32_t trial = 0; trial < params.trials_per_bit; trial++) {
            Trace trace = run(program, config);
            if (!trace.attack_time)
                throw SimError("channel program finished without both timers retiring");
            TrialRng rng(seed, i, trial);
            bs.samples.push_back(apply_noise(*trace.attack_time, noise, rng));
        }
        out.push_back(std::move(bs));
    }
    return out;
}

void write_samples_csv(std::ostream& os, const std::vector<BitSamples>& samples) {
    os << "bit_index,bit,trial,cycles\n";
    for (const auto& bs : samples)
        for (size_t t = 0; t < bs.samples.size(); t++)
            os << bs.bit_index << ',' << bs.bit << ',' << t << ',' << bs.samples[t] << "\n";
}

} // namespace coresim
