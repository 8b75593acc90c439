// coresim CLI -- scenario runner, channel transmitter, sensitivity sweep,
// and taxonomy classifier. Exit codes: 0 ok, 1 runtime error, 2 usage or
// config error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "coresim/analysis.hpp"
#include "coresim/channel.hpp"
#include "coresim/diagram.hpp"
#include "coresim/model.hpp"
#include "coresim/serialize.hpp"
#include "coresim/sim.hpp"

namespace {

using namespace coresim;
namespace fs = std::filesystem;

struct CommonOpts {
    std::string out_dir = "out";
    uint64_t seed = 0;
};

void write_artifact(const fs::path& path, uint64_t seed, const CoreConfig& config,
                    const std::function<void(std::ostream&)>& body) {
    fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw SimError("cannot open output file " + path.string());
    os << "# v=" << kSchemaVersion << " seed=" << seed << " config=" << to_hex(config_hash(config))
       << "\n";
    body(os);
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot read file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

ExperimentConfig load_experiment(const std::string& path) {
    return parse_experiment_config(read_file(path));
}

void apply_policy_override(CoreConfig& config, const std::string& policy) {
    if (policy.empty()) return;
    if (policy == "oldest-first") {
        config.policy = SchedulerPolicy::OldestFirstReady;
    } else if (policy == "strict-in-order") {
        config.policy = SchedulerPolicy::StrictInOrder;
    } else {
        throw ValidationError("unknown policy '" + policy +
                              "'; expected oldest-first or strict-in-order");
    }
}

// --- run-scenario -----------------------------------------------------------

struct ScenarioResult {
    Program contended;
    Program baseline;
    CoreConfig config;
};

ScenarioResult build_scenario(const std::string& name, uint32_t recv_divs,
                              std::optional<uint32_t> send_divs, const std::string& preset) {
    auto from_pair = [](ScenarioPair p) {
        return ScenarioResult{std::move(p.contended), std::move(p.baseline), std::move(p.config)};
    };
    if (name == "fig4a") return from_pair(gen_fig4_scenario(Fig4Variant::A));
    if (name == "fig4b") return from_pair(gen_fig4_scenario(Fig4Variant::B));
    if (name == "fig4c") return from_pair(gen_fig4_scenario(Fig4Variant::C));
    if (name == "appendix") return from_pair(gen_appendix_example());
    if (name == "channel0" || name == "channel1") {
        ChannelParams params;
        params.n_recv_divs = recv_divs;
        params.n_send_divs = send_divs;
        params.fu_preset = preset;
        const int bit = name == "channel1" ? 1 : 0;
        ScenarioResult r;
        r.contended = gen_channel_program(bit, params);
        r.baseline = gen_channel_program(0, params);
        r.config = make_core_config(preset);
        return r;
    }
    throw ValidationError("unknown scenario '" + name +
                          "'; valid: fig4a fig4b fig4c appendix channel0 channel1");
}

int cmd_run_scenario(const std::string& name, uint32_t recv_divs,
                     std::optional<uint32_t> send_divs, const std::string& preset,
                     const std::string& policy, std::optional<uint32_t> rob,
                     const CommonOpts& opts) {
    ScenarioResult sc = build_scenario(name, recv_divs, send_divs, preset);
    apply_policy_override(sc.config, policy);
    if (rob) sc.config.rob_size = *rob;

    Trace contended = run(sc.contended, sc.config);
    Trace baseline = run(sc.baseline, sc.config);
    if (!contended.attack_time || !baseline.attack_time)
        throw SimError("scenario did not produce an attack time");

    const fs::path dir(opts.out_dir);
    write_artifact(dir / (name + "_trace.csv"), opts.seed, sc.config,
                   [&](std::ostream& os) { write_trace_csv(os, contended); });
    write_artifact(dir / (name + "_baseline_trace.csv"), opts.seed, sc.config,
                   [&](std::ostream& os) { write_trace_csv(os, baseline); });
    {
        std::ofstream os(dir / (name + "_diagram.txt"), std::ios::binary);
        os << render_diagram(contended);
    }
    {
        std::ofstream os(dir / (name + "_baseline_diagram.txt"), std::ios::binary);
        os << render_diagram(baseline);
    }

    const int64_t delta = static_cast<int64_t>(*contended.attack_time) -
                          static_cast<int64_t>(*baseline.attack_time);
    std::cout << "scenario=" << name << " attack_time=" << *contended.attack_time
              << " baseline=" << *baseline.attack_time << " delta=" << (delta >= 0 ? "+" : "")
              << delta << " cycles\n";
    return 0;
}

// --- transmit ----------------------------------------------------------------

int cmd_transmit(const ExperimentConfig& cfg) {
    if (!cfg.seed)
        throw ValidationError("transmit requires a seed (--seed or config field 'seed')");
    cfg.channel.validate();

    std::vector<BitSamples> samples = transmit(cfg.channel, cfg.core, cfg.noise, *cfg.seed);
    std::vector<uint64_t> pool0, pool1;
    for (const auto& bs : samples)
        for (uint64_t s : bs.samples) (bs.bit == 0 ? pool0 : pool1).push_back(s);
    if (pool0.empty() || pool1.empty())
        throw ValidationError("secret_bits must contain both 0s and 1s to calibrate");

    const double threshold = calibrate(pool0, pool1);
    const ChannelStats stats = rates(samples, threshold, cfg.clock_ghz * 1e9);

    const fs::path dir(cfg.outputs);
    write_artifact(dir / "samples.csv", *cfg.seed, cfg.core,
                   [&](std::ostream& os) { write_samples_csv(os, samples); });
    write_artifact(dir / "stats.csv", *cfg.seed, cfg.core,
                   [&](std::ostream& os) { write_stats_csv(os, stats); });
    write_artifact(dir / "hist_bit0.csv", *cfg.seed, cfg.core,
                   [&](std::ostream& os) { write_histogram_csv(os, histogram(pool0, 1)); });
    write_artifact(dir / "hist_bit1.csv", *cfg.seed, cfg.core,
                   [&](std::ostream& os) { write_histogram_csv(os, histogram(pool1, 1)); });

    std::cout << "bits=" << samples.size() << " trials_per_bit=" << cfg.channel.trials_per_bit
              << " threshold=" << threshold << " error_rate=" << stats.error_rate
              << " bits_per_cycle=" << stats.bits_per_cycle << " transfer_kbps=" << stats.kbps
              << "\n";
    return 0;
}

// --- sweep ---------------------------------------------------------------------

int cmd_sweep(const ExperimentConfig& cfg, const std::vector<uint32_t>& lengths) {
    if (!cfg.seed)
        throw ValidationError("sweep requires a seed (--seed or config field 'seed')");
    std::vector<SweepRow> rows =
        sweep_receiver_length(lengths, cfg.channel, cfg.core, cfg.noise, *cfg.seed);

    const fs::path dir(cfg.outputs);
    write_artifact(dir / "sweep.csv", *cfg.seed, cfg.core,
                   [&](std::ostream& os) { write_sweep_csv(os, rows); });

    for (const auto& r : rows)
        std::cout << "n_divs=" << r.n_divs << " median0=" << r.median0 << " median1=" << r.median1
                  << " diff=" << r.diff << " bits_per_cycle=" << r.bits_per_cycle
                  << " error_rate=" << r.error_rate << "\n";
    std::cout << "diff_non_decreasing=" << (diff_non_decreasing(rows) ? "yes" : "no")
              << " transfer_non_increasing=" << (transfer_non_increasing(rows) ? "yes" : "no")
              << "\n";
    return 0;
}

// --- classify ---------------------------------------------------------------

int cmd_classify(const ExperimentConfig& cfg, const std::string& scenario) {
    Program program;
    CoreConfig config = cfg.core;
    if (scenario == "channel1" || scenario == "channel0") {
        program = gen_channel_program(scenario == "channel1" ? 1 : 0, cfg.channel);
    } else if (scenario == "fig4a" || scenario == "fig4b" || scenario == "fig4c" ||
               scenario == "appendix") {
        ScenarioResult sc = build_scenario(scenario, cfg.channel.n_recv_divs,
                                           cfg.channel.n_send_divs, cfg.channel.fu_preset);
        program = sc.contended;
        config = sc.config;
    } else {
        throw ValidationError("unknown scenario '" + scenario + "' for classify");
    }
    Taxonomy tax = classify_simulated(program, config);
    std::cout << tax.to_string() << "\n";
    return 0;
}

std::vector<uint32_t> parse_lengths(const std::string& csv) {
    std::vector<uint32_t> out;
    std::stringstream ss(csv);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            const long v = std::stol(part);
            if (v <= 0) throw std::invalid_argument("nonpositive");
            out.push_back(static_cast<uint32_t>(v));
        } catch (const std::logic_error&) {
            throw ValidationError("bad length '" + part + "' in --lengths");
        }
    }
    if (out.empty()) throw ValidationError("--lengths is empty");
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coresim: cycle-level out-of-order core simulator and divider-contention "
                 "covert channel toolkit"};
    app.require_subcommand(1);

    // run-scenario
    std::string sc_name, sc_policy, sc_preset = "skylake_divsd";
    uint32_t sc_recv = 12;
    std::optional<uint32_t> sc_send, sc_rob;
    CommonOpts sc_opts;
    auto* sc = app.add_subcommand("run-scenario",
                                  "Run a named scenario and report the attack-time delta");
    sc->add_option("name", sc_name, "fig4a|fig4b|fig4c|appendix|channel0|channel1")->required();
    sc->add_option("--recv-divs", sc_recv, "receiver chain length (channel scenarios)");
    sc->add_option("--send-divs", sc_send, "sender burst length (default: sized to the window)");
    sc->add_option("--preset", sc_preset, "divider preset (channel scenarios)");
    sc->add_option("--policy", sc_policy, "oldest-first|strict-in-order");
    sc->add_option("--rob", sc_rob, "override ROB size");
    sc->add_option("--out", sc_opts.out_dir, "output directory");
    sc->add_option("--seed", sc_opts.seed, "seed recorded in artifact headers");

    // transmit
    std::string tx_config, tx_bits, tx_bits_file, tx_noise, tx_out;
    std::optional<uint32_t> tx_trials;
    std::optional<uint64_t> tx_seed;
    auto* tx = app.add_subcommand("transmit", "Send secret bits over the simulated channel");
    tx->add_option("--config", tx_config, "experiment config JSON")->required();
    tx->add_option("--bits", tx_bits, "secret bit string, overrides config");
    tx->add_option("--bits-file", tx_bits_file, "file containing the secret bit string");
    tx->add_option("--trials", tx_trials, "trials per bit, overrides config");
    tx->add_option("--noise", tx_noise, "none|uniform:LO:HI|gaussian:SIGMA, overrides config");
    tx->add_option("--seed", tx_seed, "PRNG seed, overrides config");
    tx->add_option("--out", tx_out, "output directory, overrides config");

    // sweep
    std::string sw_config, sw_lengths = "3,6,9,12,15,24,48,72", sw_policy, sw_out;
    std::optional<uint64_t> sw_seed;
    auto* sw = app.add_subcommand("sweep", "Sensitivity sweep over receiver chain lengths");
    sw->add_option("--config", sw_config, "experiment config JSON")->required();
    sw->add_option("--lengths", sw_lengths, "comma-separated receiver lengths");
    sw->add_option("--policy", sw_policy, "oldest-first|strict-in-order override");
    sw->add_option("--seed", sw_seed, "PRNG seed, overrides config");
    sw->add_option("--out", sw_out, "output directory, overrides config");

    // classify
    std::string cl_config, cl_scenario = "channel1";
    auto* cl = app.add_subcommand("classify", "Report the attack taxonomy of a scenario");
    cl->add_option("--config", cl_config, "experiment config JSON")->required();
    cl->add_option("--scenario", cl_scenario, "scenario to classify (default channel1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (sc->parsed())
            return cmd_run_scenario(sc_name, sc_recv, sc_send, sc_preset, sc_policy, sc_rob,
                                    sc_opts);
        if (tx->parsed()) {
            ExperimentConfig cfg = load_experiment(tx_config);
            if (!tx_bits.empty()) cfg.channel.secret_bits = tx_bits;
            if (!tx_bits_file.empty()) {
                std::string bits = read_file(tx_bits_file);
                while (!bits.empty() && (bits.back() == '\n' || bits.back() == '\r'))
                    bits.pop_back();
                cfg.channel.secret_bits = bits;
            }
            if (tx_trials) cfg.channel.trials_per_bit = *tx_trials;
            if (!tx_noise.empty()) cfg.noise = NoiseModel::parse(tx_noise);
            if (tx_seed) cfg.seed = *tx_seed;
            if (!tx_out.empty()) cfg.outputs = tx_out;
            return cmd_transmit(cfg);
        }
        if (sw->parsed()) {
            ExperimentConfig cfg = load_experiment(sw_config);
            apply_policy_override(cfg.core, sw_policy);
            if (sw_seed) cfg.seed = *sw_seed;
            if (!sw_out.empty()) cfg.outputs = sw_out;
            return cmd_sweep(cfg, parse_lengths(sw_lengths));
        }
        if (cl->parsed()) {
            ExperimentConfig cfg = load_experiment(cl_config);
            return cmd_classify(cfg, cl_scenario);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
