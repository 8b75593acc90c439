// coresim -- JSON schema (v1) for programs, core configs and experiment files

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "coresim/channel.hpp"
#include "coresim/model.hpp"

namespace coresim {

inline constexpr int kSchemaVersion = 1;

std::string emit_program(const Program& program);
Program parse_program(const std::string& json_text);

std::string emit_core_config(const CoreConfig& config);
CoreConfig parse_core_config(const std::string& json_text);

// Experiment file consumed by the CLI: core (preset name or inline config),
// channel parameters, noise model, seed, output directory.
struct ExperimentConfig {
    CoreConfig core;
    std::string core_preset; // empty when core was given inline
    ChannelParams channel;
    NoiseModel noise;
    std::optional<uint64_t> seed;
    std::string outputs = "out";
    double clock_ghz = 3.0; // nominal, for KB/s reporting only
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string emit_experiment_config(const ExperimentConfig& config);

// Stable 64-bit FNV-1a over the canonical JSON dump; embedded in artifact
// headers so outputs are traceable to their exact configuration.
uint64_t config_hash(const CoreConfig& config);
std::string to_hex(uint64_t v);

// Core configuration presets addressable by name in experiment files:
// "skylake" (default OoO core), "strict_in_order", "fully_pipelined".
CoreConfig core_config_preset(const std::string& name);

} // namespace coresim
