#pragma once

// Experiment files.  Either a preset reference
//   {"preset": "fig6-std", "seed": 3, "params": {...}}
// or a free-form experiment with an inline (or file) network, simulation
// settings, stimuli and current steps.  See docs/network-schema.md.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncsim/engine.hpp"
#include "ncsim/network.hpp"
#include "ncsim/presets.hpp"

namespace ncsim::config {

using presets::ConfigError;

inline constexpr const char* kExperimentSchema = "ncsim.experiment/1";
inline constexpr const char* kMetaSchema = "ncsim.meta/1";

struct Experiment {
    std::string name;
    std::string preset;  // empty for free-form experiments
    std::uint64_t seed = 1;
    nlohmann::json params = nlohmann::json::object();

    network::NetworkSpec network;
    engine::SimConfig sim;
    std::vector<engine::Stimulus> stimuli;
    std::vector<engine::CurrentStep> currents;
    double rate_window = 0.1;

    /// The parsed document with the seed filled in; what the hash covers.
    nlohmann::json document;
    std::filesystem::path base_dir;
    std::string source;
};

/// base_dir resolves relative file references inside the document.
Experiment parse_experiment(std::string_view text,
                            const std::filesystem::path& base_dir = {},
                            const std::string& source = "<config>");
Experiment load_experiment(const std::filesystem::path& path);

/// Rebuilds seed-dependent parts (Poisson stimuli) for a new seed.
Experiment with_seed(const Experiment& e, std::uint64_t seed);

/// Full check: presets get their parameters merged, free-form experiments
/// get a simulator built (but not run).
void validate_experiment(const Experiment& e);

presets::Artifacts run_experiment(const Experiment& e, int threads = 0,
                                  engine::KernelKind kernel = engine::KernelKind::Parallel);

std::uint64_t fnv1a64(std::string_view bytes);
std::string config_hash(const Experiment& e);

nlohmann::json metadata(const Experiment& e, const presets::Artifacts& a);

}  // namespace ncsim::config
