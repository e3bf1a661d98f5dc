#pragma once

// Canned experiments.  Each preset has a JSON object of default
// parameters; a run overlays caller overrides (unknown keys and type
// changes are rejected), runs one or more simulations and condenses them
// into a versioned summary.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncsim/engine.hpp"
#include "ncsim/network.hpp"

namespace ncsim::presets {

inline constexpr const char* kSummarySchema = "ncsim.summary/1";

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PresetInfo {
    std::string id;
    std::string description;
};

const std::vector<PresetInfo>& catalog();
bool is_preset(const std::string& id);

nlohmann::json default_params(const std::string& id);
/// Defaults with overrides applied; errors name the offending key path.
nlohmann::json merge_params(const std::string& id, const nlohmann::json& overrides);

struct RunOptions {
    std::uint64_t seed = 1;
    int threads = 0;
    engine::KernelKind kernel = engine::KernelKind::Parallel;
    nlohmann::json params = nlohmann::json::object();
};

struct Run {
    std::string name;
    network::NetworkSpec network;
    engine::SpikeRecord record;
};

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct Artifacts {
    nlohmann::json summary;
    std::vector<Run> runs;
    std::vector<Table> tables;
    double rate_window = 0.1;
};

Artifacts run_preset(const std::string& id, const RunOptions& opt);

/// Summary scaffold shared with free-form experiments; fills in counters,
/// conservation, threads and warnings from the runs.
void finalize_summary(Artifacts& a, const std::string& experiment,
                      std::uint64_t seed, const nlohmann::json& params,
                      nlohmann::json metrics);

/// Writes every artifact into dir (which must not exist yet):
/// spikes_<run>.csv, traces_<run>.csv, rates_<run>.csv, events_<run>.csv
/// when events were recorded, routing_<run>.txt, <table>.csv and
/// summary.json.
void write_artifacts(const Artifacts& a, const std::filesystem::path& dir);

// Analysis helpers, exposed for tests.
struct IsiStats {
    std::size_t n = 0;
    double mean = 0.0;
    double cv = 0.0;
    double lag1 = 0.0;  // autocorrelation of successive intervals
};
IsiStats isi_stats(const std::vector<double>& spike_times, double t_from = 0.0);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct ExpFit {
    double amplitude = 0.0;
    double rate = 0.0;  // y ~ amplitude * exp(-rate * x)
    double r2 = 0.0;
};
/// Least squares in the original (not log) domain.
ExpFit exp_decay_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ncsim::presets
