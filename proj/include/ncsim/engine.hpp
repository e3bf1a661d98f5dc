#pragma once

// Fixed-step hybrid simulator.  Neuron and synapse dynamics advance on a
// uniform grid; spikes become address events that pass through a single
// arbiter and the routing table before landing on their target synapses.
//
// Each step:
//   1. apply the pulses due at t_n (fabric deliveries and external
//      stimuli), ordered by (population, synapse address);
//   2. per neuron: sum the synaptic input, advance the neuron, decay its
//      afferent synapses, drift plastic weights, update calcium;
//   3. serially: collect spikes in (population, neuron) order, arbitrate,
//      route, and schedule each delivery on the first grid point at or
//      after its departure time.
// Stage 2 is the only parallel stage and touches per-neuron state only,
// so results do not depend on the thread count.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncsim/aer.hpp"
#include "ncsim/network.hpp"

namespace ncsim::engine {

enum class KernelKind { Serial, Parallel };

struct StimulusChannel {
    std::uint32_t neuron = 0;
    double weight = 0.6;
    std::vector<double> times;  // sorted, >= 0
};

/// External spike input.  Every channel gets its own synapse instance on
/// the target neuron, built from the named slot.  Stimulus pulses bypass
/// the fabric.
struct Stimulus {
    std::string label;
    std::string population;
    std::string slot = "input";
    std::vector<StimulusChannel> channels;
};

/// Constant current added to the synaptic input on [t_start, t_stop).
struct CurrentStep {
    std::string population;
    std::vector<std::uint32_t> neurons;  // empty: whole population
    double amplitude = 0.0;
    double t_start = 0.0;
    double t_stop = 1e300;
};

/// Quantities: i_mem, i_ahp, i_in, ca (per neuron); i_syn, v_w, w (per
/// synapse address, in the index column).
struct TraceSpec {
    std::string quantity;
    std::string population;
    std::uint32_t index = 0;
};

struct SimConfig {
    double dt = 1e-4;
    double t_end = 1.0;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: NCSIM_THREADS, else the OpenMP default
    KernelKind kernel = KernelKind::Parallel;
    aer::ArbiterConfig arbiter;
    std::vector<TraceSpec> traces;
    std::size_t trace_every = 1;
    bool record_events = false;
    /// Synapses whose pulses are logged with the current before and after.
    std::vector<std::pair<std::string, std::uint32_t>> probes;

    void validate() const;
};

struct Spike {
    double t = 0.0;
    std::uint32_t population = 0;
    std::uint32_t neuron = 0;

    bool operator==(const Spike&) const = default;
};

struct TraceSample {
    double t = 0.0;
    std::uint32_t trace = 0;  // index into SimConfig::traces
    double value = 0.0;
};

struct PulseRecord {
    double t = 0.0;
    std::uint32_t population = 0;
    std::uint32_t synapse = 0;
    double i_before = 0.0;
    double i_after = 0.0;
    double weight = 0.0;  // weight voltage used for the pulse

    double amplitude() const { return i_after - i_before; }
};

struct Counters {
    std::uint64_t steps = 0;
    std::uint64_t spikes = 0;
    std::uint64_t events_accepted = 0;
    std::uint64_t events_dropped = 0;
    std::uint64_t deliveries_scheduled = 0;
    std::uint64_t deliveries_applied = 0;
    std::uint64_t stimulus_pulses = 0;
    double max_delay = 0.0;
    std::size_t max_queue_depth = 0;
    std::uint64_t deliveries_queued = 0;  // still pending at the last stop
};

struct SpikeRecord {
    std::vector<std::string> population_names;
    std::vector<Spike> spikes;
    std::vector<TraceSpec> trace_specs;
    std::vector<TraceSample> traces;
    std::vector<aer::Delivery> events;
    std::vector<PulseRecord> pulses;
    Counters counters;
    std::vector<std::string> warnings;
    int threads = 1;
    std::uint64_t seed = 0;
    double dt = 0.0;
    double t_end = 0.0;
};

/// Every spike became an accepted or dropped event, and every accepted
/// event's fan-out was either applied or is still pending.
bool conserved(const SpikeRecord& rec, const network::NetworkSpec& net);

/// NCSIM_THREADS if set and valid, else the OpenMP default.
int resolve_threads(int requested, std::vector<std::string>* warnings = nullptr);

/// Synapse addresses the simulator will give each stimulus channel: per
/// population, after the edge synapses, in stimulus then channel order.
std::vector<std::vector<std::uint32_t>> stimulus_addresses(
    const network::NetworkSpec& net, const std::vector<Stimulus>& stimuli);

class Simulator {
public:
    Simulator(network::NetworkSpec net, SimConfig cfg,
              std::vector<Stimulus> stimuli = {},
              std::vector<CurrentStep> currents = {});

    /// Advances to the first grid point at or after t (clamped to t_end).
    void run_until(double t);
    void run() { run_until(cfg_.t_end); }

    double time() const { return static_cast<double>(step_) * cfg_.dt; }
    std::uint64_t step_index() const { return step_; }

    const SpikeRecord& record() const { return rec_; }
    SpikeRecord take_record();

    const network::NetworkSpec& network() const { return net_; }
    const SimConfig& config() const { return cfg_; }

    /// Synapse address of channel c of stimulus s.
    std::uint32_t stimulus_address(std::size_t s, std::size_t c) const;

    double i_mem(std::uint32_t pop, std::uint32_t neuron) const;
    double calcium(std::uint32_t pop, std::uint32_t neuron) const;
    double synapse_current(std::uint32_t pop, std::uint32_t address) const;
    /// Plastic weight voltage of a synapse; nullopt for non-plastic ones.
    std::optional<double> plastic_weight(std::uint32_t pop,
                                         std::uint32_t address) const;
    std::uint32_t synapse_count(std::uint32_t pop) const;

private:
    struct Syn {
        synapse::SynapseState state;
        synapse::SynapseParams params;
        double decay = 1.0;
        std::uint32_t target = 0;  // global neuron index
        std::int32_t plastic = -1;
    };
    struct Pending {
        std::uint32_t pop;
        std::uint32_t address;
        std::uint8_t source;  // 0 fabric, 1 stimulus
    };

    void build(const std::vector<Stimulus>& stimuli,
               const std::vector<CurrentStep>& currents);
    std::uint32_t add_synapse(std::uint32_t pop, std::uint32_t neuron,
                              std::uint32_t slot, double weight);
    void apply_pulses();
    void update_neurons();
    void update_neuron(std::size_t g, double t);
    void route_spikes();
    void sample_traces();
    double trace_value(const TraceSpec& ts) const;

    network::NetworkSpec net_;
    SimConfig cfg_;
    int threads_ = 1;

    std::vector<std::uint32_t> pop_offset_;
    std::vector<std::uint32_t> neuron_pop_;
    std::vector<neuron::NeuronState> neurons_;
    std::vector<double> calcium_;
    std::vector<double> bias_;  // current injection at the present step
    std::vector<std::uint8_t> spiked_;

    std::vector<Syn> syn_;
    std::vector<std::vector<std::uint32_t>> address_;  // per pop: addr -> syn
    std::vector<std::uint32_t> in_begin_;  // CSR over target neurons
    std::vector<std::uint32_t> in_list_;
    std::vector<plasticity::PlasticSynapseState> plastic_;
    std::vector<const plasticity::PlasticityParams*> plastic_params_;
    std::vector<const plasticity::PlasticityParams*> ca_params_;
    plasticity::PlasticityParams default_plasticity_;

    std::vector<std::vector<std::uint32_t>> stim_address_;
    std::vector<std::pair<std::uint64_t, Pending>> stim_events_;
    std::size_t stim_cursor_ = 0;
    std::vector<CurrentStep> currents_;
    std::vector<std::vector<std::uint32_t>> current_targets_;

    std::map<std::uint64_t, std::vector<Pending>> pending_;
    aer::Arbiter arbiter_;
    std::uint64_t seq_ = 0;
    std::uint64_t step_ = 0;
    std::uint64_t n_end_ = 0;
    std::vector<std::uint8_t> probed_;
    SpikeRecord rec_;
};

/// Mean rate of a population (or of one neuron) over [t0, t1).
double rate_estimate(const SpikeRecord& rec, std::uint32_t pop, double t0,
                     double t1, std::optional<std::uint32_t> neuron = {},
                     std::uint32_t pop_size = 1);

struct RatePoint {
    double t = 0.0;  // window start
    double rate = 0.0;
};

/// Population mean rate over consecutive windows covering [0, t_end).
std::vector<RatePoint> rate_series(const SpikeRecord& rec, std::uint32_t pop,
                                   double window, std::uint32_t pop_size);

/// Spike times of one neuron.
std::vector<double> spike_times_of(const SpikeRecord& rec, std::uint32_t pop,
                                   std::uint32_t neuron);

void write_spikes_csv(std::ostream& out, const SpikeRecord& rec);
void write_traces_csv(std::ostream& out, const SpikeRecord& rec);
void write_events_csv(std::ostream& out, const SpikeRecord& rec);
/// t,population,rate for every population, windows of the given width.
void write_rates_csv(std::ostream& out, const SpikeRecord& rec,
                     const network::NetworkSpec& net, double window);

nlohmann::json counters_json(const Counters& c);

}  // namespace ncsim::engine
