#pragma once

// Populations, synapse slots and connection patterns.  A NetworkSpec is a
// plain value: the declarative parts (populations, connections) plus the
// edges and routing table materialised from them.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncsim/aer.hpp"
#include "ncsim/neuron.hpp"
#include "ncsim/plasticity.hpp"
#include "ncsim/synapse.hpp"

namespace ncsim::network {

class SpecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SynapseSlot {
    std::string name;
    synapse::SynapseParams synapse;
    std::optional<plasticity::PlasticityParams> plasticity;
};

struct PopulationSpec {
    std::string name;
    std::uint32_t size = 1;
    neuron::NeuronParams neuron;
    std::vector<SynapseSlot> slots;

    /// Index of the named slot; throws SpecError if absent.
    std::uint32_t slot_index(const std::string& slot) const;
};

enum class Pattern { AllToAll, OneToOne, Offsets, Explicit };

struct ConnectionSpec {
    std::string src;
    std::string dst;
    Pattern pattern = Pattern::AllToAll;
    std::vector<int> offsets;  // Offsets: dst = src + offset
    bool wrap = false;         // Offsets: ring instead of line
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // Explicit
    double weight = 0.6;  // resting weight voltage of every edge, V
    synapse::Sign sign = synapse::Sign::Excitatory;
    std::string slot;
    bool allow_self = false;

    /// Symmetric nearest-neighbour pattern: offsets +-1 .. +-k.
    static ConnectionSpec nearest_neighbors(std::string src, std::string dst,
                                            int k, double weight,
                                            std::string slot);
};

struct Edge {
    std::uint32_t src_pop = 0;
    std::uint32_t src = 0;
    std::uint32_t dst_pop = 0;
    std::uint32_t dst = 0;
    std::uint32_t slot = 0;
    double weight = 0.0;
};

struct NetworkSpec {
    std::vector<PopulationSpec> populations;
    std::vector<ConnectionSpec> connections;
    std::vector<Edge> edges;
    aer::RoutingTable routing;

    /// Index of the named population; throws SpecError if absent.
    std::uint32_t population_index(const std::string& name) const;
    std::uint32_t total_neurons() const;
    /// Synapse addresses used by edges landing in each population.
    std::vector<std::uint32_t> edge_counts() const;
    aer::AddressSpace address_space() const;
    bool empty() const { return populations.empty(); }
    void validate() const;
};

NetworkSpec add_population(NetworkSpec spec, PopulationSpec pop);

/// Edges created by a connection, in deterministic order.
std::vector<Edge> expand(const NetworkSpec& spec, const ConnectionSpec& conn);

/// Materialises the connection into edges and routing entries.
NetworkSpec connect(NetworkSpec spec, const ConnectionSpec& conn);

struct SwtaOptions {
    neuron::NeuronParams exc_neuron;
    neuron::NeuronParams inh_neuron;
    synapse::SynapseParams exc_synapse;
    synapse::SynapseParams inh_synapse;
    synapse::SynapseParams input_synapse;
    bool ring = false;
};

SwtaOptions default_swta_options();

/// Excitatory line (or ring) with first- and second-neighbour excitation,
/// all-to-all excitation of a global inhibitory pool, all-to-all pool
/// inhibition of the excitatory layer, and pool self-inhibition.
/// Populations "exc" and "inh"; slots "input", "exc", "inh".
NetworkSpec build_swta(std::uint32_t n_exc, std::uint32_t n_inh, double w1,
                       double w2, double w_ei, double w_ie, double w_ii,
                       const SwtaOptions& opt = default_swta_options());

struct FsmOptions {
    SwtaOptions swta = default_swta_options();
    std::uint32_t n_inh = 4;
    double w_ii = 0.0;  // 0 disables pool self-inhibition
};

/// State populations "state0".."stateN-1" with all-to-all recurrent
/// excitation and a shared inhibitory pool "inh".
NetworkSpec build_fsm(std::uint32_t n_per_state, std::uint32_t n_states,
                      double w_self, double w_ie, double w_ei,
                      const FsmOptions& opt = FsmOptions{});

// JSON (see docs/network-schema.md).
nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_from_json(const nlohmann::json& j);

nlohmann::json to_json(const neuron::NeuronParams& p);
nlohmann::json to_json(const synapse::SynapseParams& p);
nlohmann::json to_json(const plasticity::PlasticityParams& p);
/// Overlay the fields present in j onto p; unknown keys throw SpecError.
void update_from_json(neuron::NeuronParams& p, const nlohmann::json& j);
void update_from_json(synapse::SynapseParams& p, const nlohmann::json& j);
void update_from_json(plasticity::PlasticityParams& p, const nlohmann::json& j);

}  // namespace ncsim::network
