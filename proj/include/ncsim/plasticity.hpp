#pragma once

// Spike-driven bi-stable plasticity with calcium-gated stop-learning.
//
// On every pre-synaptic spike the weight jumps up if the post-synaptic
// membrane is above theta_m and calcium lies in (theta_k1, theta_k3), or
// down if the membrane is below theta_m and calcium lies in
// (theta_k1, theta_k2).  Between spikes the weight drifts toward the rail
// on its side of theta_w.

#include <cstdint>

#include "ncsim/neuron.hpp"
#include "ncsim/synapse.hpp"

namespace ncsim::plasticity {

enum class Eligibility { None, Up, Down };

const char* to_string(Eligibility e);

struct PlasticityParams {
    double delta_w = 0.03;
    double drift_rate = 0.1;  // V/s
    double w_lo = 0.45;
    double w_hi = 0.65;
    double theta_w = 0.55;
    double theta_m = 1e-9;
    double tau_ca = 100e-3;
    double j_ca = 1.0;
    double theta_k1 = 0.6;
    double theta_k2 = 3.0;
    double theta_k3 = 7.5;

    void validate() const;

    /// Calcium thresholds at (0.2, 1.0, 2.5) times the mean calcium level
    /// of a regular 30 Hz post-synaptic train.
    void anchor_calcium_thresholds(double anchor_rate = 30.0,
                                   double k1 = 0.2, double k2 = 1.0,
                                   double k3 = 2.5);
};

struct PlasticSynapseState {
    double w = 0.0;

    bool potentiated(const PlasticityParams& p) const { return w > p.theta_w; }
};

/// Exponential decay with tau_ca, plus j_ca when the neuron spiked at the
/// end of the interval.
double calcium_step(double ca, double dt, bool post_spiked,
                    const PlasticityParams& p);

Eligibility eligibility(double i_mem_post, double ca,
                        const PlasticityParams& p);

PlasticSynapseState on_pre_spike_update(PlasticSynapseState s,
                                        double i_mem_post, double ca,
                                        const PlasticityParams& p);

/// Bi-stable refresh.  Exactly at theta_w the drift is downward.
PlasticSynapseState bistable_drift(PlasticSynapseState s, double dt,
                                   const PlasticityParams& p);

// Single plastic synapse onto one neuron whose activity is set by a
// teacher input through a non-plastic synapse; both inputs are Poisson.
struct TransitionProtocol {
    neuron::NeuronParams neuron;
    synapse::SynapseParams teacher;
    synapse::SynapseParams plastic_synapse;
    PlasticityParams plasticity;
    double dt = 1e-4;
};

struct TrialOutcome {
    double w_initial = 0.0;
    double w_final = 0.0;
    bool ltp = false;  // low -> high binary transition
    bool ltd = false;  // high -> low binary transition
    std::size_t pre_spikes = 0;
    std::size_t post_spikes = 0;
    std::size_t up_jumps = 0;
    std::size_t down_jumps = 0;
};

/// One seeded trial; streams are derived from (seed, "pre") and
/// (seed, "teacher").
TrialOutcome run_transition_trial(const TransitionProtocol& proto,
                                  double pre_rate, double teacher_rate,
                                  double duration, double w_initial,
                                  std::uint64_t seed);

/// Teacher input rate for which the mean post-synaptic rate matches
/// target (bisection over a fixed set of calibration seeds), with the
/// plastic input firing at pre_rate from weight w_initial.
double calibrate_teacher_rate(const TransitionProtocol& proto,
                              double target_post_rate, double duration,
                              std::uint64_t seed, double pre_rate = 0.0,
                              double w_initial = -1.0);

/// Fraction of n_trials trials started from w_lo that end potentiated.
double ltp_transition_probability(const TransitionProtocol& proto,
                                  double pre_rate, double post_rate,
                                  double duration, std::size_t n_trials,
                                  std::uint64_t seed);

}  // namespace ncsim::plasticity
