#pragma once

// DPI synapse: pulse-driven EPSC filter with short-term depression of the
// weight voltage, optional facilitation through the full nonlinear DPI
// kernel, NMDA-like voltage gating, conductance-like driving force, and
// homeostatic scaling of the filter gain.

#include <span>
#include <vector>

#include "ncsim/logdomain.hpp"

namespace ncsim::synapse {

enum class Sign { Excitatory, Inhibitory };

enum class Kernel {
    Linear,        // first-order DPI solution, closed-form pulses
    Facilitating,  // full nonlinear DPI equation during and between pulses
};

struct SynapseParams {
    double tau_syn = 10e-3;
    double i_tau = 25e-12;
    double g_syn = 10.0;
    double w_rest = 0.65;  // resting weight voltage
    double w_max = 1.2;
    double d_std = 0.0;    // weight-voltage decrement per pre spike
    double tau_rec = 100e-3;
    double pulse_width = 1e-6;
    double nmda_threshold = 1e-9;
    Sign sign = Sign::Excitatory;
    bool nmda_gated = false;
    bool conductance = false;
    Kernel kernel = Kernel::Linear;

    void validate() const;
    logdomain::FilterParams filter() const;
};

struct SynapseState {
    logdomain::FilterState filter;
    double v_w = 0.0;
    double t_w = 0.0;  // time up to which v_w recovery has been applied

    double i_syn() const { return filter.i_out; }
};

SynapseState initial_state(const SynapseParams& p, double t0 = 0.0);

/// Weight-voltage recovery toward the resting value.
double recover_weight(double v_w, double w_rest, double dt, double tau_rec);

SynapseState std_recovery_step(SynapseState s, double dt,
                               const SynapseParams& p);

/// Charge injected by one input pulse at the current filter time, given the
/// weight voltage.  The pulse is applied as an instantaneous update of the
/// filter state; the filter clock is not advanced.
SynapseState inject_pulse(SynapseState s, double v_w, const SynapseParams& p);

/// Pre-synaptic spike at time t: recover v_w and decay the filter up to t,
/// depress v_w, then inject charge with the depressed weight.  Throws
/// std::invalid_argument for spikes earlier than the synapse clock.
SynapseState on_pre_spike(SynapseState s, double t, const SynapseParams& p);

/// Decay with zero input through the linear kernel.
SynapseState epsc_step(SynapseState s, double dt, const SynapseParams& p);

/// Zero-input interval through the full nonlinear kernel.
SynapseState facilitation_step(SynapseState s, double dt,
                               const SynapseParams& p);

/// Dispatches to epsc_step or facilitation_step by p.kernel.
SynapseState advance(SynapseState s, double dt, const SynapseParams& p);

double nmda_gate(double i_mem_post, double threshold);
double driving_force(double i_mem_post, double i_spk_post);

/// Current delivered to the soma; negative for inhibitory synapses.
double gated_output(const SynapseState& s, double i_mem_post,
                    const SynapseParams& p, double i_spk_post);

/// Common multiplicative factor applied to all afferent gains.
double homeostatic_factor(double rate_estimate, double target_rate,
                          double dt, double adaptation_tau);

std::vector<SynapseParams> homeostatic_scale(
    std::vector<SynapseParams> synapses, double rate_estimate,
    double target_rate, double dt, double adaptation_tau);

}  // namespace ncsim::synapse
