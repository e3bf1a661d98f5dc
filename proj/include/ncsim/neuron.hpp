#pragma once

// Adaptive exponential integrate-and-fire neuron built from two DPI
// filters: the membrane leak filter with current-mode positive feedback,
// and a slow after-hyperpolarisation filter for spike-frequency adaptation.

#include <optional>
#include <utility>
#include <vector>

namespace ncsim::neuron {

enum class MembraneMode {
    Full,     // leak inflation by I_ahp and the I_th/I_mem term retained
    Reduced,  // first-order linear core plus feedback
};

struct NeuronParams {
    double tau_mem = 20e-3;
    double i_tau = 5e-12;
    double i_th = 50e-12;
    double fb_i_a0 = 50e-15;
    double fb_i_delta = 0.5e-9;
    double i_spk = 5e-9;
    double i_reset = 0.0;
    double t_ref = 2e-3;
    double tau_ahp = 100e-3;
    double g_ahp = 0.0;
    double i_ca_pulse = 0.0;
    double t_pulse = 1e-3;
    MembraneMode mode = MembraneMode::Full;

    double gain() const { return i_th / i_tau; }
    /// Lower bound of i_mem (the log-domain floor of the leak DPI).
    double floor() const;
    /// Post-spike membrane current, never below floor().
    double reset_current() const;
    void validate() const;
};

struct NeuronState {
    double i_mem = 0.0;
    double i_ahp = 0.0;
    double refractory_until = -1.0;
    std::optional<double> last_spike_time;
};

NeuronState initial_state(const NeuronParams& p);

/// Positive-feedback current (I_a/I_tau)(I_mem + I_th) with
/// I_a = fb_i_a0 exp(I_mem / fb_i_delta); saturated above i_spk.
double feedback_current(double i_mem, const NeuronParams& p);

/// Advances the membrane over [t, t + dt] for constant input current.
/// Refractory intervals pin i_mem at the reset current.
NeuronState membrane_step(NeuronState s, double i_in, double t, double dt,
                          const NeuronParams& p);

std::pair<NeuronState, bool> check_spike_and_reset(NeuronState s,
                                                   double t_now,
                                                   const NeuronParams& p);

/// Exact update of the adaptation filter over [t, t + dt]; the drive is a
/// rectangular pulse of width t_pulse following each spike.
NeuronState adaptation_step(NeuronState s, double t, double dt,
                            const NeuronParams& p);

/// One full step: membrane, adaptation, then spike detection at t + dt.
/// Returns true if the neuron spiked at t + dt.
bool step(NeuronState& s, double i_in, double t, double dt,
          const NeuronParams& p);

struct RatePoint {
    double i_in;
    double rate;
};

/// Steady-state firing rate per input current, measured from the
/// inter-spike intervals of the second half of a run of the given length.
std::vector<RatePoint> fi_curve(const std::vector<double>& i_in_grid,
                                double duration, const NeuronParams& p,
                                double dt = 1e-4);

/// Spike times of a single neuron under constant input.
std::vector<double> spike_times(double i_in, double duration,
                                const NeuronParams& p, double dt = 1e-4);

}  // namespace ncsim::neuron
