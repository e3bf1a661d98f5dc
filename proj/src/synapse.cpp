#include "ncsim/synapse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ncsim::synapse {

void SynapseParams::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("synapse: ") + what);
    };
    require(tau_syn > 0.0 && tau_rec > 0.0 && pulse_width > 0.0,
            "tau_syn, tau_rec and pulse_width must be > 0");
    require(i_tau > 0.0 && g_syn > 0.0, "i_tau and g_syn must be > 0");
    require(d_std >= 0.0, "d_std must be >= 0");
    require(w_max > 0.0, "w_max must be > 0");
    require(w_rest >= 0.0 && w_rest <= w_max, "w_rest must lie in [0, w_max]");
    require(nmda_threshold > 0.0, "nmda_threshold must be > 0");
}

logdomain::FilterParams SynapseParams::filter() const
{
    return logdomain::FilterParams::from_tau(tau_syn, i_tau, g_syn);
}

SynapseState initial_state(const SynapseParams& p, double t0)
{
    SynapseState s;
    s.filter.t_last = t0;
    s.filter.i_out = p.kernel == Kernel::Facilitating ? p.filter().floor() : 0.0;
    s.v_w = p.w_rest;
    s.t_w = t0;
    return s;
}

double recover_weight(double v_w, double w_rest, double dt, double tau_rec)
{
    return w_rest + (v_w - w_rest) * std::exp(-dt / tau_rec);
}

SynapseState std_recovery_step(SynapseState s, double dt,
                               const SynapseParams& p)
{
    s.v_w = recover_weight(s.v_w, p.w_rest, dt, p.tau_rec);
    s.t_w += dt;
    return s;
}

SynapseState inject_pulse(SynapseState s, double v_w, const SynapseParams& p)
{
    const double i_w = logdomain::bias_to_current(v_w);
    if (p.kernel == Kernel::Linear) {
        const double target = p.g_syn * i_w;
        s.filter.i_out += (target - s.filter.i_out) *
                          -std::expm1(-p.pulse_width / p.tau_syn);
    } else {
        const double t = s.filter.t_last;
        s.filter = logdomain::step_nonlinear(s.filter, i_w, p.pulse_width,
                                             p.filter());
        s.filter.t_last = t;
    }
    return s;
}

SynapseState on_pre_spike(SynapseState s, double t, const SynapseParams& p)
{
    if (t < s.filter.t_last || t < s.t_w)
        throw std::invalid_argument("synapse: out-of-order spike at t=" +
                                    std::to_string(t));
    s = std_recovery_step(s, t - s.t_w, p);
    s.t_w = t;
    s = advance(s, t - s.filter.t_last, p);
    s.filter.t_last = t;
    s.v_w = std::max(0.0, s.v_w - p.d_std);
    return inject_pulse(s, s.v_w, p);
}

SynapseState epsc_step(SynapseState s, double dt, const SynapseParams& p)
{
    s.filter.i_out *= std::exp(-dt / p.tau_syn);
    s.filter.t_last += dt;
    return s;
}

SynapseState facilitation_step(SynapseState s, double dt,
                               const SynapseParams& p)
{
    s.filter = logdomain::step_nonlinear(s.filter, 0.0, dt, p.filter());
    return s;
}

SynapseState advance(SynapseState s, double dt, const SynapseParams& p)
{
    if (dt <= 0.0) return s;
    return p.kernel == Kernel::Linear ? epsc_step(s, dt, p)
                                      : facilitation_step(s, dt, p);
}

double nmda_gate(double i_mem_post, double threshold)
{
    const double x = (i_mem_post - threshold) / (0.1 * threshold);
    return 1.0 / (1.0 + std::exp(-x));
}

double driving_force(double i_mem_post, double i_spk_post)
{
    return std::clamp(1.0 - i_mem_post / i_spk_post, 0.0, 1.0);
}

double gated_output(const SynapseState& s, double i_mem_post,
                    const SynapseParams& p, double i_spk_post)
{
    double out = s.filter.i_out;
    if (p.nmda_gated) out *= nmda_gate(i_mem_post, p.nmda_threshold);
    if (p.conductance) out *= driving_force(i_mem_post, i_spk_post);
    return p.sign == Sign::Excitatory ? out : -out;
}

double homeostatic_factor(double rate_estimate, double target_rate,
                          double dt, double adaptation_tau)
{
    if (!(target_rate > 0.0))
        throw std::invalid_argument("homeostasis: target_rate must be > 0");
    return std::exp(-dt / adaptation_tau * (rate_estimate - target_rate) /
                    target_rate);
}

std::vector<SynapseParams> homeostatic_scale(
    std::vector<SynapseParams> synapses, double rate_estimate,
    double target_rate, double dt, double adaptation_tau)
{
    const double k =
        homeostatic_factor(rate_estimate, target_rate, dt, adaptation_tau);
    for (auto& s : synapses) s.g_syn *= k;
    return synapses;
}

}  // namespace ncsim::synapse
