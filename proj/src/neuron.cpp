#include "ncsim/neuron.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ncsim/logdomain.hpp"

namespace ncsim::neuron {

namespace {

void require(bool ok, const char* what)
{
    if (!ok) throw std::invalid_argument(std::string("neuron: ") + what);
}

}  // namespace

double NeuronParams::floor() const
{
    return logdomain::kFloorFraction * i_tau;
}

double NeuronParams::reset_current() const
{
    return std::max(i_reset, floor());
}

void NeuronParams::validate() const
{
    require(tau_mem > 0.0, "tau_mem must be > 0");
    require(tau_ahp > 0.0, "tau_ahp must be > 0");
    require(i_tau > 0.0 && i_th > 0.0, "i_tau and i_th must be > 0");
    require(fb_i_a0 >= 0.0, "fb_i_a0 must be >= 0");
    require(fb_i_delta > 0.0, "fb_i_delta must be > 0");
    require(i_reset >= 0.0, "i_reset must be >= 0");
    require(i_spk > i_reset, "i_spk must exceed i_reset");
    require(t_ref >= 0.0, "t_ref must be >= 0");
    require(g_ahp >= 0.0 && i_ca_pulse >= 0.0,
            "adaptation gain and drive must be >= 0");
    require(t_pulse > 0.0, "t_pulse must be > 0");
}

NeuronState initial_state(const NeuronParams& p)
{
    NeuronState s;
    s.i_mem = p.reset_current();
    return s;
}

double feedback_current(double i_mem, const NeuronParams& p)
{
    if (p.fb_i_a0 == 0.0) return 0.0;
    const double x = std::min(std::max(i_mem, 0.0), p.i_spk);
    const double i_a = p.fb_i_a0 * std::exp(x / p.fb_i_delta);
    return i_a / p.i_tau * (x + p.i_th);
}

NeuronState membrane_step(NeuronState s, double i_in, double t, double dt,
                          const NeuronParams& p)
{
    const double t_end = t + dt;
    if (t_end <= s.refractory_until) {
        s.i_mem = p.reset_current();
        return s;
    }
    double span = dt;
    if (s.refractory_until > t) {
        s.i_mem = p.reset_current();
        span = t_end - s.refractory_until;
    }

    logdomain::RelaxationControl ctl;
    ctl.floor = p.floor();
    const double g = p.gain();
    if (p.mode == MembraneMode::Full) {
        const double leak = 1.0 + s.i_ahp / p.i_tau;
        const double base = g * (i_in - s.i_ahp - p.i_tau);
        auto field = [&](double i) {
            const double k = i / (p.tau_mem * (i + p.i_th));
            return logdomain::Relaxation{
                k * leak, (base + feedback_current(i, p)) / leak};
        };
        s.i_mem = logdomain::integrate_relaxation(s.i_mem, span, field, ctl);
    } else {
        const double base = g * i_in;
        auto field = [&](double i) {
            return logdomain::Relaxation{1.0 / p.tau_mem,
                                         base + feedback_current(i, p)};
        };
        s.i_mem = logdomain::integrate_relaxation(s.i_mem, span, field, ctl);
    }
    return s;
}

std::pair<NeuronState, bool> check_spike_and_reset(NeuronState s,
                                                   double t_now,
                                                   const NeuronParams& p)
{
    if (s.i_mem < p.i_spk) return {s, false};
    s.i_mem = p.reset_current();
    s.refractory_until = t_now + p.t_ref;
    s.last_spike_time = t_now;
    return {s, true};
}

NeuronState adaptation_step(NeuronState s, double t, double dt,
                            const NeuronParams& p)
{
    const double decay_all = std::exp(-dt / p.tau_ahp);
    const double drive = p.g_ahp * p.i_ca_pulse;
    if (!s.last_spike_time || drive == 0.0) {
        s.i_ahp *= decay_all;
        return s;
    }
    const double on = *s.last_spike_time;
    const double off = on + p.t_pulse;
    const double t_end = t + dt;
    const double a = std::clamp(on, t, t_end);
    const double b = std::clamp(off, t, t_end);
    // [t, a) no drive, [a, b) drive, [b, t_end) no drive
    double i = s.i_ahp * std::exp(-(a - t) / p.tau_ahp);
    i = drive + (i - drive) * std::exp(-(b - a) / p.tau_ahp);
    i *= std::exp(-(t_end - b) / p.tau_ahp);
    s.i_ahp = i;
    return s;
}

bool step(NeuronState& s, double i_in, double t, double dt,
          const NeuronParams& p)
{
    NeuronState next = membrane_step(s, i_in, t, dt, p);
    next = adaptation_step(next, t, dt, p);
    auto [after, spiked] = check_spike_and_reset(next, t + dt, p);
    s = after;
    return spiked;
}

std::vector<double> spike_times(double i_in, double duration,
                                const NeuronParams& p, double dt)
{
    p.validate();
    std::vector<double> out;
    NeuronState s = initial_state(p);
    const auto n_steps = static_cast<long>(std::llround(duration / dt));
    for (long k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (step(s, i_in, t, dt, p)) out.push_back(t + dt);
    }
    return out;
}

std::vector<RatePoint> fi_curve(const std::vector<double>& i_in_grid,
                                double duration, const NeuronParams& p,
                                double dt)
{
    std::vector<RatePoint> out;
    out.reserve(i_in_grid.size());
    for (double i_in : i_in_grid) {
        const auto times = spike_times(i_in, duration, p, dt);
        std::vector<double> late;
        for (double t : times)
            if (t >= 0.5 * duration) late.push_back(t);
        double rate = 0.0;
        if (late.size() >= 2) {
            rate = static_cast<double>(late.size() - 1) /
                   (late.back() - late.front());
        } else {
            rate = static_cast<double>(late.size()) / (0.5 * duration);
        }
        out.push_back({i_in, rate});
    }
    return out;
}

}  // namespace ncsim::neuron
