#include "ncsim/logdomain.hpp"

#include <limits>

namespace ncsim::logdomain {

const char* to_string(Variant v)
{
    switch (v) {
    case Variant::Dpi: return "dpi";
    case Variant::Lpf: return "lpf";
    case Variant::TauCell: return "tau-cell";
    }
    return "?";
}

void FilterParams::validate() const
{
    auto positive = [](double x, const char* name) {
        if (!(x > 0.0) || !std::isfinite(x))
            throw std::invalid_argument(std::string("filter parameter ") +
                                        name + " must be finite and > 0");
    };
    positive(c_cap, "c_cap");
    positive(u_t, "u_t");
    positive(i_tau, "i_tau");
    positive(i_th, "i_th");
    positive(i_0, "i_0");
    if (!(kappa > 0.0 && kappa <= 1.0))
        throw std::invalid_argument("filter parameter kappa must be in (0, 1]");
    const double t = tau();
    if (!(t > 0.0) || !std::isfinite(t))
        throw std::invalid_argument("derived time constant is not finite");
}

double FilterParams::tau() const
{
    if (variant == Variant::TauCell) return c_cap * u_t / i_tau;
    return c_cap * u_t / (kappa * i_tau);
}

double FilterParams::gain() const
{
    switch (variant) {
    case Variant::Dpi: return i_th / i_tau;
    case Variant::Lpf: return i_0 / i_tau;
    case Variant::TauCell: return 1.0;
    }
    return 1.0;
}

FilterParams FilterParams::from_tau(double tau, double i_tau, double gain,
                                    Variant variant)
{
    FilterParams p;
    p.variant = variant;
    p.i_tau = i_tau;
    p.i_th = gain * i_tau;
    const double k = variant == Variant::TauCell ? 1.0 : p.kappa;
    p.c_cap = tau * k * i_tau / p.u_t;
    p.validate();
    return p;
}

double tau_of(const FilterParams& params) { return params.tau(); }

double bias_to_current(double v_bias, double i_0, double kappa, double u_t)
{
    const double exponent = kappa * v_bias / u_t;
    const double log_i = std::log(i_0) + exponent;
    // Keep clear of the double range so products with gains stay finite.
    if (log_i > std::log(std::numeric_limits<double>::max()) - 40.0)
        throw std::out_of_range("bias voltage " + std::to_string(v_bias) +
                                " V is out of range");
    return i_0 * std::exp(exponent);
}

double bias_to_current(double v_bias, const FilterParams& params)
{
    return bias_to_current(v_bias, params.i_0, params.kappa, params.u_t);
}

double current_to_bias(double current, double i_0, double kappa, double u_t)
{
    if (!(current > 0.0))
        throw std::invalid_argument("current must be > 0");
    return u_t / kappa * std::log(current / i_0);
}

FilterState step_linear(FilterState state, double i_in, double dt,
                        const FilterParams& params)
{
    const double target = params.gain() * i_in;
    state.i_out = target + (state.i_out - target) * std::exp(-dt / params.tau());
    if (state.i_out < 0.0) state.i_out = 0.0;
    state.t_last += dt;
    return state;
}

FilterState step_nonlinear(FilterState state, double i_in, double dt,
                           const FilterParams& params)
{
    const double tau = params.tau();
    const double i_th = params.i_th;
    const double drive = i_th * i_in / params.i_tau - i_th;
    // tau (I + I_th)/I dI/dt = drive - I
    auto field = [&](double i) {
        return Relaxation{i / (tau * (i + i_th)), drive};
    };
    RelaxationControl ctl;
    ctl.floor = params.floor();
    state.i_out = integrate_relaxation(state.i_out, dt, field, ctl);
    state.t_last += dt;
    return state;
}

double steady_state(double i_in, const FilterParams& params)
{
    return params.gain() * i_in;
}

double nonlinear_steady_state(double i_in, const FilterParams& params)
{
    const double s = params.i_th * (i_in / params.i_tau - 1.0);
    return s < params.floor() ? params.floor() : s;
}

}  // namespace ncsim::logdomain
