#pragma once

// Log-domain current-mode low-pass filters: DPI, LPF and Tau-Cell.
//
// All quantities are SI: currents in A, time in s, voltages in V.  Bias
// voltages only ever enter through bias_to_current().

#include <cmath>
#include <stdexcept>
#include <string>

namespace ncsim::logdomain {

enum class Variant { Dpi, Lpf, TauCell };

const char* to_string(Variant v);

// Representative subthreshold CMOS constants.
inline constexpr double kThermalVoltage = 0.025;  // U_T
inline constexpr double kSlopeFactor = 0.7;       // kappa
inline constexpr double kDarkCurrent = 0.5e-15;   // I_0

// Fraction of i_tau used as the lower bound of i_out for the nonlinear
// kernel; the 1/I_out term of the full DPI equation is singular at zero.
inline constexpr double kFloorFraction = 1e-3;

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FilterParams {
    double c_cap = 1e-12;
    double u_t = kThermalVoltage;
    double kappa = kSlopeFactor;
    double i_tau = 1.25e-12;
    double i_th = 1.25e-12;
    double i_0 = kDarkCurrent;
    Variant variant = Variant::Dpi;

    /// Throws std::invalid_argument if any physical invariant is violated.
    void validate() const;

    double tau() const;
    /// Steady-state gain of the linear solution (I_th/I_tau for the DPI).
    double gain() const;
    /// Lower clamp for i_out in the nonlinear kernel.
    double floor() const { return kFloorFraction * i_tau; }

    /// Build parameters for a filter with the given time constant, leak
    /// current and DPI gain; the capacitance is solved for.
    static FilterParams from_tau(double tau, double i_tau, double gain,
                                 Variant variant = Variant::Dpi);
};

struct FilterState {
    double i_out = 0.0;
    double t_last = 0.0;
};

double tau_of(const FilterParams& params);

/// Subthreshold transistor law i_0 * exp(kappa * v / u_t).  Throws
/// std::out_of_range when the result is not representable.
double bias_to_current(double v_bias, const FilterParams& params);
double bias_to_current(double v_bias, double i_0 = kDarkCurrent,
                       double kappa = kSlopeFactor,
                       double u_t = kThermalVoltage);

/// Inverse of bias_to_current.
double current_to_bias(double current, double i_0 = kDarkCurrent,
                       double kappa = kSlopeFactor,
                       double u_t = kThermalVoltage);

/// Exact update of tau dI/dt + I = g I_in for constant i_in over dt.
FilterState step_linear(FilterState state, double i_in, double dt,
                        const FilterParams& params);

/// Advances the full DPI equation
///     tau (1 + I_th/I) dI/dt + I = I_th I_in / I_tau - I_th
/// by dt with adaptive substepping.  The state is clamped to floor() first.
FilterState step_nonlinear(FilterState state, double i_in, double dt,
                           const FilterParams& params);

/// Steady state of the linear solution for the configured variant.
double steady_state(double i_in, const FilterParams& params);

/// Steady state of the full DPI equation, I_th (I_in/I_tau - 1), bounded
/// below by floor().
double nonlinear_steady_state(double i_in, const FilterParams& params);

// Scalar relaxation kernel shared with the neuron model.  The field
// returns the local linearisation dI/dt = rate * (target - I).
struct Relaxation {
    double rate;
    double target;
};

struct RelaxationControl {
    double rtol = 1e-4;
    double floor = 0.0;
    int max_halvings = 40;
};

namespace detail {

inline double relax_once(double i, double h, double floor, Relaxation r)
{
    double next = r.target + (i - r.target) * std::exp(-r.rate * h);
    return next < floor ? floor : next;
}

}  // namespace detail

/// Integrates dI/dt = field(I) over dt using frozen-coefficient exponential
/// steps.  Each substep is checked against two half steps; the substep is
/// halved until they agree to rtol, and the accepted value is the
/// Richardson combination of the two.
template <class Field>
double integrate_relaxation(double i, double dt, Field&& field,
                            const RelaxationControl& ctl)
{
    if (i < ctl.floor) i = ctl.floor;
    double remaining = dt;
    double h = dt;
    const double h_min = std::ldexp(dt, -ctl.max_halvings);
    while (remaining > 0.0) {
        if (h > remaining) h = remaining;
        const Relaxation r0 = field(i);
        const double coarse = detail::relax_once(i, h, ctl.floor, r0);
        const double mid = detail::relax_once(i, 0.5 * h, ctl.floor, r0);
        const double fine =
            detail::relax_once(mid, 0.5 * h, ctl.floor, field(mid));
        const double scale = std::abs(fine) > ctl.floor ? std::abs(fine)
                                                        : ctl.floor;
        const double err = std::abs(fine - coarse);
        if (err <= ctl.rtol * scale || scale == 0.0) {
            double next = 2.0 * fine - coarse;
            if (next < ctl.floor) next = ctl.floor;
            i = next;
            remaining -= h;
            if (err < 0.125 * ctl.rtol * scale) h *= 2.0;
        } else {
            h *= 0.5;
            if (h < h_min) {
                throw ConvergenceError(
                    "relaxation substep underflow: local error " +
                    std::to_string(err / scale) + " exceeds tolerance");
            }
        }
    }
    return i;
}

}  // namespace ncsim::logdomain
