#include <doctest.h>

#include <cmath>

#include "ncsim/logdomain.hpp"
#include "ncsim/synapse.hpp"

using namespace ncsim;
using namespace ncsim::synapse;

TEST_CASE("a linear pulse moves the current toward g * I_w")
{
    SynapseParams p;
    auto s = initial_state(p);
    const double i_w = logdomain::bias_to_current(p.w_rest);
    const double f = 1.0 - std::exp(-p.pulse_width / p.tau_syn);
    s = inject_pulse(s, p.w_rest, p);
    CHECK(s.i_syn() == doctest::Approx(p.g_syn * i_w * f).epsilon(1e-12));
    const double before = s.i_syn();
    s = inject_pulse(s, p.w_rest, p);
    CHECK(s.i_syn() - before == doctest::Approx((p.g_syn * i_w - before) * f).epsilon(1e-12));
    // default operating point: tens of pA per pulse
    CHECK(before > 20e-12);
    CHECK(before < 80e-12);
}

TEST_CASE("weight recovery is exponential toward rest")
{
    CHECK(recover_weight(0.5, 0.7, 0.0, 0.1) == doctest::Approx(0.5));
    CHECK(recover_weight(0.5, 0.7, 0.1, 0.1) == doctest::Approx(0.7 - 0.2 * std::exp(-1.0)));
    CHECK(recover_weight(0.5, 0.7, 100.0, 0.1) == doctest::Approx(0.7));
}

TEST_CASE("depression lowers v_w spike by spike and floors at zero")
{
    SynapseParams p;
    p.d_std = 0.01;
    p.tau_rec = 1.0;
    auto s = initial_state(p);
    double prev = s.v_w;
    for (int k = 0; k < 20; ++k) {
        s = on_pre_spike(s, 0.02 * (k + 1), p);
        REQUIRE(s.v_w < prev);
        prev = s.v_w;
    }
    // v* = w_rest - d e^{-a} / (1 - e^{-a}) for ISI T, a = T / tau_rec
    const double a = 0.02 / p.tau_rec;
    const double v_star = p.w_rest - p.d_std / (1.0 - std::exp(-a));
    CHECK(v_star + p.d_std < p.w_rest);

    p.d_std = 0.5;
    s = initial_state(p);
    s = on_pre_spike(s, 0.001, p);
    s = on_pre_spike(s, 0.002, p);
    CHECK(s.v_w == 0.0);
}

TEST_CASE("without depression every spike injects the same charge")
{
    SynapseParams p;
    auto s = initial_state(p);
    double prev_jump = -1;
    for (int k = 0; k < 5; ++k) {
        // long gaps: the filter is back at zero before every spike
        const double t = 1.0 * (k + 1);
        auto before = advance(s, t - s.filter.t_last, p);
        s = on_pre_spike(s, t, p);
        const double jump = s.i_syn() - before.i_syn();
        if (prev_jump > 0) CHECK(jump == doctest::Approx(prev_jump).epsilon(1e-6));
        prev_jump = jump;
        CHECK(s.v_w == p.w_rest);
    }
}

TEST_CASE("out of order spikes are rejected")
{
    SynapseParams p;
    auto s = on_pre_spike(initial_state(p), 0.5, p);
    CHECK_THROWS_AS(on_pre_spike(s, 0.4, p), std::invalid_argument);
}

TEST_CASE("facilitating kernel grows pulse responses at short intervals")
{
    SynapseParams p;
    p.kernel = Kernel::Facilitating;
    // below about 0.5 V the input never lifts the output off its floor
    p.w_rest = 0.55;
    p.pulse_width = 50e-6;
    SynapseState s = initial_state(p);
    std::vector<double> jumps;
    for (int k = 0; k < 4; ++k) {
        const double t = 0.002 * (k + 1);
        const auto before = advance(s, t - s.filter.t_last, p);
        s = on_pre_spike(s, t, p);
        jumps.push_back(s.i_syn() - before.i_syn());
    }
    CHECK(jumps[1] > jumps[0]);
    CHECK(jumps[2] > jumps[1]);
    CHECK(jumps[3] > jumps[2]);
}

TEST_CASE("gating and sign")
{
    SynapseParams p;
    SynapseState s = initial_state(p);
    s.filter.i_out = 1e-10;
    CHECK(gated_output(s, 0.0, p, 5e-9) == doctest::Approx(1e-10));
    p.sign = Sign::Inhibitory;
    CHECK(gated_output(s, 0.0, p, 5e-9) == doctest::Approx(-1e-10));
    p.sign = Sign::Excitatory;
    p.nmda_gated = true;
    CHECK(gated_output(s, 0.0, p, 5e-9) < 1e-14);
    CHECK(gated_output(s, 3 * p.nmda_threshold, p, 5e-9) == doctest::Approx(1e-10).epsilon(1e-6));
    CHECK(nmda_gate(p.nmda_threshold, p.nmda_threshold) == doctest::Approx(0.5));
    p.nmda_gated = false;
    p.conductance = true;
    CHECK(gated_output(s, 2.5e-9, p, 5e-9) == doctest::Approx(0.5e-10));
    CHECK(gated_output(s, 6e-9, p, 5e-9) == 0.0);
}

TEST_CASE("homeostatic scaling pulls gains toward the target rate")
{
    CHECK(homeostatic_factor(20, 20, 0.1, 1.0) == doctest::Approx(1.0));
    CHECK(homeostatic_factor(40, 20, 0.1, 1.0) < 1.0);
    CHECK(homeostatic_factor(10, 20, 0.1, 1.0) > 1.0);
    std::vector<SynapseParams> v(3);
    const auto out = homeostatic_scale(v, 40, 20, 0.1, 1.0);
    for (const auto& s : out) CHECK(s.g_syn == doctest::Approx(10.0 * std::exp(-0.1)));
    CHECK_THROWS(homeostatic_factor(1, 0, 0.1, 1));
}

TEST_CASE("synapse parameter checks")
{
    SynapseParams p;
    p.d_std = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = SynapseParams{};
    p.w_rest = 2.0;
    CHECK_THROWS(p.validate());
    p = SynapseParams{};
    p.tau_rec = 0;
    CHECK_THROWS(p.validate());
}
