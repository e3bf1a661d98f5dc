#include <doctest.h>

#include <cmath>

#include "ncsim/plasticity.hpp"

using namespace ncsim;
using namespace ncsim::plasticity;

TEST_CASE("up and down windows never overlap")
{
    PlasticityParams p;
    for (double ca = 0; ca < 10; ca += 0.05)
        for (double im : {0.0, 0.5e-9, 0.999e-9, 1.001e-9, 3e-9}) {
            const auto e = eligibility(im, ca, p);
            if (im > p.theta_m) CHECK(e != Eligibility::Down);
            if (im < p.theta_m) CHECK(e != Eligibility::Up);
        }
    CHECK(eligibility(2e-9, 5.0, p) == Eligibility::Up);
    CHECK(eligibility(0.0, 2.0, p) == Eligibility::Down);
    CHECK(eligibility(0.0, 5.0, p) == Eligibility::None);
    CHECK(eligibility(2e-9, 0.1, p) == Eligibility::None);
    CHECK(eligibility(2e-9, 9.0, p) == Eligibility::None);
}

TEST_CASE("jumps move by delta_w and stay inside the rails")
{
    PlasticityParams p;
    PlasticSynapseState s{0.55};
    s = on_pre_spike_update(s, 2e-9, 5.0, p);
    CHECK(s.w == doctest::Approx(0.55 + p.delta_w));
    s = on_pre_spike_update(s, 0.0, 2.0, p);
    CHECK(s.w == doctest::Approx(0.55));
    s.w = p.w_hi;
    s = on_pre_spike_update(s, 2e-9, 5.0, p);
    CHECK(s.w == doctest::Approx(p.w_hi));
}

TEST_CASE("drift pushes toward the rail on each side of theta_w")
{
    PlasticityParams p;
    PlasticSynapseState up{p.theta_w + 0.01}, down{p.theta_w - 0.01}, at{p.theta_w};
    for (int k = 0; k < 100000; ++k) {
        up = bistable_drift(up, 1e-4, p);
        down = bistable_drift(down, 1e-4, p);
    }
    CHECK(up.w == doctest::Approx(p.w_hi));
    CHECK(down.w == doctest::Approx(p.w_lo));
    CHECK(bistable_drift(at, 1e-3, p).w < p.theta_w);
}

TEST_CASE("calcium integrates spikes and decays")
{
    PlasticityParams p;
    double ca = calcium_step(0.0, 1e-4, true, p);
    CHECK(ca == doctest::Approx(p.j_ca));
    ca = calcium_step(ca, p.tau_ca, false, p);
    CHECK(ca == doctest::Approx(p.j_ca * std::exp(-1.0)));
    p.anchor_calcium_thresholds(30, 0.2, 1.0, 2.5);
    CHECK(p.theta_k2 == doctest::Approx(p.j_ca * 30 * p.tau_ca));
    CHECK(p.theta_k1 == doctest::Approx(0.2 * p.theta_k2));
    CHECK(p.theta_k3 == doctest::Approx(2.5 * p.theta_k2));
}

TEST_CASE("transition trials are deterministic and quiet without pre spikes")
{
    TransitionProtocol proto;
    proto.teacher.w_rest = 0.68;
    proto.plasticity.theta_m = 2e-9;
    const auto a = run_transition_trial(proto, 60, 300, 0.4, proto.plasticity.w_hi, 11);
    const auto b = run_transition_trial(proto, 60, 300, 0.4, proto.plasticity.w_hi, 11);
    CHECK(a.w_final == b.w_final);
    CHECK(a.post_spikes == b.post_spikes);
    CHECK(a.pre_spikes > 0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto o = run_transition_trial(proto, 0, 300, 0.4, proto.plasticity.w_hi, seed);
        CHECK_FALSE(o.ltd);
        CHECK(o.up_jumps + o.down_jumps == 0);
    }
}

TEST_CASE("teacher calibration hits the requested rate")
{
    TransitionProtocol proto;
    proto.teacher.w_rest = 0.68;
    const double rate = calibrate_teacher_rate(proto, 30.0, 0.4, 3);
    CHECK(rate > 0);
    double post = 0;
    for (std::uint64_t s = 0; s < 40; ++s)
        post += run_transition_trial(proto, 0, rate, 0.4, proto.plasticity.w_lo, 1000 + s).post_spikes / 0.4;
    CHECK(post / 40 == doctest::Approx(30.0).epsilon(0.15));
}

TEST_CASE("plasticity parameter checks")
{
    PlasticityParams p;
    p.w_lo = 0.7;
    CHECK_THROWS(p.validate());
    p = PlasticityParams{};
    p.theta_k2 = 0.1;
    CHECK_THROWS(p.validate());
}
