#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ncsim/neuron.hpp"

using namespace ncsim::neuron;

TEST_CASE("no input, no spikes; strong input, regular spikes")
{
    NeuronParams p;
    CHECK(spike_times(0.0, 1.0, p).empty());
    const auto t = spike_times(2e-9, 0.5, p);
    REQUIRE(t.size() > 10);
    for (std::size_t i = 2; i < t.size(); ++i)
        CHECK(t[i] - t[i - 1] == doctest::Approx(t[2] - t[1]).epsilon(0.02));
}

TEST_CASE("refractory period bounds the rate")
{
    NeuronParams p;
    const auto t = spike_times(1e-6, 0.2, p);
    REQUIRE(t.size() > 5);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] - t[i - 1] >= p.t_ref - 1e-9);
}

TEST_CASE("f-I curve rises monotonically above rheobase")
{
    NeuronParams p;
    std::vector<double> grid;
    for (double i = 100e-12; i < 3e-9; i *= 1.5) grid.push_back(i);
    const auto curve = fi_curve(grid, 1.0, p);
    REQUIRE(curve.size() == grid.size());
    CHECK(curve.front().rate == 0.0);
    for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k].rate >= curve[k - 1].rate);
    CHECK(curve.back().rate > 100.0);
}

TEST_CASE("halving dt moves spike times by less than dt")
{
    struct Scenario {
        double i_in;
        double g_ahp;
        MembraneMode mode;
    };
    const Scenario scenarios[] = {{300e-12, 0.0, MembraneMode::Full},
                                  {600e-12, 0.0, MembraneMode::Full},
                                  {1.5e-9, 0.0, MembraneMode::Full},
                                  {600e-12, 0.0, MembraneMode::Reduced},
                                  {800e-12, 2.0, MembraneMode::Full}};
    const double dt = 1e-4;
    for (const auto& sc : scenarios) {
        NeuronParams p;
        p.mode = sc.mode;
        p.g_ahp = sc.g_ahp;
        p.i_ca_pulse = 100e-12;
        const auto a = spike_times(sc.i_in, 0.1, p, dt);
        const auto b = spike_times(sc.i_in, 0.1, p, dt / 2);
        REQUIRE(!a.empty());
        CHECK(std::abs(a.front() - b.front()) < dt);
    }
}

TEST_CASE("reset current respects the floor")
{
    NeuronParams p;
    CHECK(p.reset_current() == doctest::Approx(p.floor()));
    p.i_reset = 1e-9;
    CHECK(p.reset_current() == doctest::Approx(1e-9));
}

TEST_CASE("spike detection resets and starts the refractory window")
{
    NeuronParams p;
    NeuronState s = initial_state(p);
    s.i_mem = 2 * p.i_spk;
    auto [after, fired] = check_spike_and_reset(s, 0.3, p);
    CHECK(fired);
    CHECK(after.i_mem == doctest::Approx(p.reset_current()));
    CHECK(after.refractory_until == doctest::Approx(0.3 + p.t_ref));
    const auto pinned = membrane_step(after, 5e-9, 0.3, 1e-4, p);
    CHECK(pinned.i_mem == doctest::Approx(p.reset_current()));
}

TEST_CASE("adaptation current jumps with spikes and decays between them")
{
    NeuronParams p;
    p.g_ahp = 5.0;
    p.i_ca_pulse = 100e-12;
    NeuronState s = initial_state(p);
    s.last_spike_time = 0.0;
    s = adaptation_step(s, 0.0, p.t_pulse, p);
    const double peak = s.i_ahp;
    CHECK(peak > 0);
    CHECK(peak < p.g_ahp * p.i_ca_pulse);
    s = adaptation_step(s, p.t_pulse, p.tau_ahp, p);
    CHECK(s.i_ahp == doctest::Approx(peak * std::exp(-1.0)).epsilon(1e-6));
}

TEST_CASE("strong adaptation with a high reset produces bursts")
{
    NeuronParams p;
    p.tau_ahp = 0.5;
    p.g_ahp = 12.43;
    p.i_ca_pulse = 150e-12;
    p.i_reset = 2.6e-9;
    const auto t = spike_times(384e-12, 3.0, p);
    std::vector<double> isi;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i - 1] > 1.0) isi.push_back(t[i] - t[i - 1]);
    REQUIRE(isi.size() > 6);
    const auto [lo, hi] = std::minmax_element(isi.begin(), isi.end());
    CHECK(*hi > 10 * *lo);
}

TEST_CASE("neuron parameter checks")
{
    NeuronParams p;
    p.tau_mem = -1;
    CHECK_THROWS(p.validate());
    p = NeuronParams{};
    p.t_ref = -1e-3;
    CHECK_THROWS(p.validate());
}
