#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "ncsim/engine.hpp"
#include "ncsim/rng.hpp"
#include "ncsim/spike_trains.hpp"

using namespace ncsim;
using namespace ncsim::engine;

namespace {

// Small recurrent network with plasticity and depression on different
// slots, so every code path of the step runs.
struct Fixture {
    network::NetworkSpec net;
    std::vector<Stimulus> stim;

    Fixture()
    {
        network::PopulationSpec a;
        a.name = "a";
        a.size = 30;
        synapse::SynapseParams dep;
        dep.d_std = 0.004;
        synapse::SynapseParams inh;
        inh.sign = synapse::Sign::Inhibitory;
        plasticity::PlasticityParams pp;
        a.slots = {{"input", dep, std::nullopt},
                   {"exc", {}, std::nullopt},
                   {"inh", inh, std::nullopt},
                   {"plastic", {}, pp}};
        network::PopulationSpec b = a;
        b.name = "b";
        b.size = 5;
        net = network::add_population(net, a);
        net = network::add_population(net, b);
        auto nn = network::ConnectionSpec::nearest_neighbors("a", "a", 2, 0.74, "exc");
        net = network::connect(net, nn);
        network::ConnectionSpec ab{"a", "b"};
        ab.slot = "plastic";
        ab.weight = 0.6;
        net = network::connect(net, ab);
        network::ConnectionSpec ba{"b", "a"};
        ba.slot = "inh";
        ba.sign = synapse::Sign::Inhibitory;
        ba.weight = 0.7;
        net = network::connect(net, ba);

        Stimulus s{"drive", "a", "input", {}};
        for (std::uint32_t i = 0; i < 30; ++i)
            s.channels.push_back({i, 0.74, poisson_train(120.0, 0.0, 0.5, rng::derive_seed(3, "d", i))});
        stim.push_back(s);
    }

    SpikeRecord run(KernelKind k, int threads, double t_end = 0.5) const
    {
        SimConfig cfg;
        cfg.t_end = t_end;
        cfg.kernel = k;
        cfg.threads = threads;
        cfg.record_events = true;
        cfg.traces = {{"i_mem", "b", 0}, {"w", "b", 3}, {"v_w", "a", 200}};
        Simulator sim(net, cfg, stim);
        sim.run();
        return sim.take_record();
    }
};

std::string csv(const SpikeRecord& r)
{
    std::ostringstream os;
    write_spikes_csv(os, r);
    write_traces_csv(os, r);
    write_events_csv(os, r);
    return os.str();
}

}  // namespace

TEST_CASE("serial and parallel kernels agree bit for bit")
{
    Fixture f;
    const auto s = f.run(KernelKind::Serial, 1);
    REQUIRE(s.spikes.size() > 100);
    CHECK(csv(s) == csv(f.run(KernelKind::Parallel, 1)));
    CHECK(csv(s) == csv(f.run(KernelKind::Parallel, 3)));
    CHECK(csv(s) == csv(f.run(KernelKind::Parallel, 8)));
}

TEST_CASE("conservation and causality")
{
    Fixture f;
    const auto r = f.run(KernelKind::Parallel, 2);
    CHECK(conserved(r, f.net));
    CHECK(r.counters.spikes == r.spikes.size());
    CHECK(r.counters.events_accepted + r.counters.events_dropped == r.counters.spikes);
    CHECK(r.counters.deliveries_applied + r.counters.deliveries_queued == r.counters.deliveries_scheduled);
    for (const auto& d : r.events) CHECK(d.depart >= d.event.t);
    CHECK(r.counters.max_delay < 1e-3);

    auto broken = r;
    ++broken.counters.deliveries_applied;
    CHECK_FALSE(conserved(broken, f.net));
}

TEST_CASE("a tiny queue drops events and conservation still balances")
{
    Fixture f;
    SimConfig cfg;
    cfg.t_end = 0.3;
    cfg.arbiter.queue_capacity = 1;
    cfg.arbiter.service_time = 5e-4;
    Simulator sim(f.net, cfg, f.stim);
    sim.run();
    const auto& r = sim.record();
    CHECK(r.counters.events_dropped > 0);
    CHECK(conserved(r, f.net));
}

TEST_CASE("running in pieces equals running at once")
{
    Fixture f;
    SimConfig cfg;
    cfg.t_end = 0.4;
    cfg.threads = 1;
    Simulator a(f.net, cfg, f.stim);
    a.run();
    Simulator b(f.net, cfg, f.stim);
    b.run_until(0.1234);
    b.run_until(0.3);
    b.run();
    CHECK(a.record().spikes == b.record().spikes);
    CHECK(conserved(b.record(), f.net));
}

TEST_CASE("stimulus addresses are predictable")
{
    Fixture f;
    SimConfig cfg;
    cfg.t_end = 0.01;
    Simulator sim(f.net, cfg, f.stim);
    const auto addr = stimulus_addresses(f.net, f.stim);
    for (std::size_t c = 0; c < f.stim[0].channels.size(); ++c)
        CHECK(sim.stimulus_address(0, c) == addr[0][c]);
    CHECK(addr[0][0] == f.net.edge_counts()[0]);
}

TEST_CASE("plastic weights start at the edge weight")
{
    Fixture f;
    SimConfig cfg;
    cfg.t_end = 0.01;
    Simulator sim(f.net, cfg, f.stim);
    CHECK(sim.plastic_weight(1, 0).value() == doctest::Approx(0.6));
    CHECK_FALSE(sim.plastic_weight(0, 0).has_value());
}

TEST_CASE("regular drive gives the expected rate estimate")
{
    network::PopulationSpec p;
    p.name = "n";
    p.size = 1;
    p.slots = {{"input", {}, std::nullopt}};
    const auto net = network::add_population({}, p);
    SimConfig cfg;
    cfg.t_end = 1.0;
    Simulator sim(net, cfg, {}, {{"n", {}, 2e-9, 0.0}});
    sim.run();
    const auto& r = sim.record();
    const double rate = rate_estimate(r, 0, 0.0, 1.0);
    CHECK(rate > 50);
    const auto series = rate_series(r, 0, 0.1, 1);
    REQUIRE(series.size() == 10);
    double total = 0;
    for (const auto& x : series) total += x.rate * 0.1;
    CHECK(total == doctest::Approx(static_cast<double>(r.spikes.size())));
    // steady firing: every later window within one spike of the mean
    for (std::size_t k = 2; k < series.size(); ++k)
        CHECK(std::abs(series[k].rate - rate) <= 10.0 + 1e-9);
}

TEST_CASE("current steps respect their window")
{
    network::PopulationSpec p;
    p.name = "n";
    p.size = 2;
    const auto net = network::add_population({}, p);
    SimConfig cfg;
    cfg.t_end = 0.6;
    Simulator sim(net, cfg, {}, {{"n", {1}, 2e-9, 0.2, 0.4}});
    sim.run();
    for (const auto& s : sim.record().spikes) {
        CHECK(s.neuron == 1);
        CHECK(s.t > 0.2);
        CHECK(s.t < 0.41);
    }
}

TEST_CASE("configuration errors")
{
    Fixture f;
    SimConfig cfg;
    cfg.dt = 0;
    CHECK_THROWS(Simulator(f.net, cfg));
    cfg = SimConfig{};
    cfg.traces = {{"voltage", "a", 0}};
    CHECK_THROWS(Simulator(f.net, cfg));
    cfg = SimConfig{};
    auto bad = f.stim;
    bad[0].channels[0].neuron = 99;
    CHECK_THROWS(Simulator(f.net, cfg, bad));
    bad = f.stim;
    bad[0].channels[0].times = {0.2, 0.1};
    CHECK_THROWS(Simulator(f.net, cfg, bad));
}

TEST_CASE("thread count resolution")
{
    std::vector<std::string> warn;
    CHECK(resolve_threads(3, &warn) == 3);
    ::setenv("NCSIM_THREADS", "2", 1);
    CHECK(resolve_threads(0, &warn) == 2);
    ::setenv("NCSIM_THREADS", "lots", 1);
    CHECK(resolve_threads(0, &warn) >= 1);
    CHECK_FALSE(warn.empty());
    ::unsetenv("NCSIM_THREADS");
}

TEST_CASE("csv layouts")
{
    Fixture f;
    const auto r = f.run(KernelKind::Serial, 1, 0.05);
    std::ostringstream s, t, e;
    write_spikes_csv(s, r);
    write_traces_csv(t, r);
    write_events_csv(e, r);
    CHECK(s.str().rfind("t,population,neuron\n", 0) == 0);
    CHECK(t.str().rfind("t,quantity,population,neuron,value\n", 0) == 0);
    CHECK(e.str().rfind("t,src_chip,src_neuron,dst_chip,dst_synapse,depart_t\n", 0) == 0);
    CHECK(t.str().find(",i_mem,b,0,") != std::string::npos);
}
