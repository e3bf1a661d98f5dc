#include <doctest.h>

#include "ncsim/network.hpp"

using namespace ncsim;
using namespace ncsim::network;

namespace {

PopulationSpec pop(const std::string& name, std::uint32_t n)
{
    PopulationSpec p;
    p.name = name;
    p.size = n;
    synapse::SynapseParams inh;
    inh.sign = synapse::Sign::Inhibitory;
    p.slots = {{"exc", {}, std::nullopt}, {"inh", inh, std::nullopt}};
    return p;
}

NetworkSpec two_pops()
{
    NetworkSpec net;
    net = add_population(std::move(net), pop("a", 5));
    net = add_population(std::move(net), pop("b", 3));
    return net;
}

}  // namespace

TEST_CASE("connection patterns expand as documented")
{
    const auto net = two_pops();
    ConnectionSpec all{"a", "b"};
    all.slot = "exc";
    CHECK(expand(net, all).size() == 15);

    ConnectionSpec self{"a", "a"};
    self.slot = "exc";
    CHECK(expand(net, self).size() == 20);
    self.allow_self = true;
    CHECK(expand(net, self).size() == 25);

    auto nn = ConnectionSpec::nearest_neighbors("a", "a", 1, 0.7, "exc");
    CHECK(expand(net, nn).size() == 8);
    nn.wrap = true;
    CHECK(expand(net, nn).size() == 10);

    ConnectionSpec one{"b", "a"};
    one.pattern = Pattern::OneToOne;
    one.slot = "exc";
    CHECK_THROWS_AS(expand(net, one), SpecError);

    ConnectionSpec ex{"a", "b"};
    ex.pattern = Pattern::Explicit;
    ex.slot = "exc";
    ex.pairs = {{0, 2}, {4, 0}};
    const auto e = expand(net, ex);
    REQUIRE(e.size() == 2);
    CHECK(e[1].src == 4);
    CHECK(e[1].dst == 0);
    ex.pairs = {{5, 0}};
    CHECK_THROWS_AS(expand(net, ex), SpecError);
}

TEST_CASE("slot sign must match the connection sign")
{
    const auto net = two_pops();
    ConnectionSpec c{"a", "b"};
    c.slot = "exc";
    c.sign = synapse::Sign::Inhibitory;
    CHECK_THROWS_AS(expand(net, c), SpecError);
    c.slot = "inh";
    CHECK_NOTHROW(expand(net, c));
}

TEST_CASE("connect assigns addresses and routes")
{
    auto net = two_pops();
    ConnectionSpec c{"a", "b"};
    c.slot = "exc";
    net = connect(std::move(net), c);
    ConnectionSpec d{"b", "b"};
    d.slot = "inh";
    d.sign = synapse::Sign::Inhibitory;
    net = connect(std::move(net), d);
    CHECK(net.edge_counts() == std::vector<std::uint32_t>{0, 15 + 6});
    CHECK(net.routing.size() == 21);
    // source a:0 fans out to the three b neurons
    CHECK(net.routing.targets({0, 0}).size() == 3);
    CHECK_NOTHROW(net.validate());
}

TEST_CASE("duplicate names and unknown references are rejected")
{
    auto net = two_pops();
    CHECK_THROWS_AS(add_population(net, pop("a", 2)), SpecError);
    ConnectionSpec c{"a", "zz"};
    c.slot = "exc";
    CHECK_THROWS_AS(connect(net, c), SpecError);
    c.dst = "b";
    c.slot = "nope";
    CHECK_THROWS_AS(connect(net, c), SpecError);
    auto bad = pop("c", 1);
    bad.slots.push_back(bad.slots.front());
    CHECK_THROWS_AS(add_population(net, bad), SpecError);
}

TEST_CASE("plastic slots cannot also depress")
{
    auto p = pop("p", 1);
    p.slots[0].plasticity = plasticity::PlasticityParams{};
    p.slots[0].synapse.d_std = 0.01;
    CHECK_THROWS_AS(add_population({}, p), SpecError);
}

TEST_CASE("sWTA and FSM builders")
{
    const auto w = build_swta(124, 4, 0.78, 0.74, 0.7, 0.8, 0.8);
    CHECK(w.populations.size() == 2);
    CHECK(w.populations[0].size == 124);
    const auto counts = w.edge_counts();
    // line: 2*123 first neighbours + 2*122 second neighbours, plus 4*124
    // inhibitory edges
    CHECK(counts[0] == 246 + 244 + 496);
    CHECK(counts[1] == 124 * 4 + 4 * 3);

    const auto f = build_fsm(20, 2, 0.74, 0.82, 0.6);
    CHECK(f.populations.size() == 3);
    CHECK(f.edge_counts()[0] == 20 * 19 + 4 * 20);
    const auto f0 = build_fsm(20, 2, 0.0, 0.82, 0.6);
    CHECK(f0.edge_counts()[0] == 4 * 20);
}

TEST_CASE("network json round trip")
{
    auto net = two_pops();
    ConnectionSpec c = ConnectionSpec::nearest_neighbors("a", "a", 2, 0.72, "exc");
    c.wrap = true;
    net = connect(std::move(net), c);
    net.populations[1].neuron.tau_mem = 7e-3;
    net.populations[1].slots[0].plasticity = plasticity::PlasticityParams{};
    const auto j = to_json(net);
    CHECK(j.at("schema") == "ncsim.network/1");
    const auto back = network_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.routing == net.routing);
    CHECK(back.populations[1].neuron.tau_mem == 7e-3);
}

TEST_CASE("network json errors name the element")
{
    auto j = to_json(two_pops());
    j["populations"][1]["neuron"]["tau_membrane"] = 1.0;
    try {
        network_from_json(j);
        FAIL("expected an error");
    } catch (const SpecError& e) {
        CHECK(std::string(e.what()).find("populations[1]") != std::string::npos);
    }
    auto k = to_json(two_pops());
    k["connections"] = {{{"src", "a"}, {"dst", "q"}, {"slot", "exc"}}};
    try {
        network_from_json(k);
        FAIL("expected an error");
    } catch (const SpecError& e) {
        CHECK(std::string(e.what()).find("connections[0]") != std::string::npos);
    }
}
