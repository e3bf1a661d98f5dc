#include "ncsim/network.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

namespace ncsim::network {

using nlohmann::json;

std::uint32_t PopulationSpec::slot_index(const std::string& slot) const
{
    for (std::size_t i = 0; i < slots.size(); ++i)
        if (slots[i].name == slot) return static_cast<std::uint32_t>(i);
    throw SpecError(fmt::format("population '{}' has no synapse slot '{}'",
                                name, slot));
}

ConnectionSpec ConnectionSpec::nearest_neighbors(std::string src,
                                                 std::string dst, int k,
                                                 double weight,
                                                 std::string slot)
{
    ConnectionSpec c;
    c.src = std::move(src);
    c.dst = std::move(dst);
    c.pattern = Pattern::Offsets;
    for (int d = 1; d <= k; ++d) {
        c.offsets.push_back(-d);
        c.offsets.push_back(d);
    }
    c.weight = weight;
    c.slot = std::move(slot);
    return c;
}

std::uint32_t NetworkSpec::population_index(const std::string& name) const
{
    for (std::size_t i = 0; i < populations.size(); ++i)
        if (populations[i].name == name) return static_cast<std::uint32_t>(i);
    throw SpecError(fmt::format("unknown population '{}'", name));
}

std::uint32_t NetworkSpec::total_neurons() const
{
    std::uint32_t n = 0;
    for (const auto& p : populations) n += p.size;
    return n;
}

std::vector<std::uint32_t> NetworkSpec::edge_counts() const
{
    std::vector<std::uint32_t> counts(populations.size(), 0);
    for (const auto& e : edges) ++counts[e.dst_pop];
    return counts;
}

aer::AddressSpace NetworkSpec::address_space() const
{
    aer::AddressSpace space;
    const auto counts = edge_counts();
    for (std::size_t i = 0; i < counts.size(); ++i)
        space[static_cast<std::uint32_t>(i)] = counts[i];
    return space;
}

void NetworkSpec::validate() const
{
    std::set<std::string> names;
    for (const auto& p : populations) {
        if (p.size < 1)
            throw SpecError(fmt::format("population '{}' is empty", p.name));
        if (!names.insert(p.name).second)
            throw SpecError(fmt::format("duplicate population '{}'", p.name));
        p.neuron.validate();
        std::set<std::string> slot_names;
        for (const auto& s : p.slots) {
            if (!slot_names.insert(s.name).second)
                throw SpecError(fmt::format("population '{}': duplicate slot '{}'",
                                            p.name, s.name));
            s.synapse.validate();
            if (s.plasticity) {
                s.plasticity->validate();
                if (s.synapse.d_std != 0.0)
                    throw SpecError(fmt::format(
                        "population '{}': plastic slot '{}' cannot use depression",
                        p.name, s.name));
            }
        }
    }
    routing.validate(address_space());
}

NetworkSpec add_population(NetworkSpec spec, PopulationSpec pop)
{
    spec.populations.push_back(std::move(pop));
    spec.validate();
    return spec;
}

std::vector<Edge> expand(const NetworkSpec& spec, const ConnectionSpec& conn)
{
    const std::uint32_t si = spec.population_index(conn.src);
    const std::uint32_t di = spec.population_index(conn.dst);
    const auto& sp = spec.populations[si];
    const auto& dp = spec.populations[di];
    const std::uint32_t slot = dp.slot_index(conn.slot);
    if (dp.slots[slot].synapse.sign != conn.sign)
        throw SpecError(fmt::format("slot '{}' of '{}' has the opposite sign",
                                    conn.slot, conn.dst));
    const bool same = si == di;
    std::vector<Edge> out;
    auto emit = [&](std::uint32_t s, std::uint32_t d) {
        if (s >= sp.size || d >= dp.size)
            throw SpecError(fmt::format("edge {}[{}] -> {}[{}] out of bounds",
                                        conn.src, s, conn.dst, d));
        if (same && s == d && !conn.allow_self) return;
        out.push_back({si, s, di, d, slot, conn.weight});
    };
    switch (conn.pattern) {
    case Pattern::AllToAll:
        for (std::uint32_t s = 0; s < sp.size; ++s)
            for (std::uint32_t d = 0; d < dp.size; ++d) emit(s, d);
        break;
    case Pattern::OneToOne:
        if (sp.size != dp.size)
            throw SpecError("one-to-one connection between populations of "
                            "different size");
        for (std::uint32_t i = 0; i < sp.size; ++i) emit(i, i);
        break;
    case Pattern::Offsets: {
        const auto n = static_cast<long long>(dp.size);
        for (std::uint32_t s = 0; s < sp.size; ++s) {
            for (int off : conn.offsets) {
                long long d = static_cast<long long>(s) + off;
                if (conn.wrap)
                    d = ((d % n) + n) % n;
                else if (d < 0 || d >= n)
                    continue;
                emit(s, static_cast<std::uint32_t>(d));
            }
        }
        break;
    }
    case Pattern::Explicit:
        for (const auto& [s, d] : conn.pairs) emit(s, d);
        break;
    }
    return out;
}

NetworkSpec connect(NetworkSpec spec, const ConnectionSpec& conn)
{
    auto edges = expand(spec, conn);
    auto counts = spec.edge_counts();
    for (const auto& e : edges) {
        spec.routing.add({e.src_pop, e.src}, {e.dst_pop, counts[e.dst_pop]++});
        spec.edges.push_back(e);
    }
    spec.connections.push_back(conn);
    return spec;
}

SwtaOptions default_swta_options()
{
    SwtaOptions o;
    o.inh_synapse.sign = synapse::Sign::Inhibitory;
    return o;
}

namespace {

PopulationSpec make_exc(std::string name, std::uint32_t n,
                        const SwtaOptions& opt)
{
    PopulationSpec p;
    p.name = std::move(name);
    p.size = n;
    p.neuron = opt.exc_neuron;
    p.slots = {{"input", opt.input_synapse, std::nullopt},
               {"exc", opt.exc_synapse, std::nullopt},
               {"inh", opt.inh_synapse, std::nullopt}};
    return p;
}

PopulationSpec make_inh(std::uint32_t n, const SwtaOptions& opt)
{
    PopulationSpec p;
    p.name = "inh";
    p.size = n;
    p.neuron = opt.inh_neuron;
    p.slots = {{"input", opt.input_synapse, std::nullopt},
               {"exc", opt.exc_synapse, std::nullopt},
               {"inh", opt.inh_synapse, std::nullopt}};
    return p;
}

ConnectionSpec all_to_all(std::string src, std::string dst, double w,
                          std::string slot, synapse::Sign sign)
{
    ConnectionSpec c;
    c.src = std::move(src);
    c.dst = std::move(dst);
    c.pattern = Pattern::AllToAll;
    c.weight = w;
    c.slot = std::move(slot);
    c.sign = sign;
    return c;
}

}  // namespace

NetworkSpec build_swta(std::uint32_t n_exc, std::uint32_t n_inh, double w1,
                       double w2, double w_ei, double w_ie, double w_ii,
                       const SwtaOptions& opt)
{
    if (n_exc < 5) throw SpecError("build_swta: need at least 5 excitatory neurons");
    if (n_inh < 1) throw SpecError("build_swta: need at least 1 inhibitory neuron");
    if (opt.inh_synapse.sign != synapse::Sign::Inhibitory)
        throw SpecError("build_swta: inhibitory synapse must have inhibitory sign");
    NetworkSpec net;
    net = add_population(std::move(net), make_exc("exc", n_exc, opt));
    net = add_population(std::move(net), make_inh(n_inh, opt));

    ConnectionSpec first;
    first.src = first.dst = "exc";
    first.pattern = Pattern::Offsets;
    first.offsets = {-1, 1};
    first.wrap = opt.ring;
    first.weight = w1;
    first.slot = "exc";
    net = connect(std::move(net), first);

    ConnectionSpec second = first;
    second.offsets = {-2, 2};
    second.weight = w2;
    net = connect(std::move(net), second);

    using synapse::Sign;
    net = connect(std::move(net), all_to_all("exc", "inh", w_ei, "exc", Sign::Excitatory));
    net = connect(std::move(net), all_to_all("inh", "exc", w_ie, "inh", Sign::Inhibitory));
    if (n_inh > 1)
        net = connect(std::move(net),
                      all_to_all("inh", "inh", w_ii, "inh", Sign::Inhibitory));
    return net;
}

NetworkSpec build_fsm(std::uint32_t n_per_state, std::uint32_t n_states,
                      double w_self, double w_ie, double w_ei,
                      const FsmOptions& opt)
{
    if (n_states < 2) throw SpecError("build_fsm: need at least 2 states");
    if (n_per_state < 2) throw SpecError("build_fsm: need at least 2 neurons per state");
    if (opt.n_inh < 1) throw SpecError("build_fsm: need at least 1 inhibitory neuron");
    using synapse::Sign;
    NetworkSpec net;
    for (std::uint32_t s = 0; s < n_states; ++s)
        net = add_population(std::move(net),
                             make_exc(fmt::format("state{}", s), n_per_state, opt.swta));
    net = add_population(std::move(net), make_inh(opt.n_inh, opt.swta));
    for (std::uint32_t s = 0; s < n_states; ++s) {
        const auto name = fmt::format("state{}", s);
        if (w_self > 0.0)
            net = connect(std::move(net),
                          all_to_all(name, name, w_self, "exc", Sign::Excitatory));
        net = connect(std::move(net),
                      all_to_all(name, "inh", w_ei, "exc", Sign::Excitatory));
        net = connect(std::move(net),
                      all_to_all("inh", name, w_ie, "inh", Sign::Inhibitory));
    }
    if (opt.w_ii > 0.0 && opt.n_inh > 1)
        net = connect(std::move(net),
                      all_to_all("inh", "inh", opt.w_ii, "inh", Sign::Inhibitory));
    return net;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <class T>
struct Field {
    const char* key;
    double T::*member;
};

const std::vector<Field<neuron::NeuronParams>>& neuron_fields()
{
    using P = neuron::NeuronParams;
    static const std::vector<Field<P>> f = {
        {"tau_mem", &P::tau_mem},       {"i_tau", &P::i_tau},
        {"i_th", &P::i_th},             {"fb_i_a0", &P::fb_i_a0},
        {"fb_i_delta", &P::fb_i_delta}, {"i_spk", &P::i_spk},
        {"i_reset", &P::i_reset},       {"t_ref", &P::t_ref},
        {"tau_ahp", &P::tau_ahp},       {"g_ahp", &P::g_ahp},
        {"i_ca_pulse", &P::i_ca_pulse}, {"t_pulse", &P::t_pulse},
    };
    return f;
}

const std::vector<Field<synapse::SynapseParams>>& synapse_fields()
{
    using P = synapse::SynapseParams;
    static const std::vector<Field<P>> f = {
        {"tau_syn", &P::tau_syn},         {"i_tau", &P::i_tau},
        {"g_syn", &P::g_syn},             {"w_rest", &P::w_rest},
        {"w_max", &P::w_max},             {"d_std", &P::d_std},
        {"tau_rec", &P::tau_rec},         {"pulse_width", &P::pulse_width},
        {"nmda_threshold", &P::nmda_threshold},
    };
    return f;
}

const std::vector<Field<plasticity::PlasticityParams>>& plasticity_fields()
{
    using P = plasticity::PlasticityParams;
    static const std::vector<Field<P>> f = {
        {"delta_w", &P::delta_w},   {"drift_rate", &P::drift_rate},
        {"w_lo", &P::w_lo},         {"w_hi", &P::w_hi},
        {"theta_w", &P::theta_w},   {"theta_m", &P::theta_m},
        {"tau_ca", &P::tau_ca},     {"j_ca", &P::j_ca},
        {"theta_k1", &P::theta_k1}, {"theta_k2", &P::theta_k2},
        {"theta_k3", &P::theta_k3},
    };
    return f;
}

template <class T>
json dump_fields(const T& p, const std::vector<Field<T>>& fields)
{
    json j = json::object();
    for (const auto& f : fields) j[f.key] = p.*(f.member);
    return j;
}

template <class T>
bool load_field(T& p, const std::vector<Field<T>>& fields,
                const std::string& key, const json& value)
{
    for (const auto& f : fields) {
        if (key == f.key) {
            if (!value.is_number())
                throw SpecError(fmt::format("field '{}' must be a number", key));
            p.*(f.member) = value.get<double>();
            return true;
        }
    }
    return false;
}

const char* pattern_name(Pattern p)
{
    switch (p) {
    case Pattern::AllToAll: return "all_to_all";
    case Pattern::OneToOne: return "one_to_one";
    case Pattern::Offsets: return "offsets";
    case Pattern::Explicit: return "explicit";
    }
    return "?";
}

Pattern pattern_from(const std::string& s)
{
    if (s == "all_to_all") return Pattern::AllToAll;
    if (s == "one_to_one") return Pattern::OneToOne;
    if (s == "offsets") return Pattern::Offsets;
    if (s == "explicit") return Pattern::Explicit;
    throw SpecError(fmt::format("unknown connection pattern '{}'", s));
}

synapse::Sign sign_from(const std::string& s)
{
    if (s == "excitatory") return synapse::Sign::Excitatory;
    if (s == "inhibitory") return synapse::Sign::Inhibitory;
    throw SpecError(fmt::format("unknown sign '{}'", s));
}

const char* sign_name(synapse::Sign s)
{
    return s == synapse::Sign::Excitatory ? "excitatory" : "inhibitory";
}

const json& require_key(const json& j, const char* key, const std::string& where)
{
    if (!j.is_object() || !j.contains(key))
        throw SpecError(fmt::format("{}: missing field '{}'", where, key));
    return j.at(key);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> known)
{
    if (!j.is_object()) throw SpecError(where + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* n : known) ok = ok || k == n;
        if (!ok) throw SpecError(fmt::format("{}: unknown key '{}'", where, k));
    }
}

}  // namespace

json to_json(const neuron::NeuronParams& p)
{
    json j = dump_fields(p, neuron_fields());
    j["mode"] = p.mode == neuron::MembraneMode::Full ? "full" : "reduced";
    return j;
}

json to_json(const synapse::SynapseParams& p)
{
    json j = dump_fields(p, synapse_fields());
    j["sign"] = sign_name(p.sign);
    j["nmda_gated"] = p.nmda_gated;
    j["conductance"] = p.conductance;
    j["kernel"] = p.kernel == synapse::Kernel::Linear ? "linear" : "facilitating";
    return j;
}

json to_json(const plasticity::PlasticityParams& p)
{
    return dump_fields(p, plasticity_fields());
}

void update_from_json(neuron::NeuronParams& p, const json& j)
{
    if (!j.is_object()) throw SpecError("neuron parameters must be an object");
    for (const auto& [k, v] : j.items()) {
        if (load_field(p, neuron_fields(), k, v)) continue;
        if (k == "mode") {
            const auto m = v.get<std::string>();
            if (m == "full")
                p.mode = neuron::MembraneMode::Full;
            else if (m == "reduced")
                p.mode = neuron::MembraneMode::Reduced;
            else
                throw SpecError(fmt::format("unknown membrane mode '{}'", m));
            continue;
        }
        throw SpecError(fmt::format("unknown neuron parameter '{}'", k));
    }
}

void update_from_json(synapse::SynapseParams& p, const json& j)
{
    if (!j.is_object()) throw SpecError("synapse parameters must be an object");
    for (const auto& [k, v] : j.items()) {
        if (load_field(p, synapse_fields(), k, v)) continue;
        if (k == "sign") {
            p.sign = sign_from(v.get<std::string>());
        } else if (k == "nmda_gated") {
            p.nmda_gated = v.get<bool>();
        } else if (k == "conductance") {
            p.conductance = v.get<bool>();
        } else if (k == "kernel") {
            const auto s = v.get<std::string>();
            if (s == "linear")
                p.kernel = synapse::Kernel::Linear;
            else if (s == "facilitating")
                p.kernel = synapse::Kernel::Facilitating;
            else
                throw SpecError(fmt::format("unknown synapse kernel '{}'", s));
        } else {
            throw SpecError(fmt::format("unknown synapse parameter '{}'", k));
        }
    }
}

void update_from_json(plasticity::PlasticityParams& p, const json& j)
{
    if (!j.is_object()) throw SpecError("plasticity parameters must be an object");
    for (const auto& [k, v] : j.items())
        if (!load_field(p, plasticity_fields(), k, v))
            throw SpecError(fmt::format("unknown plasticity parameter '{}'", k));
}

json to_json(const NetworkSpec& spec)
{
    json pops = json::array();
    for (const auto& p : spec.populations) {
        json slots = json::array();
        for (const auto& s : p.slots) {
            json js = {{"name", s.name}, {"synapse", to_json(s.synapse)}};
            if (s.plasticity) js["plasticity"] = to_json(*s.plasticity);
            slots.push_back(std::move(js));
        }
        pops.push_back({{"name", p.name},
                        {"size", p.size},
                        {"neuron", to_json(p.neuron)},
                        {"slots", std::move(slots)}});
    }
    json conns = json::array();
    for (const auto& c : spec.connections) {
        json jc = {{"src", c.src},
                   {"dst", c.dst},
                   {"pattern", pattern_name(c.pattern)},
                   {"weight", c.weight},
                   {"sign", sign_name(c.sign)},
                   {"slot", c.slot}};
        if (c.allow_self) jc["allow_self"] = true;
        if (c.pattern == Pattern::Offsets) {
            jc["offsets"] = c.offsets;
            jc["wrap"] = c.wrap;
        }
        if (c.pattern == Pattern::Explicit) {
            json pairs = json::array();
            for (const auto& [s, d] : c.pairs) pairs.push_back({s, d});
            jc["pairs"] = std::move(pairs);
        }
        conns.push_back(std::move(jc));
    }
    return {{"schema", "ncsim.network/1"},
            {"populations", std::move(pops)},
            {"connections", std::move(conns)}};
}

NetworkSpec network_from_json(const json& j)
{
    try {
        if (j.contains("schema") && j.at("schema") != "ncsim.network/1")
            throw SpecError(fmt::format("unsupported network schema {}",
                                        j.at("schema").dump()));
        check_keys(j, "network", {"schema", "populations", "connections"});
        NetworkSpec net;
        const auto& pops = require_key(j, "populations", "network");
        if (!pops.is_array()) throw SpecError("network: 'populations' must be an array");
        for (std::size_t i = 0; i < pops.size(); ++i) {
            const auto& jp = pops[i];
            const auto where = fmt::format("populations[{}]", i);
            check_keys(jp, where, {"name", "size", "neuron", "slots"});
            PopulationSpec p;
            p.name = require_key(jp, "name", where).get<std::string>();
            const auto size = require_key(jp, "size", where).get<long long>();
            if (size < 1) throw SpecError(where + ": size must be >= 1");
            p.size = static_cast<std::uint32_t>(size);
            try {
                if (jp.contains("neuron")) update_from_json(p.neuron, jp.at("neuron"));
            } catch (const SpecError& e) {
                throw SpecError(where + ".neuron: " + e.what());
            }
            if (jp.contains("slots")) {
                for (const auto& js : jp.at("slots")) {
                    check_keys(js, where + ".slots", {"name", "synapse", "plasticity"});
                    SynapseSlot s;
                    s.name = require_key(js, "name", where + ".slots").get<std::string>();
                    try {
                        if (js.contains("synapse")) update_from_json(s.synapse, js.at("synapse"));
                        if (js.contains("plasticity")) {
                            plasticity::PlasticityParams pp;
                            update_from_json(pp, js.at("plasticity"));
                            s.plasticity = pp;
                        }
                    } catch (const SpecError& e) {
                        throw SpecError(where + ".slots[" + s.name + "]: " + e.what());
                    }
                    p.slots.push_back(std::move(s));
                }
            }
            try {
                net = add_population(std::move(net), std::move(p));
            } catch (const SpecError& e) {
                throw SpecError(where + ": " + e.what());
            }
        }
        if (j.contains("connections")) {
            const auto& conns = j.at("connections");
            for (std::size_t i = 0; i < conns.size(); ++i) {
                const auto& jc = conns[i];
                const auto where = fmt::format("connections[{}]", i);
                check_keys(jc, where, {"src", "dst", "pattern", "slot", "weight", "sign",
                                       "allow_self", "wrap", "offsets", "pairs"});
                ConnectionSpec c;
                c.src = require_key(jc, "src", where).get<std::string>();
                c.dst = require_key(jc, "dst", where).get<std::string>();
                if (jc.contains("pattern")) c.pattern = pattern_from(jc.at("pattern").get<std::string>());
                c.slot = require_key(jc, "slot", where).get<std::string>();
                c.weight = jc.value("weight", c.weight);
                c.sign = sign_from(jc.value("sign", std::string("excitatory")));
                c.allow_self = jc.value("allow_self", false);
                c.wrap = jc.value("wrap", false);
                if (jc.contains("offsets")) c.offsets = jc.at("offsets").get<std::vector<int>>();
                if (jc.contains("pairs"))
                    for (const auto& pr : jc.at("pairs"))
                        c.pairs.emplace_back(pr.at(0).get<std::uint32_t>(),
                                             pr.at(1).get<std::uint32_t>());
                try {
                    net = connect(std::move(net), c);
                } catch (const SpecError& e) {
                    throw SpecError(where + ": " + e.what());
                }
            }
        }
        net.validate();
        return net;
    } catch (const json::exception& e) {
        throw SpecError(std::string("network: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw SpecError(std::string("network: ") + e.what());
    }
}

}  // namespace ncsim::network
