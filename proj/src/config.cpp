#include "ncsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ncsim/rng.hpp"
#include "ncsim/spike_trains.hpp"

namespace ncsim::config {

using nlohmann::json;

namespace {

struct Ctx {
    std::string source;

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const
    {
        throw ConfigError(fmt::format("{}: {}: {}", source, path, msg));
    }

    void keys(const json& j, const std::string& path,
              std::initializer_list<const char*> allowed) const
    {
        if (!j.is_object()) fail(path, "expected an object");
        for (const auto& [k, v] : j.items())
            if (std::none_of(allowed.begin(), allowed.end(),
                             [&](const char* a) { return k == a; }))
                fail(path, fmt::format("unknown key '{}'", k));
    }

    const json& need(const json& j, const std::string& path, const char* key) const
    {
        if (!j.contains(key)) fail(path, fmt::format("missing key '{}'", key));
        return j.at(key);
    }

    double number(const json& j, const std::string& path) const
    {
        if (!j.is_number()) fail(path, "expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v)) fail(path, "must be finite");
        return v;
    }

    double number_or(const json& j, const std::string& path, const char* key,
                     double fallback) const
    {
        return j.contains(key) ? number(j.at(key), path + "." + key) : fallback;
    }

    std::uint64_t index(const json& j, const std::string& path) const
    {
        if (!j.is_number_integer() || j.get<long long>() < 0)
            fail(path, "expected a non-negative integer");
        return j.get<std::uint64_t>();
    }

    std::string string(const json& j, const std::string& path) const
    {
        if (!j.is_string()) fail(path, "expected a string");
        return j.get<std::string>();
    }

    bool boolean(const json& j, const std::string& path) const
    {
        if (!j.is_boolean()) fail(path, "expected true or false");
        return j.get<bool>();
    }
};

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

std::vector<double> train(const Ctx& c, const json& spec, const std::string& path,
                          bool poisson, double t_end, std::uint64_t seed)
{
    c.keys(spec, path, {"rate", "t_start", "t_stop"});
    const double rate = c.number(c.need(spec, path, "rate"), path + ".rate");
    const double t0 = c.number_or(spec, path, "t_start", 0.0);
    const double t1 = c.number_or(spec, path, "t_stop", t_end);
    if (rate < 0) c.fail(path + ".rate", "must be >= 0");
    if (t0 < 0 || t1 < t0) c.fail(path, "need 0 <= t_start <= t_stop");
    if (!poisson && rate == 0) return {};
    return poisson ? engine::poisson_train(rate, t0, t1, seed)
                   : engine::regular_train(rate, t0, t1);
}

engine::StimulusChannel channel(const Ctx& c, const json& j, const std::string& path,
                                std::uint32_t neuron, double t_end,
                                std::uint64_t seed)
{
    engine::StimulusChannel ch;
    ch.neuron = neuron;
    ch.weight = c.number_or(j, path, "weight", ch.weight);
    int sources = 0;
    if (j.contains("times")) {
        ++sources;
        const auto& t = j.at("times");
        if (!t.is_array()) c.fail(path + ".times", "expected an array");
        for (std::size_t i = 0; i < t.size(); ++i)
            ch.times.push_back(c.number(t[i], fmt::format("{}.times[{}]", path, i)));
        for (std::size_t i = 0; i < ch.times.size(); ++i)
            if (ch.times[i] < 0 || (i && ch.times[i] < ch.times[i - 1]))
                c.fail(path + ".times", "spike times must be >= 0 and sorted");
    }
    if (j.contains("poisson")) {
        ++sources;
        ch.times = train(c, j.at("poisson"), path + ".poisson", true, t_end, seed);
    }
    if (j.contains("regular")) {
        ++sources;
        ch.times = train(c, j.at("regular"), path + ".regular", false, t_end, seed);
    }
    if (sources != 1) c.fail(path, "give exactly one of 'times', 'poisson', 'regular'");
    return ch;
}

void parse_freeform(const Ctx& c, const json& doc, Experiment& e)
{
    // network
    const auto& jn = c.need(doc, "$", "network");
    json net_doc;
    std::string net_src = "network";
    if (jn.is_string()) {
        const auto path = e.base_dir / jn.get<std::string>();
        std::ifstream in(path);
        if (!in) c.fail("network", fmt::format("cannot open '{}'", path.string()));
        std::stringstream ss;
        ss << in.rdbuf();
        const auto text = ss.str();
        try {
            net_doc = json::parse(text);
        } catch (const json::parse_error& err) {
            const auto [l, col] = line_col(text, err.byte ? err.byte - 1 : 0);
            throw ConfigError(fmt::format("{}:{}:{}: JSON syntax error", path.string(), l, col));
        }
        net_src = path.string();
    } else if (jn.is_object()) {
        net_doc = jn;
    } else {
        c.fail("network", "expected an object or a file name");
    }
    try {
        e.network = network::network_from_json(net_doc);
    } catch (const std::exception& err) {
        throw ConfigError(fmt::format("{}: {}: {}", c.source, net_src, err.what()));
    }

    // simulation
    const json sim = doc.value("simulation", json::object());
    c.keys(sim, "simulation", {"dt", "t_end", "trace_every", "record_events",
                               "rate_window", "traces", "probes", "arbiter"});
    auto& s = e.sim;
    s.seed = e.seed;
    s.dt = c.number_or(sim, "simulation", "dt", s.dt);
    s.t_end = c.number_or(sim, "simulation", "t_end", s.t_end);
    if (!(s.dt > 0)) c.fail("simulation.dt", "must be > 0");
    if (!(s.t_end > 0)) c.fail("simulation.t_end", "must be > 0");
    if (sim.contains("trace_every")) {
        s.trace_every = c.index(sim["trace_every"], "simulation.trace_every");
        if (s.trace_every == 0) c.fail("simulation.trace_every", "must be >= 1");
    }
    if (sim.contains("record_events"))
        s.record_events = c.boolean(sim["record_events"], "simulation.record_events");
    e.rate_window = c.number_or(sim, "simulation", "rate_window", e.rate_window);
    if (!(e.rate_window > 0)) c.fail("simulation.rate_window", "must be > 0");
    if (sim.contains("traces")) {
        const auto& tr = sim["traces"];
        if (!tr.is_array()) c.fail("simulation.traces", "expected an array");
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const auto p = fmt::format("simulation.traces[{}]", i);
            c.keys(tr[i], p, {"quantity", "population", "index"});
            s.traces.push_back({c.string(c.need(tr[i], p, "quantity"), p + ".quantity"),
                                c.string(c.need(tr[i], p, "population"), p + ".population"),
                                static_cast<std::uint32_t>(
                                    tr[i].contains("index") ? c.index(tr[i]["index"], p + ".index") : 0)});
        }
    }
    if (sim.contains("probes")) {
        const auto& pr = sim["probes"];
        if (!pr.is_array()) c.fail("simulation.probes", "expected an array");
        for (std::size_t i = 0; i < pr.size(); ++i) {
            const auto p = fmt::format("simulation.probes[{}]", i);
            c.keys(pr[i], p, {"population", "synapse"});
            s.probes.push_back({c.string(c.need(pr[i], p, "population"), p + ".population"),
                                static_cast<std::uint32_t>(c.index(c.need(pr[i], p, "synapse"), p + ".synapse"))});
        }
    }
    if (sim.contains("arbiter")) {
        const auto& a = sim["arbiter"];
        c.keys(a, "simulation.arbiter", {"service_time", "queue_capacity"});
        s.arbiter.service_time = c.number_or(a, "simulation.arbiter", "service_time", s.arbiter.service_time);
        if (a.contains("queue_capacity"))
            s.arbiter.queue_capacity = c.index(a["queue_capacity"], "simulation.arbiter.queue_capacity");
        try {
            s.arbiter.validate();
        } catch (const std::exception& err) {
            c.fail("simulation.arbiter", err.what());
        }
    }

    // stimuli
    const json stims = doc.value("stimuli", json::array());
    if (!stims.is_array()) c.fail("stimuli", "expected an array");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < stims.size(); ++i) {
        const auto p = fmt::format("stimuli[{}]", i);
        const auto& js = stims[i];
        c.keys(js, p, {"label", "population", "slot", "channels", "neurons", "weight",
                       "times", "poisson", "regular"});
        engine::Stimulus st;
        st.label = js.contains("label") ? c.string(js["label"], p + ".label") : fmt::format("stim{}", i);
        if (!labels.insert(st.label).second) c.fail(p + ".label", "duplicate label");
        st.population = c.string(c.need(js, p, "population"), p + ".population");
        if (js.contains("slot")) st.slot = c.string(js["slot"], p + ".slot");
        std::uint32_t pop_size = 0;
        try {
            const auto& pop = e.network.populations[e.network.population_index(st.population)];
            pop_size = pop.size;
            pop.slot_index(st.slot);
        } catch (const std::exception& err) {
            c.fail(p, err.what());
        }
        auto check_neuron = [&](std::uint64_t n, const std::string& where) {
            if (n >= pop_size)
                c.fail(where, fmt::format("neuron {} outside population '{}' of size {}", n,
                                          st.population, pop_size));
            return static_cast<std::uint32_t>(n);
        };
        if (js.contains("channels")) {
            if (js.contains("neurons")) c.fail(p, "give either 'channels' or 'neurons'");
            for (const char* k : {"weight", "times", "poisson", "regular"})
                if (js.contains(k))
                    c.fail(p, fmt::format("'{}' belongs inside each channel when 'channels' is used", k));
            const auto& chs = js["channels"];
            if (!chs.is_array()) c.fail(p + ".channels", "expected an array");
            for (std::size_t k = 0; k < chs.size(); ++k) {
                const auto cp = fmt::format("{}.channels[{}]", p, k);
                c.keys(chs[k], cp, {"neuron", "weight", "times", "poisson", "regular"});
                const auto n = check_neuron(c.index(c.need(chs[k], cp, "neuron"), cp + ".neuron"),
                                            cp + ".neuron");
                st.channels.push_back(channel(c, chs[k], cp, n, s.t_end,
                                              rng::derive_seed(e.seed, st.label, k)));
            }
        } else {
            // one channel per listed neuron, sharing a template
            const auto& jn2 = c.need(js, p, "neurons");
            std::vector<std::uint32_t> ns;
            if (jn2.is_string() && jn2.get<std::string>() == "all") {
                for (std::uint32_t k = 0; k < pop_size; ++k) ns.push_back(k);
            } else if (jn2.is_array()) {
                for (std::size_t k = 0; k < jn2.size(); ++k)
                    ns.push_back(check_neuron(c.index(jn2[k], fmt::format("{}.neurons[{}]", p, k)),
                                              fmt::format("{}.neurons[{}]", p, k)));
            } else {
                c.fail(p + ".neurons", "expected \"all\" or an array of indices");
            }
            json tmpl = js;
            for (const char* k : {"label", "population", "slot", "neurons"}) tmpl.erase(k);
            for (std::size_t k = 0; k < ns.size(); ++k)
                st.channels.push_back(channel(c, tmpl, p, ns[k], s.t_end,
                                              rng::derive_seed(e.seed, st.label, k)));
        }
        e.stimuli.push_back(std::move(st));
    }

    // current steps
    const json curs = doc.value("currents", json::array());
    if (!curs.is_array()) c.fail("currents", "expected an array");
    for (std::size_t i = 0; i < curs.size(); ++i) {
        const auto p = fmt::format("currents[{}]", i);
        c.keys(curs[i], p, {"population", "neurons", "amplitude", "t_start", "t_stop"});
        engine::CurrentStep cs;
        cs.population = c.string(c.need(curs[i], p, "population"), p + ".population");
        try {
            e.network.population_index(cs.population);
        } catch (const std::exception& err) {
            c.fail(p + ".population", err.what());
        }
        cs.amplitude = c.number(c.need(curs[i], p, "amplitude"), p + ".amplitude");
        cs.t_start = c.number_or(curs[i], p, "t_start", 0.0);
        cs.t_stop = c.number_or(curs[i], p, "t_stop", cs.t_stop);
        if (curs[i].contains("neurons")) {
            const auto& jn2 = curs[i]["neurons"];
            if (!jn2.is_array()) c.fail(p + ".neurons", "expected an array");
            for (std::size_t k = 0; k < jn2.size(); ++k)
                cs.neurons.push_back(static_cast<std::uint32_t>(
                    c.index(jn2[k], fmt::format("{}.neurons[{}]", p, k))));
        }
        e.currents.push_back(std::move(cs));
    }

    try {
        s.validate();
    } catch (const std::exception& err) {
        c.fail("simulation", err.what());
    }
}

Experiment parse_document(json doc, const std::filesystem::path& base_dir,
                          const std::string& source)
{
    Ctx c{source};
    c.keys(doc, "$", {"schema", "name", "seed", "preset", "params", "network",
                      "simulation", "stimuli", "currents"});
    if (doc.contains("schema") && doc["schema"] != kExperimentSchema)
        c.fail("schema", fmt::format("unsupported schema {}, expected \"{}\"",
                                     doc["schema"].dump(), kExperimentSchema));
    Experiment e;
    e.base_dir = base_dir;
    e.source = source;
    if (doc.contains("seed")) e.seed = c.index(doc["seed"], "seed");
    doc["seed"] = e.seed;
    e.name = doc.contains("name") ? c.string(doc["name"], "name") : std::string{};

    if (doc.contains("preset")) {
        e.preset = c.string(doc["preset"], "preset");
        if (!presets::is_preset(e.preset)) {
            std::string ids;
            for (const auto& p : presets::catalog()) ids += (ids.empty() ? "" : ", ") + p.id;
            c.fail("preset", fmt::format("unknown preset '{}' (known: {})", e.preset, ids));
        }
        for (const char* k : {"network", "simulation", "stimuli", "currents"})
            if (doc.contains(k)) c.fail(k, "not allowed together with 'preset'");
        e.params = doc.value("params", json::object());
        try {
            presets::merge_params(e.preset, e.params);
        } catch (const ConfigError& err) {
            throw ConfigError(fmt::format("{}: {}", source, err.what()));
        }
        if (e.name.empty()) e.name = e.preset;
    } else {
        if (doc.contains("params")) c.fail("params", "only valid together with 'preset'");
        parse_freeform(c, doc, e);
        if (e.name.empty()) e.name = "experiment";
    }
    e.document = std::move(doc);
    return e;
}

}  // namespace

Experiment parse_experiment(std::string_view text, const std::filesystem::path& base_dir,
                            const std::string& source)
{
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& err) {
        const auto [l, col] = line_col(text, err.byte ? err.byte - 1 : 0);
        // nlohmann's own position text counts columns differently; keep the reason only
        std::string what = err.what();
        if (auto pos = what.find(": "); pos != std::string::npos) what = what.substr(pos + 2);
        throw ConfigError(fmt::format("{}:{}:{}: JSON {}", source, l, col, what));
    }
    return parse_document(std::move(doc), base_dir, source);
}

Experiment load_experiment(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment(ss.str(), path.parent_path(), path.string());
}

Experiment with_seed(const Experiment& e, std::uint64_t seed)
{
    json doc = e.document;
    doc["seed"] = seed;
    return parse_document(std::move(doc), e.base_dir, e.source);
}

void validate_experiment(const Experiment& e)
{
    if (!e.preset.empty()) {
        presets::merge_params(e.preset, e.params);
        return;
    }
    try {
        engine::SimConfig cfg = e.sim;
        cfg.threads = 1;
        engine::Simulator sim(e.network, cfg, e.stimuli, e.currents);
    } catch (const std::exception& err) {
        throw ConfigError(fmt::format("{}: {}", e.source, err.what()));
    }
}

presets::Artifacts run_experiment(const Experiment& e, int threads, engine::KernelKind kernel)
{
    if (!e.preset.empty()) {
        presets::RunOptions o;
        o.seed = e.seed;
        o.threads = threads;
        o.kernel = kernel;
        o.params = e.params;
        return presets::run_preset(e.preset, o);
    }
    engine::SimConfig cfg = e.sim;
    cfg.threads = threads;
    cfg.kernel = kernel;
    presets::Artifacts a;
    a.rate_window = e.rate_window;
    {
        engine::Simulator sim(e.network, cfg, e.stimuli, e.currents);
        sim.run();
        a.runs.push_back({"main", e.network, sim.take_record()});
    }
    const auto& rec = a.runs.back().record;
    json rates = json::object();
    for (std::uint32_t p = 0; p < e.network.populations.size(); ++p) {
        const auto& pop = e.network.populations[p];
        rates[pop.name] = engine::rate_estimate(rec, p, 0.0, rec.t_end, {}, pop.size);
    }
    json metrics = {{"mean_rates", rates}, {"spikes", rec.spikes.size()}};
    presets::finalize_summary(a, e.name, e.seed, e.document, std::move(metrics));
    a.summary["preset"] = nullptr;
    return a;
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const Experiment& e)
{
    // json objects are key-sorted, so dump() is canonical
    return fmt::format("fnv1a64:{:016x}", fnv1a64(e.document.dump()));
}

json metadata(const Experiment& e, const presets::Artifacts& a)
{
    return {{"schema", kMetaSchema},
            {"experiment", e.name},
            {"preset", e.preset.empty() ? json(nullptr) : json(e.preset)},
            {"seed", e.seed},
            {"config_hash", config_hash(e)},
            {"threads", a.summary.value("threads", 1)},
            {"warnings", a.summary.value("warnings", json::array())}};
}

}  // namespace ncsim::config
