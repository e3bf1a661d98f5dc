#include "ncsim/presets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ncsim/plasticity.hpp"
#include "ncsim/rng.hpp"
#include "ncsim/spike_trains.hpp"

namespace ncsim::presets {

using nlohmann::json;
using engine::Stimulus;
using engine::StimulusChannel;

// ---------------------------------------------------------------------------
// analysis

IsiStats isi_stats(const std::vector<double>& t, double t_from)
{
    std::vector<double> isi;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i - 1] >= t_from) isi.push_back(t[i] - t[i - 1]);
    IsiStats s;
    s.n = isi.size();
    if (isi.empty()) return s;
    s.mean = std::accumulate(isi.begin(), isi.end(), 0.0) / static_cast<double>(s.n);
    if (s.n < 2) return s;
    double var = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) {
        const double d = isi[i] - s.mean;
        var += d * d;
        if (i + 1 < s.n) cov += d * (isi[i + 1] - s.mean);
    }
    var /= static_cast<double>(s.n);
    s.cv = std::sqrt(var) / s.mean;
    if (s.n >= 3 && var > 0.0) s.lag1 = cov / static_cast<double>(s.n - 1) / var;
    return s;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    const auto n = static_cast<double>(std::min(x.size(), y.size()));
    if (n < 2) return {};
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    return f;
}

ExpFit exp_decay_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = std::min(x.size(), y.size());
    ExpFit best;
    if (n == 0) return best;
    // For fixed rate the amplitude is linear least squares; scan the rate.
    auto sse = [&](double lam, double* amp) {
        double num = 0, den = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-lam * x[i]);
            num += y[i] * e;
            den += e * e;
        }
        const double a = den > 0 ? num / den : 0.0;
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - a * std::exp(-lam * x[i]);
            s += r * r;
        }
        if (amp) *amp = a;
        return s;
    };
    double lo = std::log(1e-4), hi = std::log(50.0);
    double best_l = lo, best_s = sse(std::exp(lo), nullptr);
    constexpr int kGrid = 400;
    for (int k = 1; k <= kGrid; ++k) {
        const double l = lo + (hi - lo) * k / kGrid;
        const double s = sse(std::exp(l), nullptr);
        if (s < best_s) best_s = s, best_l = l;
    }
    const double step = (hi - lo) / kGrid;
    double a = best_l - step, b = best_l + step;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 80; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (sse(std::exp(c), nullptr) < sse(std::exp(d), nullptr))
            b = d;
        else
            a = c;
    }
    best.rate = std::exp(0.5 * (a + b));
    const double s = sse(best.rate, &best.amplitude);
    const double my = std::accumulate(y.begin(), y.begin() + n, 0.0) / static_cast<double>(n);
    double sst = 0;
    for (std::size_t i = 0; i < n; ++i) sst += (y[i] - my) * (y[i] - my);
    best.r2 = sst > 0 ? 1.0 - s / sst : (s == 0 ? 1.0 : 0.0);
    return best;
}

namespace {

// ---------------------------------------------------------------------------
// parameter plumbing

json merge_strict(const json& base, const json& over, const std::string& path)
{
    auto where = [&] { return path.empty() ? std::string("params") : "params." + path; };
    if (base.is_object()) {
        if (!over.is_object()) throw ConfigError(where() + ": expected an object");
        json out = base;
        for (const auto& [k, v] : over.items()) {
            const auto sub = path.empty() ? k : path + "." + k;
            if (!base.contains(k))
                throw ConfigError(fmt::format("params.{}: unknown parameter", sub));
            out[k] = merge_strict(base[k], v, sub);
        }
        return out;
    }
    if (base.is_number() && !over.is_number())
        throw ConfigError(where() + ": expected a number");
    if (base.is_boolean() && !over.is_boolean())
        throw ConfigError(where() + ": expected true or false");
    if (base.is_string() && !over.is_string())
        throw ConfigError(where() + ": expected a string");
    if (base.is_array() && !over.is_array())
        throw ConfigError(where() + ": expected an array");
    return over;
}

double num(const json& p, const std::string& key)
{
    const double v = p.at(key).get<double>();
    if (!std::isfinite(v)) throw ConfigError(fmt::format("params.{}: must be finite", key));
    return v;
}

double positive(const json& p, const std::string& key)
{
    const double v = num(p, key);
    if (!(v > 0)) throw ConfigError(fmt::format("params.{}: must be > 0", key));
    return v;
}

double nonneg(const json& p, const std::string& key)
{
    const double v = num(p, key);
    if (v < 0) throw ConfigError(fmt::format("params.{}: must be >= 0", key));
    return v;
}

std::uint32_t count(const json& p, const std::string& key, std::uint32_t min = 0)
{
    const double v = num(p, key);
    if (v != std::floor(v) || v < min || v > 1e7)
        throw ConfigError(fmt::format("params.{}: expected an integer >= {}", key, min));
    return static_cast<std::uint32_t>(v);
}

template <class P>
P object_params(const json& p, const std::string& key, P out = {})
{
    try {
        network::update_from_json(out, p.at(key));
        out.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("params.{}: {}", key, e.what()));
    }
    return out;
}

engine::SimConfig sim_config(const RunOptions& o, const json& p, double t_end)
{
    engine::SimConfig c;
    c.dt = positive(p, "dt");
    c.t_end = t_end;
    c.seed = o.seed;
    c.threads = o.threads;
    c.kernel = o.kernel;
    return c;
}

Run run_to_end(std::string name, network::NetworkSpec net, engine::SimConfig cfg,
               std::vector<Stimulus> stim, std::vector<engine::CurrentStep> cur = {})
{
    engine::Simulator sim(net, std::move(cfg), std::move(stim), std::move(cur));
    sim.run();
    return {std::move(name), std::move(net), sim.take_record()};
}

void trace_window(const engine::SpikeRecord& r, std::uint32_t trace, double t0,
                  double t1, std::vector<double>& ts, std::vector<double>& vs)
{
    for (const auto& s : r.traces)
        if (s.trace == trace && s.t >= t0 && s.t < t1) {
            ts.push_back(s.t);
            vs.push_back(s.value);
        }
}

double mean_of(const std::vector<double>& v)
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------------------
// fig6-std: one neuron per depression setting, each driven by a regular
// train through its own depressing synapse.

json fig6_defaults()
{
    synapse::SynapseParams sp;
    sp.w_rest = 0.72;
    sp.tau_rec = 0.3;
    json syn = network::to_json(sp);
    syn.erase("d_std");
    return {{"dt", 1e-4},
            {"rate", 50.0},
            {"t_start", 0.01},
            {"duration", 1.0},
            {"tail", 0.05},
            {"d_std", {0.002, 0.005, 0.008}},
            {"n_check", 10},
            {"trace_every", 1},
            {"synapse", syn},
            {"neuron", network::to_json(neuron::NeuronParams{})}};
}

Artifacts fig6(const RunOptions& o, const json& p)
{
    const double rate = positive(p, "rate"), t0 = nonneg(p, "t_start"),
                 dur = positive(p, "duration"), tail = nonneg(p, "tail");
    const auto n_check = count(p, "n_check", 2);
    const auto np = object_params<neuron::NeuronParams>(p, "neuron");
    const auto sp = object_params<synapse::SynapseParams>(p, "synapse");
    std::vector<double> d;
    for (const auto& v : p.at("d_std")) {
        if (!v.is_number() || v.get<double>() < 0)
            throw ConfigError("params.d_std: expected non-negative numbers");
        d.push_back(v.get<double>());
    }
    if (d.empty()) throw ConfigError("params.d_std: need at least one setting");

    network::PopulationSpec pop;
    pop.name = "post";
    pop.size = static_cast<std::uint32_t>(d.size());
    pop.neuron = np;
    std::vector<Stimulus> stim;
    const auto train = engine::regular_train(rate, t0, t0 + dur);
    for (std::size_t k = 0; k < d.size(); ++k) {
        auto s = sp;
        s.d_std = d[k];
        pop.slots.push_back({fmt::format("std{}", k), s, std::nullopt});
        Stimulus st;
        st.label = fmt::format("train{}", k);
        st.population = "post";
        st.slot = pop.slots.back().name;
        st.channels = {{static_cast<std::uint32_t>(k), sp.w_rest, train}};
        stim.push_back(std::move(st));
    }
    const auto net = network::add_population({}, pop);
    const auto addr = engine::stimulus_addresses(net, stim);

    auto cfg = sim_config(o, p, t0 + dur + tail);
    cfg.trace_every = count(p, "trace_every", 1);
    for (std::size_t k = 0; k < d.size(); ++k) {
        cfg.traces.push_back({"i_mem", "post", static_cast<std::uint32_t>(k)});
        cfg.traces.push_back({"v_w", "post", addr[k][0]});
        cfg.probes.push_back({"post", addr[k][0]});
    }

    Artifacts a;
    a.runs.push_back(run_to_end("std", net, cfg, stim));
    const auto& rec = a.runs.back().record;

    Table tab{"epsc", {"setting", "d_std", "index", "t", "amplitude", "v_w"}, {}};
    json settings = json::array();
    bool all_decreasing = true;
    for (std::size_t k = 0; k < d.size(); ++k) {
        std::vector<double> amps;
        for (const auto& pr : rec.pulses) {
            if (pr.synapse != addr[k][0]) continue;
            tab.rows.push_back({double(k), d[k], double(amps.size()), pr.t,
                                pr.amplitude(), pr.weight});
            amps.push_back(pr.amplitude());
        }
        bool decreasing = amps.size() >= n_check;
        for (std::size_t i = 1; decreasing && i < n_check; ++i)
            decreasing = amps[i] < amps[i - 1];
        if (d[k] > 0) all_decreasing = all_decreasing && decreasing;

        std::vector<double> ts, vs;
        trace_window(rec, static_cast<std::uint32_t>(2 * k), t0 + 0.5 * dur, t0 + dur, ts, vs);
        const auto fit = linear_fit(ts, vs);
        settings.push_back(
            {{"d_std", d[k]},
             {"pulses", amps.size()},
             {"amplitudes", std::vector<double>(amps.begin(), amps.begin() + std::min<std::size_t>(n_check, amps.size()))},
             {"strictly_decreasing", decreasing},
             {"late_slope", fit.slope},
             {"late_mean_i_mem", mean_of(vs)},
             {"post_spikes", engine::spike_times_of(rec, 0, static_cast<std::uint32_t>(k)).size()}});
    }
    const auto largest = static_cast<std::size_t>(
        std::max_element(d.begin(), d.end()) - d.begin());
    a.tables.push_back(std::move(tab));
    json m = {{"settings", settings},
              {"decreasing_when_depressing", all_decreasing},
              {"largest_setting", largest},
              {"largest_late_slope", settings[largest]["late_slope"]},
              {"largest_late_trend_negative", settings[largest]["late_slope"].get<double>() < 0}};
    a.summary = std::move(m);
    return a;
}

// ---------------------------------------------------------------------------
// fig7-bursting: step current into an adapting neuron, bursting and stable
// adaptation settings side by side.

json fig7_defaults()
{
    neuron::NeuronParams b;
    b.tau_ahp = 0.5;
    b.g_ahp = 12.43;
    b.i_ca_pulse = 150e-12;
    b.i_reset = 2.6e-9;
    auto s = b;
    s.g_ahp = 0.2466;
    return {{"dt", 1e-4},
            {"duration", 4.0},
            {"i_in", 384e-12},
            {"t_on", 0.0},
            {"analysis_start", 1.0},
            {"trace_every", 10},
            {"bursting", network::to_json(b)},
            {"stable", network::to_json(s)}};
}

Artifacts fig7(const RunOptions& o, const json& p)
{
    const double dur = positive(p, "duration"), i_in = num(p, "i_in"),
                 t_on = nonneg(p, "t_on"), from = nonneg(p, "analysis_start");
    network::NetworkSpec net;
    std::vector<engine::CurrentStep> cur;
    const std::vector<std::string> names = {"bursting", "stable"};
    for (const auto& n : names) {
        network::PopulationSpec pop;
        pop.name = n;
        pop.neuron = object_params<neuron::NeuronParams>(p, n);
        net = network::add_population(std::move(net), pop);
        cur.push_back({n, {}, i_in, t_on});
    }
    auto cfg = sim_config(o, p, dur);
    cfg.trace_every = count(p, "trace_every", 1);
    for (const auto& n : names) {
        cfg.traces.push_back({"i_mem", n, 0});
        cfg.traces.push_back({"i_ahp", n, 0});
    }
    Artifacts a;
    a.runs.push_back(run_to_end("step", net, cfg, {}, cur));
    const auto& rec = a.runs.back().record;
    json m = json::object();
    Table tab{"isi", {"population", "index", "t", "isi"}, {}};
    for (std::uint32_t k = 0; k < names.size(); ++k) {
        const auto t = engine::spike_times_of(rec, k, 0);
        const auto st = isi_stats(t, from);
        for (std::size_t i = 1; i < t.size(); ++i)
            tab.rows.push_back({double(k), double(i - 1), t[i], t[i] - t[i - 1]});
        const double first = t.size() >= 2 ? t[1] - t[0] : 0.0;
        const double adapt = (first > 0 && st.mean > 0) ? 1.0 - first / st.mean : 0.0;
        m[names[k]] = {{"spikes", t.size()},
                       {"isi_count", st.n},
                       {"isi_mean", st.mean},
                       {"isi_cv", st.cv},
                       {"isi_lag1", st.lag1},
                       {"rate", st.mean > 0 ? 1.0 / st.mean : 0.0},
                       {"adaptation_index", adapt},
                       {"pattern", st.cv > 0.5 && st.lag1 < 0 ? "bursting" : "tonic"}};
    }
    a.tables.push_back(std::move(tab));
    a.summary = std::move(m);
    return a;
}

// ---------------------------------------------------------------------------
// fig9 and fig10: one plastic synapse per neuron, post activity set by a
// teacher input, Poisson everywhere.

json transition_defaults()
{
    synapse::SynapseParams teacher;
    plasticity::PlasticityParams pp;
    pp.theta_m = 2e-9;
    pp.delta_w = 0.03;
    pp.drift_rate = 0.1;
    pp.anchor_calcium_thresholds();
    return {{"dt", 1e-4},
            {"pre_rate", 60.0},
            {"post_rate", 30.0},
            {"duration", 0.4},
            {"teacher_weight", 0.68},
            {"neuron", network::to_json(neuron::NeuronParams{})},
            {"teacher_synapse", network::to_json(teacher)},
            {"plastic_synapse", network::to_json(synapse::SynapseParams{})},
            {"plasticity", network::to_json(pp)}};
}

struct TransitionSetup {
    plasticity::TransitionProtocol proto;
    double pre_rate, post_rate, duration, teacher_weight, teacher_rate;
};

TransitionSetup transition_setup(const RunOptions& o, const json& p)
{
    TransitionSetup s;
    s.proto.neuron = object_params<neuron::NeuronParams>(p, "neuron");
    s.proto.teacher = object_params<synapse::SynapseParams>(p, "teacher_synapse");
    s.proto.plastic_synapse = object_params<synapse::SynapseParams>(p, "plastic_synapse");
    s.proto.plasticity = object_params<plasticity::PlasticityParams>(p, "plasticity");
    s.proto.dt = positive(p, "dt");
    s.pre_rate = nonneg(p, "pre_rate");
    s.post_rate = nonneg(p, "post_rate");
    s.duration = positive(p, "duration");
    s.teacher_weight = num(p, "teacher_weight");
    s.proto.teacher.w_rest = s.teacher_weight;
    const auto& pp = s.proto.plasticity;
    // Calibrated with the plastic input at its nominal rate and weight
    // halfway between the rails, so neither start condition is favoured.
    s.teacher_rate =
        s.post_rate > 0
            ? plasticity::calibrate_teacher_rate(s.proto, s.post_rate, s.duration,
                                                 rng::derive_seed(o.seed, "calibrate"),
                                                 s.pre_rate, 0.5 * (pp.w_lo + pp.w_hi))
            : 0.0;
    return s;
}

network::PopulationSpec transition_population(const TransitionSetup& s,
                                              std::string name, std::uint32_t n)
{
    network::PopulationSpec pop;
    pop.name = std::move(name);
    pop.size = n;
    pop.neuron = s.proto.neuron;
    pop.slots = {{"teacher", s.proto.teacher, std::nullopt},
                 {"plastic", s.proto.plastic_synapse, s.proto.plasticity}};
    return pop;
}

void transition_stimuli(const TransitionSetup& s, const std::string& pop,
                        std::uint32_t n, double w0, double pre_rate,
                        std::uint64_t seed, unsigned cond,
                        std::vector<Stimulus>& out)
{
    Stimulus teach{"teacher_" + pop, pop, "teacher", {}};
    Stimulus pre{"pre_" + pop, pop, "plastic", {}};
    for (std::uint32_t i = 0; i < n; ++i) {
        teach.channels.push_back(
            {i, s.teacher_weight,
             engine::poisson_train(s.teacher_rate, 0.0, s.duration,
                                   rng::derive_seed(seed, "teacher", cond, i))});
        pre.channels.push_back(
            {i, w0,
             engine::poisson_train(pre_rate, 0.0, s.duration,
                                   rng::derive_seed(seed, "pre", cond, i))});
    }
    out.push_back(std::move(teach));
    out.push_back(std::move(pre));
}

json fig9_defaults()
{
    auto j = transition_defaults();
    j["trials"] = 200;
    j["control_pre_rate"] = 0.0;
    return j;
}

Artifacts fig9(const RunOptions& o, const json& p)
{
    const auto s = transition_setup(o, p);
    const auto n = count(p, "trials", 1);
    const double control_rate = nonneg(p, "control_pre_rate");
    const auto& pp = s.proto.plasticity;

    network::NetworkSpec net;
    net = network::add_population(std::move(net), transition_population(s, "from_hi", n));
    net = network::add_population(std::move(net), transition_population(s, "from_lo", n));

    Artifacts a;
    Table tab{"trials", {"control", "start_high", "trial", "w_final", "post_rate", "transition"}, {}};
    json m = {{"teacher_rate", s.teacher_rate}, {"trials", n}};
    for (int control = 0; control < 2; ++control) {
        const double rate = control ? control_rate : s.pre_rate;
        std::vector<Stimulus> stim;
        transition_stimuli(s, "from_hi", n, pp.w_hi, rate, o.seed, 0, stim);
        transition_stimuli(s, "from_lo", n, pp.w_lo, rate, o.seed, 1, stim);
        engine::Simulator sim(net, sim_config(o, p, s.duration), stim);
        sim.run();
        std::size_t ltd = 0, ltp = 0;
        double post = 0;
        for (std::uint32_t cond = 0; cond < 2; ++cond) {
            for (std::uint32_t i = 0; i < n; ++i) {
                const double w = *sim.plastic_weight(cond, sim.stimulus_address(2 * cond + 1, i));
                const bool high = w > pp.theta_w;
                const bool flipped = cond == 0 ? !high : high;
                (cond == 0 ? ltd : ltp) += flipped;
                const double r = engine::rate_estimate(sim.record(), cond, 0.0, s.duration, i);
                post += r;
                tab.rows.push_back({double(control), double(cond == 0), double(i), w, r,
                                    double(flipped)});
            }
        }
        const json block = {{"pre_rate", rate},
                            {"ltd", ltd},
                            {"ltp", ltp},
                            {"ltd_fraction", double(ltd) / n},
                            {"ltp_fraction", double(ltp) / n},
                            {"mean_post_rate", post / (2.0 * n)}};
        m[control ? "control" : "stimulated"] = block;
        a.runs.push_back({control ? "control" : "stimulated", net, sim.take_record()});
    }
    m["control_transitions"] = m["control"]["ltd"].get<std::size_t>() + m["control"]["ltp"].get<std::size_t>();
    m["ltd_majority"] = 2 * m["stimulated"]["ltd"].get<std::size_t>() > n;
    m["ltp_minority"] = 2 * m["stimulated"]["ltp"].get<std::size_t>() < n;
    a.tables.push_back(std::move(tab));
    a.summary = std::move(m);
    return a;
}

json fig10_defaults()
{
    auto j = transition_defaults();
    j["neurons"] = 16;
    j["traced"] = 4;
    j["start_high"] = true;
    return j;
}

Artifacts fig10(const RunOptions& o, const json& p)
{
    const auto s = transition_setup(o, p);
    const auto n = count(p, "neurons", 1);
    const auto traced = std::min(count(p, "traced"), n);
    const bool start_high = p.at("start_high").get<bool>();
    const auto& pp = s.proto.plasticity;

    const auto net = network::add_population({}, transition_population(s, "post", n));
    std::vector<Stimulus> stim;
    transition_stimuli(s, "post", n, start_high ? pp.w_hi : pp.w_lo, s.pre_rate, o.seed, 0, stim);
    const auto addr = engine::stimulus_addresses(net, stim);
    auto cfg = sim_config(o, p, s.duration);
    for (std::uint32_t i = 0; i < traced; ++i) {
        cfg.traces.push_back({"i_mem", "post", i});
        cfg.traces.push_back({"ca", "post", i});
        cfg.traces.push_back({"w", "post", addr[1][i]});
    }
    engine::Simulator sim(net, cfg, stim);
    sim.run();

    std::vector<double> im, ca, ts;
    for (std::uint32_t i = 0; i < traced; ++i) {
        trace_window(sim.record(), 3 * i, 0.0, s.duration, ts, im);
        trace_window(sim.record(), 3 * i + 1, 0.0, s.duration, ts, ca);
    }
    auto frac = [](const std::vector<double>& v, auto pred) {
        if (v.empty()) return 0.0;
        return static_cast<double>(std::count_if(v.begin(), v.end(), pred)) /
               static_cast<double>(v.size());
    };
    std::vector<double> wf;
    std::size_t flips = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        wf.push_back(*sim.plastic_weight(0, addr[1][i]));
        flips += (wf.back() > pp.theta_w) != start_high;
    }
    json m = {{"teacher_rate", s.teacher_rate},
              {"mean_post_rate", engine::rate_estimate(sim.record(), 0, 0.0, s.duration, {}, n)},
              {"i_mem_mean", mean_of(im)},
              {"i_mem_std", stddev_of(im)},
              {"i_mem_above_theta_m", frac(im, [&](double x) { return x > pp.theta_m; })},
              {"ca_mean", mean_of(ca)},
              {"ca_in_down_window", frac(ca, [&](double x) { return x > pp.theta_k1 && x < pp.theta_k2; })},
              {"ca_in_up_window", frac(ca, [&](double x) { return x > pp.theta_k1 && x < pp.theta_k3; })},
              {"transitions", flips},
              {"final_weights", wf}};
    Artifacts a;
    a.runs.push_back({"trials", net, sim.take_record()});
    a.summary = std::move(m);
    return a;
}

// ---------------------------------------------------------------------------
// fig11-ini-learning: a binary image presented repeatedly to one neuron
// through 3472 plastic synapses while a teacher keeps it active.

json fig11_defaults()
{
    synapse::SynapseParams pattern;
    pattern.g_syn = 0.5;
    plasticity::PlasticityParams pp;
    pp.delta_w = 0.012;
    pp.theta_m = 1e-9;
    pp.tau_ca = 0.2;
    pp.drift_rate = 0.1;
    pp.anchor_calcium_thresholds(30.0, 0.2, 1.0, 2.0);
    return {{"dt", 1e-4},
            {"presentations", 12},
            {"presentation", 0.5},
            {"gap", 0.1},
            {"white_rate", 55.0},
            {"black_rate", 5.0},
            {"teacher_rate", 40.0},
            {"teacher_channels", 40},
            {"teacher_weight", 0.64},
            {"early_presentations", 0},
            {"bitmap", ""},
            {"neuron", network::to_json(neuron::NeuronParams{})},
            {"teacher_synapse", network::to_json(synapse::SynapseParams{})},
            {"pattern_synapse", network::to_json(pattern)},
            {"plasticity", network::to_json(pp)}};
}

engine::Bitmap load_bitmap(const std::string& path)
{
    if (path.empty()) return engine::ini_glyph();
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("params.bitmap: cannot open '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    engine::Bitmap b;
    try {
        b = engine::Bitmap::parse(ss.str());
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("params.bitmap: {}", e.what()));
    }
    const auto& ref = engine::ini_glyph();
    if (b.rows != ref.rows || b.cols != ref.cols)
        throw ConfigError(fmt::format("params.bitmap: expected {}x{}, got {}x{}",
                                      ref.rows, ref.cols, b.rows, b.cols));
    return b;
}

Artifacts fig11(const RunOptions& o, const json& p)
{
    const auto n_pres = count(p, "presentations", 1);
    const double pres = positive(p, "presentation"), gap = nonneg(p, "gap"),
                 hi = nonneg(p, "white_rate"), lo = nonneg(p, "black_rate"),
                 t_rate = nonneg(p, "teacher_rate"), t_w = num(p, "teacher_weight");
    const auto n_teach = count(p, "teacher_channels", 1);
    const auto early = count(p, "early_presentations");
    const auto img = load_bitmap(p.at("bitmap").get<std::string>());
    const auto pp = object_params<plasticity::PlasticityParams>(p, "plasticity");

    network::PopulationSpec pop;
    pop.name = "post";
    pop.neuron = object_params<neuron::NeuronParams>(p, "neuron");
    pop.slots = {{"teacher", object_params<synapse::SynapseParams>(p, "teacher_synapse"), std::nullopt},
                 {"pattern", object_params<synapse::SynapseParams>(p, "pattern_synapse"), pp}};
    const auto net = network::add_population({}, pop);

    const double cycle = pres + gap;
    Stimulus pat{"pattern", "post", "pattern", {}};
    Stimulus teach{"teacher", "post", "teacher", {}};
    for (std::size_t r = 0; r < img.rows; ++r)
        for (std::size_t c = 0; c < img.cols; ++c) {
            StimulusChannel ch{0, pp.w_lo, {}};
            for (std::uint32_t k = 0; k < n_pres; ++k) {
                const double t0 = k * cycle;
                const auto tr = engine::poisson_train(
                    img.at(r, c) ? hi : lo, t0, t0 + pres,
                    rng::derive_seed(o.seed, "px", static_cast<std::uint64_t>(r * 1000 + c), k));
                ch.times.insert(ch.times.end(), tr.begin(), tr.end());
            }
            pat.channels.push_back(std::move(ch));
        }
    for (std::uint32_t j = 0; j < n_teach; ++j) {
        StimulusChannel ch{0, t_w, {}};
        for (std::uint32_t k = 0; k < n_pres; ++k) {
            const double t0 = k * cycle;
            const auto tr = engine::poisson_train(t_rate, t0, t0 + pres,
                                                  rng::derive_seed(o.seed, "teacher", k, j));
            ch.times.insert(ch.times.end(), tr.begin(), tr.end());
        }
        teach.channels.push_back(std::move(ch));
    }

    engine::Simulator sim(net, sim_config(o, p, n_pres * cycle), {pat, teach});
    const std::size_t n_px = img.rows * img.cols;
    const std::size_t n_white = img.count_white();
    std::vector<bool> prev(n_px, false);
    std::vector<double> ltp, ltd, xs;
    Table tab{"presentations", {"index", "ltp", "ltd", "white_potentiated", "black_potentiated", "post_rate"}, {}};
    std::size_t wh = 0, bl = 0;
    for (std::uint32_t k = 0; k < n_pres; ++k) {
        const auto before = sim.record().spikes.size();
        sim.run_until((k + 1) * cycle);
        std::size_t up = 0, down = 0;
        wh = bl = 0;
        for (std::size_t i = 0; i < n_px; ++i) {
            const bool high = *sim.plastic_weight(0, sim.stimulus_address(0, i)) > pp.theta_w;
            up += high && !prev[i];
            down += !high && prev[i];
            prev[i] = high;
            if (high) ++(img.pixels[i] ? wh : bl);
        }
        const double rate = static_cast<double>(sim.record().spikes.size() - before) / pres;
        tab.rows.push_back({double(k), double(up), double(down), double(wh), double(bl), rate});
        xs.push_back(k);
        ltp.push_back(up);
        ltd.push_back(down);
    }
    bool nonincreasing = true;
    for (std::size_t k = early + 1; k < ltp.size(); ++k)
        nonincreasing = nonincreasing && ltp[k] <= ltp[k - 1];
    const auto fit = exp_decay_fit(xs, ltp);
    const double wf = n_white ? double(wh) / n_white : 0.0;
    const double bf = n_px > n_white ? double(bl) / (n_px - n_white) : 0.0;
    json m = {{"synapses", n_px},
              {"white_pixels", n_white},
              {"white_potentiated_fraction", wf},
              {"black_potentiated_fraction", bf},
              {"ltp_counts", ltp},
              {"ltd_counts", ltd},
              {"ltp_nonincreasing", nonincreasing},
              {"fit", {{"amplitude", fit.amplitude}, {"rate", fit.rate}, {"r2", fit.r2}}}};
    Artifacts a;
    a.runs.push_back({"learning", net, sim.take_record()});
    a.tables.push_back(std::move(tab));
    a.summary = std::move(m);
    return a;
}

// ---------------------------------------------------------------------------
// fig12-swta: two Gaussian input bumps on a soft winner-take-all line.

json fig12_defaults()
{
    return {{"dt", 1e-4},
            {"n_exc", 124},
            {"n_inh", 4},
            {"w1", 0.78},
            {"w2", 0.74},
            {"w_ei", 0.7},
            {"w_ie", 0.8},
            {"w_ii", 0.8},
            {"ring", false},
            {"input_weight", 0.72},
            {"sigma", 3.0},
            {"bumps", json::array({{{"center", 20}, {"rate", 180.0}},
                                   {{"center", 60}, {"rate", 240.0}}})},
            {"duration", 0.5},
            {"analysis_start", 0.1},
            {"halfwidth", 3},
            {"controls", true},
            {"record_events", false}};
}

struct Bump {
    double center, rate;
};

std::vector<Bump> parse_bumps(const json& p, std::uint32_t n_exc)
{
    std::vector<Bump> out;
    const auto& arr = p.at("bumps");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& b = arr[i];
        const auto where = fmt::format("params.bumps[{}]", i);
        if (!b.is_object() || !b.contains("center") || !b.contains("rate") || b.size() != 2 ||
            !b["center"].is_number() || !b["rate"].is_number())
            throw ConfigError(where + ": expected {\"center\": number, \"rate\": number}");
        const Bump x{b["center"].get<double>(), b["rate"].get<double>()};
        if (x.center < 0 || x.center >= n_exc || x.center != std::floor(x.center))
            throw ConfigError(where + ".center: must be a unit index");
        if (!(x.rate >= 0)) throw ConfigError(where + ".rate: must be >= 0");
        out.push_back(x);
    }
    if (out.size() != 2) throw ConfigError("params.bumps: expected exactly two bumps");
    return out;
}

Artifacts fig12(const RunOptions& o, const json& p)
{
    const auto n_exc = count(p, "n_exc", 8), n_inh = count(p, "n_inh", 1);
    const auto bumps = parse_bumps(p, n_exc);
    const double sigma = positive(p, "sigma"), dur = positive(p, "duration"),
                 from = nonneg(p, "analysis_start"), w_in = num(p, "input_weight");
    const auto hw = count(p, "halfwidth");
    if (!(from < dur)) throw ConfigError("params.analysis_start: must be < duration");
    auto opt = network::default_swta_options();
    opt.ring = p.at("ring").get<bool>();
    const auto net = network::build_swta(n_exc, n_inh, num(p, "w1"), num(p, "w2"),
                                         num(p, "w_ei"), num(p, "w_ie"),
                                         num(p, "w_ii"), opt);
    auto cfg = sim_config(o, p, dur);
    cfg.record_events = p.at("record_events").get<bool>();

    auto run = [&](const std::string& name, double a0, double a1) {
        Stimulus st{"bumps", "exc", "input", {}};
        const double amp[2] = {a0, a1};
        for (std::uint32_t i = 0; i < n_exc; ++i) {
            double r = 0;
            for (int b = 0; b < 2; ++b)
                r += amp[b] * std::exp(-0.5 * std::pow((i - bumps[b].center) / sigma, 2));
            StimulusChannel ch{i, w_in, {}};
            if (r > 0.5)
                ch.times = engine::poisson_train(r, 0.0, dur, rng::derive_seed(o.seed, "input", i));
            st.channels.push_back(std::move(ch));
        }
        return run_to_end(name, net, cfg, {st});
    };
    auto bump_rate = [&](const engine::SpikeRecord& rec, double center) {
        std::size_t n = 0, units = 0;
        for (long u = std::lround(center) - long(hw); u <= std::lround(center) + long(hw); ++u) {
            if (u < 0 || u >= long(n_exc)) continue;
            ++units;
        }
        for (const auto& s : rec.spikes)
            if (s.population == 0 && s.t >= from &&
                std::abs(long(s.neuron) - std::lround(center)) <= long(hw))
                ++n;
        return units ? double(n) / (units * (dur - from)) : 0.0;
    };

    Artifacts a;
    json runs = json::object();
    auto summarize = [&](const engine::SpikeRecord& rec) {
        const double r0 = bump_rate(rec, bumps[0].center), r1 = bump_rate(rec, bumps[1].center);
        return json{{"bump_rates", {r0, r1}},
                    {"inh_rate", engine::rate_estimate(rec, 1, from, dur, {}, n_inh)},
                    {"winner", r1 > r0 ? 1 : (r0 > r1 ? 0 : -1)}};
    };
    a.runs.push_back(run("competition", bumps[0].rate, bumps[1].rate));
    runs["competition"] = summarize(a.runs.back().record);
    a.runs.push_back(run("swapped", bumps[1].rate, bumps[0].rate));
    runs["swapped"] = summarize(a.runs.back().record);
    if (p.at("controls").get<bool>()) {
        a.runs.push_back(run("alone0", bumps[0].rate, 0.0));
        runs["alone0"] = summarize(a.runs.back().record);
        a.runs.push_back(run("alone1", 0.0, bumps[1].rate));
        runs["alone1"] = summarize(a.runs.back().record);
    }

    const int expected = bumps[1].rate > bumps[0].rate ? 1 : 0;
    const int w = runs["competition"]["winner"];
    json m = {{"runs", runs},
              {"expected_winner", expected},
              {"winner", w},
              {"winner_center", w >= 0 ? json(bumps[w].center) : json(nullptr)},
              {"winner_input_rate", w >= 0 ? json(bumps[w].rate) : json(nullptr)},
              {"higher_input_wins", w == expected},
              {"swap_follows_input", runs["swapped"]["winner"].get<int>() == 1 - expected}};
    if (runs.contains("alone0")) {
        const int loser = 1 - expected;
        const double alone = runs[loser ? "alone1" : "alone0"]["bump_rates"][loser];
        const double comp = runs["competition"]["bump_rates"][loser];
        m["loser_rate_alone"] = alone;
        m["loser_rate_competition"] = comp;
        m["suppression_ratio"] = alone > 0 ? comp / alone : 0.0;
    }
    a.summary = std::move(m);
    return a;
}

// ---------------------------------------------------------------------------
// fig13-fsm: attractor populations sharing an inhibitory pool; brief input
// pulses select which one stays active.

json fig13_defaults()
{
    return {{"dt", 1e-4},
            {"n_per_state", 20},
            {"n_states", 2},
            {"n_inh", 4},
            {"w_self", 0.74},
            {"w_ei", 0.6},
            {"w_ie", 0.82},
            {"w_ii", 0.0},
            {"stim_rate", 200.0},
            {"stim_weight", 0.82},
            {"stimuli", json::array({{{"state", 0}, {"t_start", 0.1}, {"duration", 0.5}},
                                     {{"state", 1}, {"t_start", 1.4}, {"duration", 0.5}}})},
            {"duration", 2.5},
            {"window", 0.1},
            {"hold", 0.5},
            {"ratio", 5.0},
            {"control", true},
            {"record_events", false}};
}

Artifacts fig13(const RunOptions& o, const json& p)
{
    const auto n = count(p, "n_per_state", 2), n_states = count(p, "n_states", 2);
    const double dur = positive(p, "duration"), win = positive(p, "window"),
                 hold = positive(p, "hold"), ratio = positive(p, "ratio"),
                 rate = nonneg(p, "stim_rate"), w_stim = num(p, "stim_weight");
    struct Pulse {
        std::uint32_t state;
        double t0, t1;
    };
    std::vector<Pulse> pulses;
    const auto& arr = p.at("stimuli");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& s = arr[i];
        const auto where = fmt::format("params.stimuli[{}]", i);
        if (!s.is_object() || s.size() != 3 || !s.contains("state") || !s.contains("t_start") ||
            !s.contains("duration"))
            throw ConfigError(where + ": expected {\"state\", \"t_start\", \"duration\"}");
        const double st = s["state"].get<double>();
        if (st < 0 || st >= n_states || st != std::floor(st))
            throw ConfigError(where + ".state: must be a state index");
        const double t0 = s["t_start"].get<double>(), d = s["duration"].get<double>();
        if (!(t0 >= 0) || !(d > 0)) throw ConfigError(where + ": bad timing");
        pulses.push_back({static_cast<std::uint32_t>(st), t0, t0 + d});
    }
    network::FsmOptions fo;
    fo.n_inh = count(p, "n_inh", 1);
    fo.w_ii = num(p, "w_ii");

    auto cfg = sim_config(o, p, dur);
    cfg.record_events = p.at("record_events").get<bool>();
    auto run = [&](const std::string& name, double w_self) {
        const auto net = network::build_fsm(n, n_states, w_self, num(p, "w_ie"), num(p, "w_ei"), fo);
        std::vector<Stimulus> stim;
        for (std::size_t k = 0; k < pulses.size(); ++k) {
            Stimulus st{fmt::format("pulse{}", k), fmt::format("state{}", pulses[k].state), "input", {}};
            for (std::uint32_t i = 0; i < n; ++i)
                st.channels.push_back({i, w_stim,
                                       engine::poisson_train(rate, pulses[k].t0, pulses[k].t1,
                                                             rng::derive_seed(o.seed, "pulse", k, i))});
            stim.push_back(std::move(st));
        }
        return run_to_end(name, net, cfg, stim);
    };

    // For each pulse: did its target hold the lead over every other state,
    // window by window, for `hold` seconds after the pulse ended?
    auto holds = [&](const engine::SpikeRecord& rec, json& detail) {
        std::vector<std::vector<engine::RatePoint>> series;
        for (std::uint32_t s = 0; s < n_states; ++s) series.push_back(engine::rate_series(rec, s, win, n));
        bool all = true;
        detail = json::array();
        for (std::size_t k = 0; k < pulses.size(); ++k) {
            const auto& pl = pulses[k];
            bool ok = true;
            double min_target = 1e300, max_other = 0;
            std::size_t windows = 0;
            for (std::size_t b = 0; b < series[0].size(); ++b) {
                const double t = series[0][b].t;
                if (t < pl.t1 - 1e-9 || t + win > pl.t1 + hold + 1e-9) continue;
                ++windows;
                const double target = series[pl.state][b].rate;
                double other = 0;
                for (std::uint32_t s = 0; s < n_states; ++s)
                    if (s != pl.state) other = std::max(other, series[s][b].rate);
                min_target = std::min(min_target, target);
                max_other = std::max(max_other, other);
                ok = ok && target > 0 && target > ratio * other;
            }
            ok = ok && windows > 0;
            all = all && ok;
            detail.push_back({{"state", pl.state},
                              {"held", ok},
                              {"windows", windows},
                              {"min_target_rate", windows ? min_target : 0.0},
                              {"max_other_rate", max_other}});
        }
        return all;
    };

    Artifacts a;
    a.runs.push_back(run("fsm", num(p, "w_self")));
    json detail;
    const bool held = holds(a.runs.back().record, detail);
    std::vector<int> seq;
    {
        std::vector<std::vector<engine::RatePoint>> series;
        for (std::uint32_t s = 0; s < n_states; ++s)
            series.push_back(engine::rate_series(a.runs.back().record, s, win, n));
        for (std::size_t b = 0; b < series[0].size(); ++b) {
            int best = -1;
            double br = 0;
            for (std::uint32_t s = 0; s < n_states; ++s)
                if (series[s][b].rate > br) br = series[s][b].rate, best = int(s);
            seq.push_back(best);
        }
    }
    json m = {{"pulses", detail}, {"all_held", held}, {"state_sequence", seq}};
    if (p.at("control").get<bool>()) {
        a.runs.push_back(run("no_self", 0.0));
        const auto& rec = a.runs.back().record;
        double worst = 0;
        for (const auto& pl : pulses) {
            // allow one window for the input-driven activity to decay
            const double r = engine::rate_estimate(rec, pl.state, pl.t1 + win,
                                                   pl.t1 + hold, {}, n);
            worst = std::max(worst, r);
        }
        json cd;
        m["control"] = {{"held_any", holds(rec, cd)}, {"max_post_pulse_rate", worst}, {"pulses", cd}};
    }
    a.summary = std::move(m);
    return a;
}

struct Entry {
    PresetInfo info;
    json (*defaults)();
    Artifacts (*run)(const RunOptions&, const json&);
};

const std::vector<Entry>& entries()
{
    static const std::vector<Entry> e = {
        {{"fig6-std", "regular 50 Hz train through depressing synapses, three depression strengths"}, fig6_defaults, fig6},
        {{"fig7-bursting", "step current into adapting neurons: bursting versus stable adaptation"}, fig7_defaults, fig7},
        {{"fig9-ltd", "bistable synapse at 60 Hz pre / 30 Hz post over many seeded trials"}, fig9_defaults, fig9},
        {{"fig10-stochastic-vmem", "membrane, calcium and weight traces of stochastic plastic synapses"}, fig10_defaults, fig10},
        {{"fig11-ini-learning", "28x124 image stored in 3472 plastic synapses under a teacher"}, fig11_defaults, fig11},
        {{"fig12-swta", "soft winner-take-all with two input bumps, 124 excitatory + 4 inhibitory"}, fig12_defaults, fig12},
        {{"fig13-fsm", "two-state attractor machine switched by input pulses"}, fig13_defaults, fig13},
    };
    return e;
}

const Entry& find(const std::string& id)
{
    for (const auto& e : entries())
        if (e.info.id == id) return e;
    throw ConfigError(fmt::format("unknown preset '{}'", id));
}

}  // namespace

const std::vector<PresetInfo>& catalog()
{
    static const std::vector<PresetInfo> c = [] {
        std::vector<PresetInfo> v;
        for (const auto& e : entries()) v.push_back(e.info);
        return v;
    }();
    return c;
}

bool is_preset(const std::string& id)
{
    return std::any_of(entries().begin(), entries().end(),
                       [&](const Entry& e) { return e.info.id == id; });
}

json default_params(const std::string& id) { return find(id).defaults(); }

json merge_params(const std::string& id, const json& overrides)
{
    return merge_strict(default_params(id), overrides, "");
}

void finalize_summary(Artifacts& a, const std::string& experiment, std::uint64_t seed,
                      const json& params, json metrics)
{
    json runs = json::array();
    bool all = true;
    std::vector<std::string> warnings;
    std::set<std::string> seen;
    for (const auto& r : a.runs) {
        const bool ok = engine::conserved(r.record, r.network);
        all = all && ok;
        runs.push_back({{"name", r.name},
                        {"spikes", r.record.spikes.size()},
                        {"t_end", r.record.t_end},
                        {"counters", engine::counters_json(r.record.counters)},
                        {"conserved", ok}});
        for (const auto& w : r.record.warnings)
            if (seen.insert(w).second) warnings.push_back(w);
    }
    a.summary = {{"schema", kSummarySchema},
                 {"experiment", experiment},
                 {"seed", seed},
                 {"params", params},
                 {"metrics", std::move(metrics)},
                 {"runs", runs},
                 {"conserved", all},
                 {"threads", a.runs.empty() ? 1 : a.runs.front().record.threads},
                 {"warnings", warnings}};
}

Artifacts run_preset(const std::string& id, const RunOptions& opt)
{
    const auto& e = find(id);
    const json params = merge_strict(e.defaults(), opt.params, "");
    Artifacts a = e.run(opt, params);
    json metrics = std::move(a.summary);
    finalize_summary(a, id, opt.seed, params, std::move(metrics));
    a.summary["preset"] = id;
    return a;
}

namespace {

void write_file(const std::filesystem::path& path, auto&& fill)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    fill(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void write_artifacts(const Artifacts& a, const std::filesystem::path& dir)
{
    if (std::filesystem::exists(dir))
        throw std::runtime_error("output directory already exists: " + dir.string());
    std::filesystem::create_directories(dir);
    for (const auto& r : a.runs) {
        write_file(dir / fmt::format("spikes_{}.csv", r.name),
                   [&](std::ostream& o) { engine::write_spikes_csv(o, r.record); });
        if (!r.record.traces.empty())
            write_file(dir / fmt::format("traces_{}.csv", r.name),
                       [&](std::ostream& o) { engine::write_traces_csv(o, r.record); });
        write_file(dir / fmt::format("rates_{}.csv", r.name), [&](std::ostream& o) {
            engine::write_rates_csv(o, r.record, r.network, a.rate_window);
        });
        if (!r.record.events.empty())
            write_file(dir / fmt::format("events_{}.csv", r.name),
                       [&](std::ostream& o) { engine::write_events_csv(o, r.record); });
        if (r.network.routing.size() > 0)
            write_file(dir / fmt::format("routing_{}.txt", r.name),
                       [&](std::ostream& o) { r.network.routing.write(o); });
    }
    for (const auto& t : a.tables)
        write_file(dir / (t.name + ".csv"), [&](std::ostream& o) {
            for (std::size_t i = 0; i < t.columns.size(); ++i)
                o << (i ? "," : "") << t.columns[i];
            o << '\n';
            for (const auto& row : t.rows) {
                for (std::size_t i = 0; i < row.size(); ++i)
                    fmt::print(o, "{}{}", i ? "," : "", row[i]);
                o << '\n';
            }
        });
    write_file(dir / "summary.json", [&](std::ostream& o) { o << a.summary.dump(2) << '\n'; });
}

}  // namespace ncsim::presets
