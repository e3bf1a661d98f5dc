#include "ncsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <omp.h>

namespace ncsim::engine {

using network::SpecError;

namespace {

std::uint64_t grid_step(double t, double dt)
{
    return static_cast<std::uint64_t>(std::ceil(t / dt - 1e-9));
}

}  // namespace

void SimConfig::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw SpecError("dt must be > 0");
    if (!(t_end >= 0.0) || !std::isfinite(t_end))
        throw SpecError("t_end must be >= 0");
    if (trace_every < 1) throw SpecError("trace_every must be >= 1");
    if (threads < 0) throw SpecError("threads must be >= 0");
    arbiter.validate();
}

int resolve_threads(int requested, std::vector<std::string>* warnings)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("NCSIM_THREADS"); env && *env) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end && *end == '\0' && n > 0 && n <= 4096) return static_cast<int>(n);
        if (warnings)
            warnings->push_back(fmt::format(
                "ignoring invalid NCSIM_THREADS='{}'", env));
    }
    return std::max(1, omp_get_max_threads());
}

Simulator::Simulator(network::NetworkSpec net, SimConfig cfg,
                     std::vector<Stimulus> stimuli,
                     std::vector<CurrentStep> currents)
    : net_(std::move(net)), cfg_(std::move(cfg)), arbiter_(cfg_.arbiter)
{
    cfg_.validate();
    net_.validate();
    threads_ = resolve_threads(cfg_.threads, &rec_.warnings);
    build(stimuli, currents);
}

std::uint32_t Simulator::add_synapse(std::uint32_t pop, std::uint32_t neuron,
                                     std::uint32_t slot, double weight)
{
    const auto& sl = net_.populations[pop].slots[slot];
    Syn s;
    s.params = sl.synapse;
    s.params.w_rest = weight;
    s.params.validate();
    s.state = synapse::initial_state(s.params);
    s.decay = std::exp(-cfg_.dt / s.params.tau_syn);
    s.target = pop_offset_[pop] + neuron;
    if (sl.plasticity) {
        s.plastic = static_cast<std::int32_t>(plastic_.size());
        plastic_.push_back({weight});
        plastic_params_.push_back(&*sl.plasticity);
    }
    const auto idx = static_cast<std::uint32_t>(syn_.size());
    syn_.push_back(std::move(s));
    address_[pop].push_back(idx);
    return static_cast<std::uint32_t>(address_[pop].size() - 1);
}

void Simulator::build(const std::vector<Stimulus>& stimuli,
                      const std::vector<CurrentStep>& currents)
{
    const auto n_pop = net_.populations.size();
    pop_offset_.assign(n_pop + 1, 0);
    for (std::size_t p = 0; p < n_pop; ++p)
        pop_offset_[p + 1] = pop_offset_[p] + net_.populations[p].size;
    const std::uint32_t n = pop_offset_[n_pop];
    neuron_pop_.resize(n);
    neurons_.resize(n);
    for (std::uint32_t p = 0; p < n_pop; ++p) {
        for (std::uint32_t i = pop_offset_[p]; i < pop_offset_[p + 1]; ++i) {
            neuron_pop_[i] = p;
            neurons_[i] = neuron::initial_state(net_.populations[p].neuron);
        }
    }
    calcium_.assign(n, 0.0);
    bias_.assign(n, 0.0);
    spiked_.assign(n, 0);
    address_.assign(n_pop, {});

    // Edges first: within a destination population the synapse address is
    // the edge's position among the edges landing there.
    for (const auto& e : net_.edges)
        add_synapse(e.dst_pop, e.dst, e.slot, e.weight);

    n_end_ = grid_step(cfg_.t_end, cfg_.dt);
    for (const auto& st : stimuli) {
        const auto pop = net_.population_index(st.population);
        const auto& ps = net_.populations[pop];
        const auto slot = ps.slot_index(st.slot);
        std::vector<std::uint32_t> addrs;
        for (std::size_t c = 0; c < st.channels.size(); ++c) {
            const auto& ch = st.channels[c];
            if (ch.neuron >= ps.size)
                throw SpecError(fmt::format(
                    "stimulus '{}': neuron {} outside population '{}'",
                    st.label, ch.neuron, st.population));
            const auto addr = add_synapse(pop, ch.neuron, slot, ch.weight);
            addrs.push_back(addr);
            double prev = 0.0;
            for (double t : ch.times) {
                if (!std::isfinite(t) || t < 0.0 || t < prev)
                    throw SpecError(fmt::format(
                        "stimulus '{}': spike times must be finite, >= 0 and sorted",
                        st.label));
                prev = t;
                const auto k = grid_step(t, cfg_.dt);
                if (k >= n_end_) continue;
                stim_events_.push_back({k, {pop, addr, 1}});
            }
        }
        stim_address_.push_back(std::move(addrs));
    }
    std::stable_sort(stim_events_.begin(), stim_events_.end(),
                     [](const auto& a, const auto& b) {
                         if (a.first != b.first) return a.first < b.first;
                         if (a.second.pop != b.second.pop)
                             return a.second.pop < b.second.pop;
                         return a.second.address < b.second.address;
                     });

    // CSR of afferent synapses per neuron, in address order.
    in_begin_.assign(n + 1, 0);
    for (const auto& s : syn_) ++in_begin_[s.target + 1];
    for (std::uint32_t i = 0; i < n; ++i) in_begin_[i + 1] += in_begin_[i];
    in_list_.resize(syn_.size());
    std::vector<std::uint32_t> fill(in_begin_.begin(), in_begin_.end() - 1);
    for (std::uint32_t p = 0; p < n_pop; ++p)
        for (auto idx : address_[p]) in_list_[fill[syn_[idx].target]++] = idx;

    for (const auto& c : currents) {
        const auto pop = net_.population_index(c.population);
        std::vector<std::uint32_t> targets;
        if (c.neurons.empty()) {
            for (std::uint32_t i = 0; i < net_.populations[pop].size; ++i)
                targets.push_back(pop_offset_[pop] + i);
        } else {
            for (auto i : c.neurons) {
                if (i >= net_.populations[pop].size)
                    throw SpecError(fmt::format(
                        "current step: neuron {} outside population '{}'", i,
                        c.population));
                targets.push_back(pop_offset_[pop] + i);
            }
        }
        if (!std::isfinite(c.amplitude))
            throw SpecError("current step: amplitude must be finite");
        currents_.push_back(c);
        current_targets_.push_back(std::move(targets));
    }

    for (const auto& ts : cfg_.traces) {
        const auto pop = net_.population_index(ts.population);
        static const char* per_neuron[] = {"i_mem", "i_ahp", "i_in", "ca"};
        static const char* per_syn[] = {"i_syn", "v_w", "w"};
        bool ok = false;
        for (const char* q : per_neuron)
            if (ts.quantity == q) {
                if (ts.index >= net_.populations[pop].size)
                    throw SpecError(fmt::format("trace {}: neuron {} out of range",
                                                ts.quantity, ts.index));
                ok = true;
            }
        for (const char* q : per_syn)
            if (ts.quantity == q) {
                if (ts.index >= address_[pop].size())
                    throw SpecError(fmt::format("trace {}: synapse {} out of range",
                                                ts.quantity, ts.index));
                ok = true;
            }
        if (!ok) throw SpecError(fmt::format("unknown trace quantity '{}'", ts.quantity));
    }

    // Calcium follows the parameters of the first plastic afferent.
    ca_params_.assign(n, &default_plasticity_);
    for (std::uint32_t g = 0; g < n; ++g) {
        for (auto k = in_begin_[g]; k < in_begin_[g + 1]; ++k) {
            const auto& s = syn_[in_list_[k]];
            if (s.plastic >= 0) {
                ca_params_[g] = plastic_params_[s.plastic];
                break;
            }
        }
    }

    probed_.assign(syn_.size(), 0);
    for (const auto& [pop_name, addr] : cfg_.probes) {
        const auto pop = net_.population_index(pop_name);
        if (addr >= address_[pop].size())
            throw SpecError(fmt::format("probe: synapse {} of '{}' out of range",
                                        addr, pop_name));
        probed_[address_[pop][addr]] = 1;
    }

    for (const auto& p : net_.populations) rec_.population_names.push_back(p.name);
    rec_.trace_specs = cfg_.traces;
    rec_.threads = threads_;
    rec_.seed = cfg_.seed;
    rec_.dt = cfg_.dt;
    rec_.t_end = static_cast<double>(n_end_) * cfg_.dt;
}

std::vector<std::vector<std::uint32_t>> stimulus_addresses(
    const network::NetworkSpec& net, const std::vector<Stimulus>& stimuli)
{
    auto next = net.edge_counts();
    std::vector<std::vector<std::uint32_t>> out;
    for (const auto& st : stimuli) {
        const auto pop = net.population_index(st.population);
        std::vector<std::uint32_t> addrs;
        for (std::size_t c = 0; c < st.channels.size(); ++c)
            addrs.push_back(next[pop]++);
        out.push_back(std::move(addrs));
    }
    return out;
}

std::uint32_t Simulator::stimulus_address(std::size_t s, std::size_t c) const
{
    return stim_address_.at(s).at(c);
}

void Simulator::apply_pulses()
{
    std::vector<Pending> due;
    if (auto it = pending_.find(step_); it != pending_.end()) {
        due = std::move(it->second);
        pending_.erase(it);
    }
    while (stim_cursor_ < stim_events_.size() &&
           stim_events_[stim_cursor_].first == step_)
        due.push_back(stim_events_[stim_cursor_++].second);
    if (due.empty()) return;
    std::stable_sort(due.begin(), due.end(), [](const Pending& a, const Pending& b) {
        if (a.pop != b.pop) return a.pop < b.pop;
        return a.address < b.address;
    });

    const double t = time();
    for (const auto& d : due) {
        const auto idx = address_[d.pop][d.address];
        Syn& s = syn_[idx];
        const double before = s.state.filter.i_out;
        double w = 0.0;
        if (s.plastic >= 0) {
            auto& ws = plastic_[s.plastic];
            w = ws.w;
            s.state = synapse::inject_pulse(s.state, w, s.params);
            ws = plasticity::on_pre_spike_update(ws, neurons_[s.target].i_mem,
                                                 calcium_[s.target],
                                                 *plastic_params_[s.plastic]);
        } else {
            if (s.params.d_std > 0.0) {
                s.state.v_w = synapse::recover_weight(
                    s.state.v_w, s.params.w_rest, t - s.state.t_w, s.params.tau_rec);
                s.state.t_w = t;
                s.state.v_w = std::max(0.0, s.state.v_w - s.params.d_std);
            }
            w = s.state.v_w;
            s.state = synapse::inject_pulse(s.state, w, s.params);
        }
        if (probed_[idx])
            rec_.pulses.push_back({t, d.pop, d.address, before,
                                   s.state.filter.i_out, w});
        if (d.source == 0)
            ++rec_.counters.deliveries_applied;
        else
            ++rec_.counters.stimulus_pulses;
    }
}

void Simulator::update_neuron(std::size_t g, double t)
{
    const auto& pop = net_.populations[neuron_pop_[g]];
    auto& ns = neurons_[g];
    double i_in = bias_[g];
    const auto b = in_begin_[g], e = in_begin_[g + 1];
    for (auto k = b; k < e; ++k) {
        const Syn& s = syn_[in_list_[k]];
        i_in += synapse::gated_output(s.state, ns.i_mem, s.params,
                                      pop.neuron.i_spk);
    }
    if (i_in < 0.0) i_in = 0.0;
    const bool fired = neuron::step(ns, i_in, t, cfg_.dt, pop.neuron);
    spiked_[g] = fired ? 1 : 0;
    for (auto k = b; k < e; ++k) {
        Syn& s = syn_[in_list_[k]];
        if (s.params.kernel == synapse::Kernel::Linear) {
            s.state.filter.i_out *= s.decay;
            s.state.filter.t_last += cfg_.dt;
        } else {
            s.state = synapse::advance(s.state, cfg_.dt, s.params);
        }
        if (s.plastic >= 0) {
            plastic_[s.plastic] = plasticity::bistable_drift(
                plastic_[s.plastic], cfg_.dt, *plastic_params_[s.plastic]);
        }
    }
    calcium_[g] = plasticity::calcium_step(calcium_[g], cfg_.dt, fired,
                                           *ca_params_[g]);
}

void Simulator::update_neurons()
{
    const double t = time();
    std::fill(bias_.begin(), bias_.end(), 0.0);
    for (std::size_t c = 0; c < currents_.size(); ++c) {
        const auto& cs = currents_[c];
        if (t >= cs.t_start && t < cs.t_stop)
            for (auto g : current_targets_[c]) bias_[g] += cs.amplitude;
    }
    const auto n = static_cast<std::int64_t>(neurons_.size());
    if (cfg_.kernel == KernelKind::Serial) {
        for (std::int64_t g = 0; g < n; ++g) update_neuron(static_cast<std::size_t>(g), t);
    } else {
#pragma omp parallel for schedule(static) num_threads(threads_)
        for (std::int64_t g = 0; g < n; ++g) update_neuron(static_cast<std::size_t>(g), t);
    }
}

void Simulator::route_spikes()
{
    const std::uint64_t k = step_ + 1;
    const double t = static_cast<double>(k) * cfg_.dt;
    auto& c = rec_.counters;
    for (std::uint32_t g = 0; g < neurons_.size(); ++g) {
        if (!spiked_[g]) continue;
        const std::uint32_t pop = neuron_pop_[g];
        const std::uint32_t local = g - pop_offset_[pop];
        rec_.spikes.push_back({t, pop, local});
        ++c.spikes;
        const aer::AddressEvent ev{t, {pop, local}, seq_++};
        const auto d = arbiter_.submit(ev);
        c.max_queue_depth = std::max(c.max_queue_depth, d.occupancy);
        if (d.dropped) {
            ++c.events_dropped;
            continue;
        }
        ++c.events_accepted;
        c.max_delay = std::max(c.max_delay, d.delay());
        const auto when = std::max(k, grid_step(d.depart, cfg_.dt));
        for (const auto& dst : net_.routing.targets(ev.src)) {
            ++c.deliveries_scheduled;
            if (cfg_.record_events) rec_.events.push_back({ev, dst, d.depart});
            pending_[when].push_back({dst.chip, dst.synapse, 0});
        }
    }
}

double Simulator::trace_value(const TraceSpec& ts) const
{
    const auto pop = net_.population_index(ts.population);
    if (ts.quantity == "i_mem") return neurons_[pop_offset_[pop] + ts.index].i_mem;
    if (ts.quantity == "i_ahp") return neurons_[pop_offset_[pop] + ts.index].i_ahp;
    if (ts.quantity == "ca") return calcium_[pop_offset_[pop] + ts.index];
    if (ts.quantity == "i_in") {
        const auto g = pop_offset_[pop] + ts.index;
        const auto& np = net_.populations[pop].neuron;
        double i_in = bias_[g];
        for (auto k = in_begin_[g]; k < in_begin_[g + 1]; ++k) {
            const Syn& s = syn_[in_list_[k]];
            i_in += synapse::gated_output(s.state, neurons_[g].i_mem, s.params, np.i_spk);
        }
        return std::max(0.0, i_in);
    }
    const Syn& s = syn_[address_[pop][ts.index]];
    if (ts.quantity == "i_syn") return s.state.filter.i_out;
    if (ts.quantity == "v_w") return s.plastic >= 0 ? plastic_[s.plastic].w : s.state.v_w;
    return s.plastic >= 0 ? plastic_[s.plastic].w : std::nan("");
}

void Simulator::sample_traces()
{
    if (cfg_.traces.empty() || step_ % cfg_.trace_every != 0) return;
    const double t = time();
    for (std::uint32_t i = 0; i < cfg_.traces.size(); ++i)
        rec_.traces.push_back({t, i, trace_value(cfg_.traces[i])});
}

void Simulator::run_until(double t_stop)
{
    const auto target = std::min(n_end_, grid_step(t_stop, cfg_.dt));
    while (step_ < target) {
        apply_pulses();
        sample_traces();
        update_neurons();
        route_spikes();
        ++step_;
        ++rec_.counters.steps;
    }
    std::uint64_t queued = 0;
    for (const auto& [k, list] : pending_) queued += list.size();
    rec_.counters.deliveries_queued = queued;
}

SpikeRecord Simulator::take_record()
{
    SpikeRecord out = std::move(rec_);
    rec_ = SpikeRecord{};
    rec_.population_names = out.population_names;
    rec_.trace_specs = out.trace_specs;
    rec_.threads = out.threads;
    rec_.seed = out.seed;
    rec_.dt = out.dt;
    rec_.t_end = out.t_end;
    return out;
}

double Simulator::i_mem(std::uint32_t pop, std::uint32_t neuron) const
{
    return neurons_.at(pop_offset_.at(pop) + neuron).i_mem;
}

double Simulator::calcium(std::uint32_t pop, std::uint32_t neuron) const
{
    return calcium_.at(pop_offset_.at(pop) + neuron);
}

double Simulator::synapse_current(std::uint32_t pop, std::uint32_t address) const
{
    return syn_[address_.at(pop).at(address)].state.filter.i_out;
}

std::optional<double> Simulator::plastic_weight(std::uint32_t pop,
                                                std::uint32_t address) const
{
    const Syn& s = syn_[address_.at(pop).at(address)];
    if (s.plastic < 0) return std::nullopt;
    return plastic_[s.plastic].w;
}

std::uint32_t Simulator::synapse_count(std::uint32_t pop) const
{
    return static_cast<std::uint32_t>(address_.at(pop).size());
}

bool conserved(const SpikeRecord& rec, const network::NetworkSpec& net)
{
    const auto& c = rec.counters;
    if (c.spikes != c.events_accepted + c.events_dropped) return false;
    if (c.spikes != rec.spikes.size()) return false;
    if (c.deliveries_applied + c.deliveries_queued != c.deliveries_scheduled)
        return false;
    // Fan-out of the accepted events must equal the scheduled deliveries.
    // Every spike is accepted while nothing is dropped, so the fan-out
    // can be recomputed from the spike list.
    if (c.events_dropped == 0) {
        std::uint64_t fanout = 0;
        for (const auto& s : rec.spikes)
            fanout += net.routing.targets({s.population, s.neuron}).size();
        if (fanout != c.deliveries_scheduled) return false;
    }
    return true;
}

double rate_estimate(const SpikeRecord& rec, std::uint32_t pop, double t0,
                     double t1, std::optional<std::uint32_t> neuron,
                     std::uint32_t pop_size)
{
    if (!(t1 > t0)) return 0.0;
    std::size_t n = 0;
    for (const auto& s : rec.spikes)
        if (s.population == pop && s.t >= t0 && s.t < t1 &&
            (!neuron || s.neuron == *neuron))
            ++n;
    const double units = neuron ? 1.0 : static_cast<double>(std::max<std::uint32_t>(1, pop_size));
    return static_cast<double>(n) / ((t1 - t0) * units);
}

std::vector<RatePoint> rate_series(const SpikeRecord& rec, std::uint32_t pop,
                                   double window, std::uint32_t pop_size)
{
    if (!(window > 0.0)) throw std::invalid_argument("rate_series: window must be > 0");
    const auto n_bins = static_cast<std::size_t>(std::ceil(rec.t_end / window - 1e-9));
    std::vector<std::size_t> counts(n_bins, 0);
    for (const auto& s : rec.spikes) {
        if (s.population != pop) continue;
        const auto b = static_cast<std::size_t>(std::floor(s.t / window + 1e-9));
        if (b < n_bins) ++counts[b];
    }
    std::vector<RatePoint> out(n_bins);
    const double units = window * std::max<std::uint32_t>(1, pop_size);
    for (std::size_t b = 0; b < n_bins; ++b)
        out[b] = {static_cast<double>(b) * window,
                  static_cast<double>(counts[b]) / units};
    return out;
}

std::vector<double> spike_times_of(const SpikeRecord& rec, std::uint32_t pop,
                                   std::uint32_t neuron)
{
    std::vector<double> out;
    for (const auto& s : rec.spikes)
        if (s.population == pop && s.neuron == neuron) out.push_back(s.t);
    return out;
}

void write_spikes_csv(std::ostream& out, const SpikeRecord& rec)
{
    out << "t,population,neuron\n";
    for (const auto& s : rec.spikes)
        fmt::print(out, "{},{},{}\n", s.t, rec.population_names[s.population],
                   s.neuron);
}

void write_traces_csv(std::ostream& out, const SpikeRecord& rec)
{
    out << "t,quantity,population,neuron,value\n";
    for (const auto& s : rec.traces) {
        const auto& ts = rec.trace_specs[s.trace];
        fmt::print(out, "{},{},{},{},{}\n", s.t, ts.quantity, ts.population,
                   ts.index, s.value);
    }
}

void write_events_csv(std::ostream& out, const SpikeRecord& rec)
{
    aer::write_event_log_csv(out, rec.events);
}

void write_rates_csv(std::ostream& out, const SpikeRecord& rec,
                     const network::NetworkSpec& net, double window)
{
    out << "t,population,rate\n";
    for (std::uint32_t p = 0; p < net.populations.size(); ++p)
        for (const auto& r : rate_series(rec, p, window, net.populations[p].size))
            fmt::print(out, "{},{},{}\n", r.t, net.populations[p].name, r.rate);
}

nlohmann::json counters_json(const Counters& c)
{
    return {{"steps", c.steps},
            {"spikes", c.spikes},
            {"events_accepted", c.events_accepted},
            {"events_dropped", c.events_dropped},
            {"deliveries_scheduled", c.deliveries_scheduled},
            {"deliveries_applied", c.deliveries_applied},
            {"deliveries_pending", c.deliveries_queued},
            {"stimulus_pulses", c.stimulus_pulses},
            {"max_delay", c.max_delay},
            {"max_queue_depth", c.max_queue_depth}};
}

}  // namespace ncsim::engine
