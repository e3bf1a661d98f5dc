#include "ncsim/aer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace ncsim::aer {

bool event_before(const AddressEvent& a, const AddressEvent& b)
{
    if (a.t != b.t) return a.t < b.t;
    return a.seq < b.seq;
}

void RoutingTable::add(Address src, Destination dst)
{
    auto& list = entries_[src];
    if (std::find(list.begin(), list.end(), dst) != list.end())
        throw RoutingError(fmt::format("duplicate route {}:{} -> {}:{}",
                                       src.chip, src.neuron, dst.chip,
                                       dst.synapse));
    list.push_back(dst);
    ++n_entries_;
}

std::span<const Destination> RoutingTable::targets(Address src) const
{
    auto it = entries_.find(src);
    if (it == entries_.end()) return {};
    return it->second;
}

void RoutingTable::validate(const AddressSpace& space) const
{
    for (const auto& [src, dsts] : entries_) {
        for (const auto& d : dsts) {
            auto it = space.find(d.chip);
            if (it == space.end() || d.synapse >= it->second)
                throw RoutingError(fmt::format(
                    "dangling destination {}:{} for source {}:{}", d.chip,
                    d.synapse, src.chip, src.neuron));
        }
    }
}

void RoutingTable::write(std::ostream& out) const
{
    out << "# src_chip src_neuron dst_chip dst_synapse\n";
    for (const auto& [src, dsts] : entries_)
        for (const auto& d : dsts)
            fmt::print(out, "{} {} {} {}\n", src.chip, src.neuron, d.chip,
                       d.synapse);
}

std::string RoutingTable::serialize() const
{
    std::ostringstream os;
    write(os);
    return os.str();
}

RoutingTable RoutingTable::load(std::istream& in, const AddressSpace* space)
{
    RoutingTable table;
    std::string line;
    std::size_t lineno = 0;
    std::optional<Address> prev;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        std::vector<long long> v;
        std::string tok;
        while (fields >> tok) {
            std::size_t used = 0;
            long long x = 0;
            try {
                x = std::stoll(tok, &used, 10);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size() || x < 0 || x > 0xFFFFFFFFLL)
                throw RoutingError("expected a non-negative decimal integer, got '" +
                                       tok + "'",
                                   lineno);
            v.push_back(x);
        }
        if (v.empty()) continue;
        if (v.size() != 4)
            throw RoutingError(fmt::format("expected 4 fields, got {}", v.size()),
                               lineno);
        const Address src{static_cast<std::uint32_t>(v[0]),
                          static_cast<std::uint32_t>(v[1])};
        if (prev && src < *prev)
            throw RoutingError("source addresses must be non-decreasing", lineno);
        prev = src;
        try {
            table.add(src, {static_cast<std::uint32_t>(v[2]),
                            static_cast<std::uint32_t>(v[3])});
        } catch (const RoutingError& e) {
            throw RoutingError(e.what(), lineno);
        }
    }
    if (space) table.validate(*space);
    return table;
}

RoutingTable RoutingTable::parse(const std::string& text,
                                 const AddressSpace* space)
{
    std::istringstream in(text);
    return load(in, space);
}

std::vector<Destination> route(const AddressEvent& event,
                               const RoutingTable& table)
{
    auto t = table.targets(event.src);
    return {t.begin(), t.end()};
}

void ArbiterConfig::validate() const
{
    if (!(service_time > 0.0))
        throw std::invalid_argument("arbiter: service_time must be > 0");
    if (queue_capacity == 0)
        throw std::invalid_argument("arbiter: queue_capacity must be > 0");
}

Arbiter::Arbiter(ArbiterConfig cfg) : cfg_(cfg) { cfg_.validate(); }

Departure Arbiter::submit(const AddressEvent& ev)
{
    if (last_ && event_before(ev, *last_))
        throw std::invalid_argument("arbiter: events must arrive in (t, seq) order");
    last_ = ev;
    while (!finish_.empty() && finish_.front() <= ev.t) finish_.pop_front();

    Departure d;
    d.event = ev;
    d.occupancy = finish_.size();
    if (d.occupancy >= cfg_.queue_capacity) {
        d.dropped = true;
        d.depart = std::nan("");
        ++dropped_;
        return d;
    }
    const double free_at = finish_.empty() ? ev.t : finish_.back();
    d.depart = std::max(ev.t, free_at);
    finish_.push_back(d.depart + cfg_.service_time);
    ++accepted_;
    return d;
}

ArbitrationResult arbitrate(std::span<const AddressEvent> events,
                            const ArbiterConfig& cfg)
{
    Arbiter arb(cfg);
    ArbitrationResult out;
    out.log.reserve(events.size());
    for (const auto& e : events) out.log.push_back(arb.submit(e));
    out.dropped = arb.dropped();
    return out;
}

BandwidthStats bandwidth_stats(std::span<const Departure> log, double window)
{
    BandwidthStats st;
    std::vector<double> departs;
    departs.reserve(log.size());
    for (const auto& d : log) {
        st.max_queue_depth = std::max(st.max_queue_depth, d.occupancy);
        if (d.dropped) {
            ++st.dropped;
            continue;
        }
        departs.push_back(d.depart);
        st.max_delay = std::max(st.max_delay, d.delay());
    }
    st.events = departs.size();
    if (departs.empty()) return st;
    std::sort(departs.begin(), departs.end());

    auto bin = [window](double t) {
        return static_cast<long long>(std::floor(t / window));
    };
    const long long first = bin(departs.front());
    const long long last = bin(departs.back());
    std::size_t best = 0, run = 0;
    long long current = first;
    for (double t : departs) {
        const long long b = bin(t);
        if (b != current) {
            current = b;
            run = 0;
        }
        best = std::max(best, ++run);
    }
    st.peak_rate = static_cast<double>(best) / window;
    st.mean_rate = static_cast<double>(departs.size()) /
                   (static_cast<double>(last - first + 1) * window);
    return st;
}

void write_event_log_csv(std::ostream& out, std::span<const Delivery> log)
{
    out << "t,src_chip,src_neuron,dst_chip,dst_synapse,depart_t\n";
    for (const auto& d : log)
        fmt::print(out, "{},{},{},{},{},{}\n", d.event.t, d.event.src.chip,
                   d.event.src.neuron, d.dst.chip, d.dst.synapse, d.depart);
}

}  // namespace ncsim::aer
