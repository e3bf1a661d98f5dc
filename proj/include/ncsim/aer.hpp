#pragma once

// Address-event fabric: serial arbitration of colliding events, look-up
// table routing with fan-out, and bandwidth accounting.

#include <compare>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncsim::aer {

struct Address {
    std::uint32_t chip = 0;
    std::uint32_t neuron = 0;

    auto operator<=>(const Address&) const = default;
};

struct Destination {
    std::uint32_t chip = 0;
    std::uint32_t synapse = 0;

    auto operator<=>(const Destination&) const = default;
};

struct AddressEvent {
    double t = 0.0;
    Address src;
    std::uint64_t seq = 0;
};

/// Strict (t, seq) order.
bool event_before(const AddressEvent& a, const AddressEvent& b);

class RoutingError : public std::runtime_error {
public:
    RoutingError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                  : what),
          line_(line)
    {
    }
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Number of synapse addresses per destination chip; used to reject
/// dangling routing entries.
using AddressSpace = std::map<std::uint32_t, std::uint32_t>;

class RoutingTable {
public:
    /// Throws RoutingError on a duplicate (src, dst) pair.
    void add(Address src, Destination dst);

    /// Destinations in insertion order; empty for unknown sources.
    std::span<const Destination> targets(Address src) const;

    std::size_t size() const { return n_entries_; }
    const std::map<Address, std::vector<Destination>>& entries() const
    {
        return entries_;
    }

    /// Throws RoutingError if any destination lies outside the space.
    void validate(const AddressSpace& space) const;

    /// Text format: "src_chip src_neuron dst_chip dst_synapse" per line,
    /// '#' starts a comment.
    void write(std::ostream& out) const;
    std::string serialize() const;
    static RoutingTable load(std::istream& in,
                             const AddressSpace* space = nullptr);
    static RoutingTable parse(const std::string& text,
                              const AddressSpace* space = nullptr);

    bool operator==(const RoutingTable&) const = default;

private:
    std::map<Address, std::vector<Destination>> entries_;
    std::size_t n_entries_ = 0;
};

std::vector<Destination> route(const AddressEvent& event,
                               const RoutingTable& table);

struct ArbiterConfig {
    double service_time = 1.0 / 60e6;
    std::size_t queue_capacity = 8192;

    void validate() const;
};

struct Departure {
    AddressEvent event;
    double depart = 0.0;
    std::size_t occupancy = 0;  // events queued or in service at arrival
    bool dropped = false;

    double delay() const { return depart - event.t; }
};

/// Single-server FIFO arbiter.  Events must be submitted in (t, seq) order.
class Arbiter {
public:
    explicit Arbiter(ArbiterConfig cfg);

    Departure submit(const AddressEvent& ev);

    std::size_t accepted() const { return accepted_; }
    std::size_t dropped() const { return dropped_; }
    const ArbiterConfig& config() const { return cfg_; }

private:
    ArbiterConfig cfg_;
    std::deque<double> finish_;
    std::optional<AddressEvent> last_;
    std::size_t accepted_ = 0;
    std::size_t dropped_ = 0;
};

struct ArbitrationResult {
    std::vector<Departure> log;  // one entry per input event, input order
    std::size_t dropped = 0;
};

/// Arbitrates a (t, seq)-sorted batch through a fresh arbiter.
ArbitrationResult arbitrate(std::span<const AddressEvent> events,
                            const ArbiterConfig& cfg);

struct BandwidthStats {
    double peak_rate = 0.0;  // events/s in the busiest window
    double mean_rate = 0.0;
    std::size_t max_queue_depth = 0;
    double max_delay = 0.0;
    std::size_t events = 0;
    std::size_t dropped = 0;
};

/// Windowed throughput over departed events plus arbitration statistics.
BandwidthStats bandwidth_stats(std::span<const Departure> log,
                               double window = 1e-3);

struct Delivery {
    AddressEvent event;
    Destination dst;
    double depart = 0.0;
};

/// CSV: t,src_chip,src_neuron,dst_chip,dst_synapse,depart_t
void write_event_log_csv(std::ostream& out, std::span<const Delivery> log);

}  // namespace ncsim::aer
