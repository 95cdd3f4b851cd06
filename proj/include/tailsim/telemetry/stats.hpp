#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "tailsim/fabric/packet.hpp"
#include "tailsim/sim/time.hpp"
#include "tailsim/topology/topology.hpp"
#include "tailsim/workload/workload.hpp"

namespace tailsim {

class StatsError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FctSample {
    FlowKey key;
    FlowClass cls = FlowClass::Short;
    std::uint64_t size = 0;
    SimTime fct;
};

struct PacketTraceRecord {
    FlowKey key;
    std::uint64_t seq = 0;
    std::uint8_t hops_marked = 0;
    SimTime delivered_at;
};

struct QueueSample {
    std::uint32_t port = 0;
    SimTime time;
    std::uint64_t occupancy = 0;
};

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest sample.
double percentile(std::span<const double> samples, double p);

double mean(std::span<const double> samples);

/// Delivered data packets of one flow, bucketed by how many switches marked them.
struct FlowMarkTally {
    std::uint64_t flow_id = 0;
    std::array<std::uint64_t, kMaxSwitchHops + 1> packets_by_marks{};

    std::uint64_t packets() const;
    std::uint64_t multi_marked() const;  // marked at two or more switches
};

enum class OpportunityGranularity : std::uint8_t { Packet, Flow };

struct OpportunityResult {
    double fraction = 0.0;
    std::uint64_t tail_units = 0;  // packets (or flows) belonging to tail flows
    std::uint64_t multi_marked = 0;
    bool low_confidence = false;  // fewer than 100 tail packets
};

/// Share of tail packets that were ECN-marked at two or more switches. Tail
/// packets are those of flows whose FCT exceeds the `tail_percentile` FCT of
/// `fcts`. Flow granularity counts a tail flow once if any of its packets
/// was multiply marked.
OpportunityResult opportunity_fraction(std::span<const FlowMarkTally> tallies, std::span<const FctSample> fcts,
                                       OpportunityGranularity granularity = OpportunityGranularity::Packet,
                                       double tail_percentile = 95.0);
OpportunityResult opportunity_fraction(std::span<const PacketTraceRecord> traces, std::span<const FctSample> fcts,
                                       OpportunityGranularity granularity = OpportunityGranularity::Packet,
                                       double tail_percentile = 95.0);

/// Mean of size*8/fct over long flows, in bits per second.
double long_flow_throughput(std::span<const FctSample> fcts);

/// First index i such that series[i .. i+hold) all lie within
/// fair_share*(1 +- tol). nullopt when that never happens.
std::optional<std::size_t> convergence_time(std::span<const double> series, double fair_share, double tol,
                                            std::size_t hold = 3);

struct ReceiverLog {
    std::uint64_t data_packets = 0;
    std::uint64_t reordered = 0;
};

double reordering_fraction(std::span<const ReceiverLog> logs);

struct CdfPoint {
    std::uint64_t occupancy = 0;
    double fraction = 0.0;
};

/// Holding-time-weighted CDF of queue occupancy evaluated at `grid`. Each
/// sample holds until the next sample of the same port, or until `end`.
std::vector<CdfPoint> queue_cdf(std::span<const QueueSample> samples, std::span<const std::uint64_t> grid,
                                SimTime end);

/// Streaming form of queue_cdf: time-weighted occupancy histogram over many
/// ports at one-byte resolution. All ports start empty at time zero.
class OccupancyHistogram {
public:
    OccupancyHistogram(std::size_t ports, std::uint64_t max_occupancy);

    void observe(std::uint32_t port, SimTime now, std::uint64_t occupancy);
    /// Credits every port's current occupancy up to `end`.
    void finish(SimTime end);

    std::uint64_t total_weight() const { return total_; }
    double cdf_at(std::uint64_t occupancy) const;
    std::vector<CdfPoint> cdf(std::span<const std::uint64_t> grid) const;
    /// Smallest occupancy whose cumulative weight reaches p percent.
    std::uint64_t percentile(double p) const;
    double mean() const;

private:
    struct PortState {
        SimTime since;
        std::uint64_t occupancy = 0;
    };
    std::vector<PortState> ports_;
    std::vector<std::uint64_t> weight_;
    std::uint64_t total_ = 0;
};

}  // namespace tailsim
