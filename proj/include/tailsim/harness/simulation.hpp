#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "tailsim/fabric/port_queue.hpp"
#include "tailsim/sim/engine.hpp"
#include "tailsim/telemetry/stats.hpp"
#include "tailsim/topology/topology.hpp"
#include "tailsim/transport/dctcp.hpp"
#include "tailsim/workload/workload.hpp"

namespace tailsim {

struct TopologyConfig {
    std::uint32_t n_leaf = 8;
    std::uint32_t n_spine = 4;
    std::uint32_t hosts_per_leaf = 10;
    std::uint64_t host_rate_bps = 10'000'000'000ULL;
    std::uint64_t uplink_rate_bps = 10'000'000'000ULL;
    SimTime target_rtt = SimTime::us(80);
};

struct FabricConfig {
    SchedulerMode mode = SchedulerMode::Slytherin;
    std::uint64_t buffer_bytes = 150'000;
    double ecn_threshold_frac = 0.25;
    std::vector<std::uint64_t> pias_thresholds{32'000, 128'000, 512'000};
    std::uint32_t sjf_queues = kDefaultSjfQueues;

    std::uint64_t ecn_threshold_bytes() const;
};

enum class TrafficPattern : std::uint8_t { Poisson, Convergence };

struct ConvergenceConfig {
    std::uint32_t competitors = 20;
    std::uint32_t start_after_rtts = 10;
    std::uint32_t measure_rtts = 40;  // RTT bins recorded after competitors start
};

struct TelemetryConfig {
    OpportunityGranularity opportunity_granularity = OpportunityGranularity::Packet;
    double tail_percentile = 95.0;
    bool sample_queues = true;
    bool audit = false;               // shadow-check strict priority and FIFO order
    bool keep_packet_traces = false;  // per-packet PacketTraceRecord log
    double convergence_tol = 0.10;
    std::uint32_t convergence_hold = 3;
};

struct SimulationConfig {
    TopologyConfig topology;
    TrafficPattern pattern = TrafficPattern::Poisson;
    WorkloadConfig workload;
    ConvergenceConfig convergence;
    FabricConfig fabric;
    TransportParams transport;
    TelemetryConfig telemetry;
    SimTime drain = SimTime::ms(2000);  // extra time after the last arrival
    std::uint64_t seed = 1;
};

struct RunMetrics {
    std::optional<double> fct_short_mean_us;
    std::optional<double> fct_short_p99_us;
    std::optional<double> fct_incast_mean_us;
    std::optional<double> fct_incast_p99_us;
    std::optional<double> throughput_long_gbps;
    std::optional<double> queue_p99_bytes;
    std::optional<double> queue_mean_bytes;
    std::optional<double> opportunity;
    std::uint64_t opportunity_tail_packets = 0;
    bool opportunity_low_confidence = true;
    double reordering = 0.0;
    std::optional<double> convergence_rtts;  // present only for the convergence pattern; inf if never
    std::uint64_t flows = 0;
    std::uint64_t flows_completed = 0;
    std::uint64_t drops = 0;
    std::uint64_t timeouts = 0;
    std::uint64_t fast_retransmits = 0;
    std::uint64_t data_packets_delivered = 0;
};

struct PacketCounts {
    std::uint64_t injected = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t in_flight = 0;
    bool balanced() const { return injected == delivered + dropped + in_flight; }
};

struct InvariantReport {
    std::uint64_t first_hop_priority_violations = 0;  // slytherin data packet in queue 0 at hop 0
    std::uint64_t ce_soundness_violations = 0;        // ce at delivery != any hop marked
    std::uint64_t strict_priority_violations = 0;     // audit only
    std::uint64_t fifo_violations = 0;                // audit only
    std::uint64_t occupancy_violations = 0;
    std::uint64_t flow_conservation_violations = 0;
    std::uint64_t fct_lower_bound_violations = 0;
    std::uint64_t audited_dequeues = 0;
    double alpha_min = 1.0;
    double alpha_max = 0.0;

    bool clean() const {
        return first_hop_priority_violations == 0 && ce_soundness_violations == 0 &&
               strict_priority_violations == 0 && fifo_violations == 0 && occupancy_violations == 0 &&
               flow_conservation_violations == 0 && fct_lower_bound_violations == 0;
    }
};

struct RunResult {
    RunSummary summary;
    RunMetrics metrics;
    std::vector<Flow> flows;  // with completion times
    std::vector<FctSample> fcts;
    std::vector<FlowMarkTally> mark_tallies;
    std::vector<ReceiverLog> receiver_logs;
    std::vector<CdfPoint> queue_cdf;
    std::vector<double> convergence_series_bps;  // tracked flow, one value per RTT after competitors start
    std::vector<PacketTraceRecord> packet_traces;
    PacketCounts packets;
    InvariantReport invariants;
};

Topology build_topology(const TopologyConfig& config, std::uint64_t seed);

/// One seeded run: builds the fabric and workload, simulates until every flow
/// completes (or the drain limit), and reduces telemetry into metrics.
class Simulation final : public EventSink {
public:
    explicit Simulation(const SimulationConfig& config);
    /// Runs a caller-supplied flow schedule instead of the generated one.
    Simulation(const SimulationConfig& config, std::vector<Flow> schedule);
    ~Simulation() override;

    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    RunResult run();
    const Topology& topology() const { return topo_; }

private:
    struct OutPort;
    struct FlowState;
    struct Audit;

    void handle(const Event& event) override;
    void start_flow(std::uint32_t flow);
    void pump(std::uint32_t flow);
    void arm_timer(std::uint32_t flow);
    void on_timer(std::uint32_t flow);
    void arrive(std::uint32_t slot, PacketId id);
    void deliver_to_host(PacketId id);
    void enqueue_at(std::uint32_t port, PacketId id);
    void try_transmit(std::uint32_t port);
    void sample_tracked_flow();

    PacketId allocate_packet();
    void free_packet(PacketId id);
    std::uint32_t port_index(PortId port) const;

    RunResult collect();

    SimulationConfig config_;
    Topology topo_;
    Engine engine_;
    std::vector<Flow> schedule_;
    std::vector<FlowState> flows_;
    std::vector<OutPort> ports_;
    std::vector<std::uint32_t> port_base_;  // by node slot
    std::vector<Packet> packets_;
    std::vector<PacketId> free_packets_;
    std::uint64_t live_packets_ = 0;
    std::optional<OccupancyHistogram> occupancy_;
    std::unique_ptr<Audit> audit_;
    PacketCounts counts_;
    InvariantReport invariants_;
    std::uint64_t completed_ = 0;
    SimTime end_time_;

    // Convergence pattern: delivered wire bytes of flow 0 per RTT.
    SimTime sample_period_;
    std::uint64_t tracked_bytes_ = 0;
    std::vector<double> tracked_series_;
    std::vector<PacketTraceRecord> traces_;
};

RunResult run_simulation(const SimulationConfig& config);

}  // namespace tailsim
