#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "tailsim/sim/rng.hpp"
#include "tailsim/sim/time.hpp"
#include "tailsim/topology/topology.hpp"

namespace tailsim {

enum class FlowClass : std::uint8_t { Short, Long, Incast };

std::string_view to_string(FlowClass c);

struct Flow {
    FlowKey key;
    std::uint64_t size = 0;  // payload bytes
    SimTime arrive_at;
    std::optional<SimTime> completed_at;
    FlowClass cls = FlowClass::Short;
};

/// What "load" is a fraction of.
enum class LoadBasis : std::uint8_t {
    Host,        // aggregate host-link capacity
    Bottleneck,  // the tighter of host links and leaf uplinks, given uniform endpoints
};

struct IncastConfig {
    std::uint32_t degree = 32;
    SimTime period = SimTime::ms(1);
    std::uint64_t response_size = 0;  // 0: draw each response from the short range
};

struct WorkloadConfig {
    double load = 0.6;
    LoadBasis basis = LoadBasis::Host;
    std::uint64_t short_min = 8'000;
    std::uint64_t short_max = 32'000;
    std::uint64_t long_size = 1'000'000;
    double long_flow_fraction = 0.30;
    SimTime duration = SimTime::ms(100);
    std::uint64_t max_flows = 0;  // background flows; 0 = bounded by duration only
    std::optional<IncastConfig> incast;
};

void validate(const WorkloadConfig& config);

double mean_flow_size(const WorkloadConfig& config);
double mean_incast_response(const WorkloadConfig& config);

/// Capacity (bits/s) that load is measured against.
double load_capacity_bps(const WorkloadConfig& config, const Topology& topo);

/// Fabric-wide arrival rate of background flows, in flows per second. Incast
/// bytes, when configured, are carved out of the same load budget.
double background_arrival_rate(const WorkloadConfig& config, const Topology& topo);

/// Poisson background flows with uniformly random distinct endpoints.
std::vector<Flow> generate(const WorkloadConfig& config, const Topology& topo, Rng& rng);

/// Synchronized incast bursts over [0, horizon).
std::vector<Flow> generate_incast(const WorkloadConfig& config, const Topology& topo, Rng& rng, SimTime horizon);

/// Background plus incast, ordered by arrival, with flow ids equal to the
/// position in the returned schedule.
std::vector<Flow> build_schedule(const WorkloadConfig& config, const Topology& topo, std::uint64_t master_seed);

struct ConvergenceScenario {
    std::uint32_t competitors = 20;
    SimTime competitor_start = SimTime::us(800);
    std::uint64_t flow_size = 1'000'000'000'000ULL;  // effectively unbounded
};

/// One long flow host0 -> host2, then `competitors` flows host1 -> host3 all
/// starting together. Expects a fabric with hosts 0,1 on one leaf and 2,3 on
/// another.
std::vector<Flow> convergence_schedule(const ConvergenceScenario& scenario, const Topology& topo);

/// flow_id,src,dst,size,arrive_ns
void write_schedule_csv(std::ostream& out, const std::vector<Flow>& flows);

}  // namespace tailsim
