#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tailsim/sim/time.hpp"

namespace tailsim {

enum class NodeKind : std::uint8_t { Host, Leaf, Spine };

struct NodeId {
    NodeKind kind = NodeKind::Host;
    std::uint32_t index = 0;
    constexpr auto operator<=>(const NodeId&) const = default;
};

struct PortId {
    NodeId node;
    std::uint32_t port = 0;
    constexpr auto operator<=>(const PortId&) const = default;
};

/// Bidirectional link; each direction is an independent channel.
struct Link {
    PortId a;
    PortId b;
    std::uint64_t rate_bps = 0;
    SimTime propagation;
};

/// One direction of a link, as seen from its transmitting port.
struct Channel {
    PortId from;
    PortId to;
    std::uint64_t rate_bps = 0;
    SimTime propagation;
};

struct FlowKey {
    NodeId src;
    NodeId dst;
    std::uint64_t flow_id = 0;
    constexpr auto operator<=>(const FlowKey&) const = default;
};

class RoutingError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LeafSpineParams {
    std::uint32_t n_leaf = 8;
    std::uint32_t n_spine = 4;
    std::uint32_t hosts_per_leaf = 10;
    std::uint64_t host_rate_bps = 10'000'000'000ULL;
    std::uint64_t uplink_rate_bps = 10'000'000'000ULL;
    SimTime propagation = SimTime::us(10);
};

/// Per-link propagation delay that makes the unloaded host-to-host round trip
/// across the spine (four links each way, `probe_bytes` packets) equal
/// `target_rtt`.
SimTime propagation_for_rtt(SimTime target_rtt, std::uint64_t probe_bytes,
                            std::uint64_t host_rate_bps, std::uint64_t uplink_rate_bps);

/// Two-tier leaf-spine fabric. Port numbering:
///   host h:  port 0 -> its leaf
///   leaf l:  ports [0, hosts_per_leaf) -> hosts, then one port per spine
///   spine s: port i -> leaf i
/// Immutable after build.
class Topology {
public:
    static Topology build_leaf_spine(const LeafSpineParams& params, std::uint64_t ecmp_seed = 0);

    std::uint32_t n_leaf() const { return params_.n_leaf; }
    std::uint32_t n_spine() const { return params_.n_spine; }
    std::uint32_t hosts_per_leaf() const { return params_.hosts_per_leaf; }
    std::uint32_t n_hosts() const { return params_.n_leaf * params_.hosts_per_leaf; }
    std::uint32_t n_nodes() const { return n_hosts() + n_leaf() + n_spine(); }
    const LeafSpineParams& params() const { return params_; }
    const std::vector<Link>& links() const { return links_; }

    /// (hosts_per_leaf * host_rate) / (n_spine * uplink_rate)
    double oversubscription() const;

    NodeId host(std::uint32_t i) const { return {NodeKind::Host, i}; }
    std::uint32_t leaf_of(NodeId host) const { return host.index / params_.hosts_per_leaf; }

    /// Dense index over all nodes: hosts, then leaves, then spines.
    std::uint32_t slot(NodeId n) const;
    NodeId node_at_slot(std::uint32_t slot) const;
    std::uint32_t port_count(NodeId n) const;
    /// Channel leaving `port`.
    const Channel& channel(PortId port) const;

    /// Output port at `at` for packets of `key`. Deterministic per key;
    /// inter-leaf flows are hashed onto spine uplinks.
    PortId ecmp_route(const FlowKey& key, NodeId at) const;

    /// Nodes visited by a packet of `key`, source host to destination host.
    std::vector<NodeId> path(const FlowKey& key) const;

private:
    void check_host(NodeId n, const char* what) const;
    std::uint64_t leaf_salt(std::uint32_t leaf) const;

    LeafSpineParams params_;
    std::uint64_t ecmp_seed_ = 0;
    std::vector<Link> links_;
    std::vector<std::vector<Channel>> out_;  // by slot, then port
};

std::string to_string(NodeId n);

}  // namespace tailsim
