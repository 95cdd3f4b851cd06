#include "tailsim/topology/topology.hpp"

#include "tailsim/sim/hash.hpp"

namespace tailsim {

SimTime propagation_for_rtt(SimTime target_rtt, std::uint64_t probe_bytes,
                            std::uint64_t host_rate_bps, std::uint64_t uplink_rate_bps) {
    // host->leaf, leaf->spine, spine->leaf, leaf->host; then the same back.
    const SimTime serialization =
        (serialization_delay(probe_bytes, host_rate_bps) + serialization_delay(probe_bytes, uplink_rate_bps)) * 4;
    const std::uint64_t remaining = (target_rtt - serialization).count();
    return SimTime::ns((remaining + 7) / 8);
}

Topology Topology::build_leaf_spine(const LeafSpineParams& p, std::uint64_t ecmp_seed) {
    if (p.n_leaf == 0 || p.n_spine == 0 || p.hosts_per_leaf == 0)
        throw std::invalid_argument("leaf-spine counts must all be >= 1");
    if (p.host_rate_bps == 0 || p.uplink_rate_bps == 0)
        throw std::invalid_argument("link rates must be positive");

    Topology t;
    t.params_ = p;
    t.ecmp_seed_ = ecmp_seed;
    t.out_.resize(t.n_nodes());
    for (std::uint32_t h = 0; h < t.n_hosts(); ++h) t.out_[t.slot(t.host(h))].resize(1);
    for (std::uint32_t l = 0; l < p.n_leaf; ++l)
        t.out_[t.slot({NodeKind::Leaf, l})].resize(p.hosts_per_leaf + p.n_spine);
    for (std::uint32_t s = 0; s < p.n_spine; ++s) t.out_[t.slot({NodeKind::Spine, s})].resize(p.n_leaf);

    auto connect = [&t](PortId a, PortId b, std::uint64_t rate, SimTime prop) {
        t.links_.push_back(Link{a, b, rate, prop});
        t.out_[t.slot(a.node)][a.port] = Channel{a, b, rate, prop};
        t.out_[t.slot(b.node)][b.port] = Channel{b, a, rate, prop};
    };

    for (std::uint32_t l = 0; l < p.n_leaf; ++l) {
        const NodeId leaf{NodeKind::Leaf, l};
        for (std::uint32_t i = 0; i < p.hosts_per_leaf; ++i) {
            connect(PortId{t.host(l * p.hosts_per_leaf + i), 0}, PortId{leaf, i}, p.host_rate_bps, p.propagation);
        }
        for (std::uint32_t s = 0; s < p.n_spine; ++s) {
            connect(PortId{leaf, p.hosts_per_leaf + s}, PortId{{NodeKind::Spine, s}, l}, p.uplink_rate_bps,
                    p.propagation);
        }
    }
    return t;
}

double Topology::oversubscription() const {
    return (static_cast<double>(params_.hosts_per_leaf) * static_cast<double>(params_.host_rate_bps)) /
           (static_cast<double>(params_.n_spine) * static_cast<double>(params_.uplink_rate_bps));
}

std::uint32_t Topology::slot(NodeId n) const {
    switch (n.kind) {
        case NodeKind::Host:
            if (n.index >= n_hosts()) break;
            return n.index;
        case NodeKind::Leaf:
            if (n.index >= n_leaf()) break;
            return n_hosts() + n.index;
        case NodeKind::Spine:
            if (n.index >= n_spine()) break;
            return n_hosts() + n_leaf() + n.index;
    }
    throw RoutingError("no such node: " + to_string(n));
}

NodeId Topology::node_at_slot(std::uint32_t s) const {
    if (s < n_hosts()) return {NodeKind::Host, s};
    s -= n_hosts();
    if (s < n_leaf()) return {NodeKind::Leaf, s};
    s -= n_leaf();
    if (s < n_spine()) return {NodeKind::Spine, s};
    throw RoutingError("slot out of range");
}

std::uint32_t Topology::port_count(NodeId n) const {
    return static_cast<std::uint32_t>(out_[slot(n)].size());
}

const Channel& Topology::channel(PortId port) const {
    const auto& ports = out_[slot(port.node)];
    if (port.port >= ports.size()) throw RoutingError("no such port on " + to_string(port.node));
    return ports[port.port];
}

void Topology::check_host(NodeId n, const char* what) const {
    if (n.kind != NodeKind::Host || n.index >= n_hosts())
        throw RoutingError(std::string(what) + " is not a host: " + to_string(n));
}

std::uint64_t Topology::leaf_salt(std::uint32_t leaf) const {
    return hash_combine(ecmp_seed_, 0x1eafULL + leaf);
}

PortId Topology::ecmp_route(const FlowKey& key, NodeId at) const {
    check_host(key.src, "flow source");
    check_host(key.dst, "flow destination");
    if (key.src == key.dst) throw RoutingError("flow source equals destination");

    const std::uint32_t dst_leaf = leaf_of(key.dst);
    switch (at.kind) {
        case NodeKind::Host:
            if (at != key.src) throw RoutingError("host " + to_string(at) + " is not the source of this flow");
            return PortId{at, 0};
        case NodeKind::Leaf: {
            if (at.index >= n_leaf()) break;
            if (at.index == dst_leaf) return PortId{at, key.dst.index % params_.hosts_per_leaf};
            if (at.index != leaf_of(key.src)) throw RoutingError("leaf " + to_string(at) + " is off path");
            std::uint64_t h = leaf_salt(at.index);
            h = hash_combine(h, key.src.index);
            h = hash_combine(h, key.dst.index);
            h = hash_combine(h, key.flow_id);
            return PortId{at, params_.hosts_per_leaf + static_cast<std::uint32_t>(h % params_.n_spine)};
        }
        case NodeKind::Spine:
            if (at.index >= n_spine()) break;
            if (leaf_of(key.src) == dst_leaf) throw RoutingError("spine is off path for an intra-leaf flow");
            return PortId{at, dst_leaf};
    }
    throw RoutingError("no route at " + to_string(at));
}

std::vector<NodeId> Topology::path(const FlowKey& key) const {
    std::vector<NodeId> nodes{key.src};
    NodeId at = key.src;
    while (at != key.dst) {
        if (nodes.size() > 5) throw RoutingError("routing loop");
        at = channel(ecmp_route(key, at)).to.node;
        nodes.push_back(at);
    }
    return nodes;
}

std::string to_string(NodeId n) {
    const char* kind = n.kind == NodeKind::Host ? "host" : n.kind == NodeKind::Leaf ? "leaf" : "spine";
    return std::string(kind) + std::to_string(n.index);
}

}  // namespace tailsim
