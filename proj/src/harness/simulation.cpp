#include "tailsim/harness/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tailsim {

std::uint64_t FabricConfig::ecn_threshold_bytes() const {
    return static_cast<std::uint64_t>(std::llround(ecn_threshold_frac * static_cast<double>(buffer_bytes)));
}

Topology build_topology(const TopologyConfig& c, std::uint64_t seed) {
    LeafSpineParams p;
    p.n_leaf = c.n_leaf;
    p.n_spine = c.n_spine;
    p.hosts_per_leaf = c.hosts_per_leaf;
    p.host_rate_bps = c.host_rate_bps;
    p.uplink_rate_bps = c.uplink_rate_bps;
    p.propagation = propagation_for_rtt(c.target_rtt, 40, c.host_rate_bps, c.uplink_rate_bps);
    return Topology::build_leaf_spine(p, Rng::derive_seed(seed, "ecmp"));
}

struct Simulation::OutPort {
    std::optional<PortQueueSet> queues;  // switch ports
    std::deque<PacketId> nic;            // host ports: unbounded send buffer
    std::uint32_t to_slot = 0;
    std::uint64_t rate_bps = 0;
    SimTime propagation;
    SimTime busy_until;
    bool wake_pending = false;
    std::uint32_t switch_port = 0;  // index among switch ports, for telemetry

    bool has_backlog() const { return queues ? !queues->empty() : !nic.empty(); }
};

struct Simulation::FlowState {
    std::optional<DctcpSender> sender;
    std::optional<DctcpReceiver> receiver;
    SimTime timer_deadline;
    bool timer_armed = false;
    bool timer_event_pending = false;
    PacketCounts packets;
    FlowMarkTally tally;
};

// Independent shadow of every port's per-queue contents, used to check strict
// priority and per-queue FIFO order on each dequeue.
struct Simulation::Audit {
    std::vector<std::vector<std::deque<PacketId>>> shadow;  // port -> queue -> ids

    void on_enqueue(std::uint32_t port, std::uint32_t queue, PacketId id) { shadow[port][queue].push_back(id); }

    void on_dequeue(std::uint32_t port, PacketId id, InvariantReport& report) {
        ++report.audited_dequeues;
        auto& queues = shadow[port];
        for (std::size_t q = 0; q < queues.size(); ++q) {
            if (queues[q].empty()) continue;
            if (queues[q].front() == id) {
                queues[q].pop_front();
                return;
            }
            // A higher-priority queue was nonempty, or the head was skipped.
            auto it = std::find(queues[q].begin(), queues[q].end(), id);
            if (it != queues[q].end()) {
                ++report.fifo_violations;
                queues[q].erase(it);
                return;
            }
            ++report.strict_priority_violations;
            for (std::size_t r = q + 1; r < queues.size(); ++r) {
                auto jt = std::find(queues[r].begin(), queues[r].end(), id);
                if (jt != queues[r].end()) {
                    queues[r].erase(jt);
                    return;
                }
            }
            return;
        }
    }
};

Simulation::Simulation(const SimulationConfig& config) : Simulation(config, {}) {
    if (config_.pattern == TrafficPattern::Poisson) {
        schedule_ = build_schedule(config_.workload, topo_, config_.seed);
    } else {
        ConvergenceScenario sc;
        sc.competitors = config_.convergence.competitors;
        sc.competitor_start = config_.topology.target_rtt * config_.convergence.start_after_rtts;
        schedule_ = convergence_schedule(sc, topo_);
    }
    flows_.resize(schedule_.size());
}

Simulation::Simulation(const SimulationConfig& config, std::vector<Flow> schedule)
    : config_(config), topo_(build_topology(config.topology, config.seed)), schedule_(std::move(schedule)) {
    if (config_.fabric.mode == SchedulerMode::Pias) validate_pias_thresholds(config_.fabric.pias_thresholds);
    for (std::size_t i = 0; i < schedule_.size(); ++i) schedule_[i].key.flow_id = i;
    flows_.resize(schedule_.size());

    PortQueueConfig qc;
    qc.mode = config_.fabric.mode;
    qc.capacity_bytes = config_.fabric.buffer_bytes;
    qc.ecn_threshold_bytes = config_.fabric.ecn_threshold_bytes();
    qc.sjf_queues = config_.fabric.sjf_queues;

    std::uint32_t switch_ports = 0;
    port_base_.resize(topo_.n_nodes());
    for (std::uint32_t slot = 0; slot < topo_.n_nodes(); ++slot) {
        const NodeId node = topo_.node_at_slot(slot);
        port_base_[slot] = static_cast<std::uint32_t>(ports_.size());
        for (std::uint32_t p = 0; p < topo_.port_count(node); ++p) {
            const Channel& ch = topo_.channel(PortId{node, p});
            OutPort op;
            op.to_slot = topo_.slot(ch.to.node);
            op.rate_bps = ch.rate_bps;
            op.propagation = ch.propagation;
            if (node.kind != NodeKind::Host) {
                op.queues.emplace(qc);
                op.switch_port = switch_ports++;
            }
            ports_.push_back(std::move(op));
        }
    }
    if (config_.telemetry.sample_queues) occupancy_.emplace(switch_ports, config_.fabric.buffer_bytes);
    if (config_.telemetry.audit) {
        audit_ = std::make_unique<Audit>();
        audit_->shadow.resize(ports_.size());
        for (std::size_t i = 0; i < ports_.size(); ++i) {
            if (ports_[i].queues) audit_->shadow[i].resize(ports_[i].queues->queue_count());
        }
    }
}

Simulation::~Simulation() = default;

std::uint32_t Simulation::port_index(PortId port) const {
    return port_base_[topo_.slot(port.node)] + port.port;
}

PacketId Simulation::allocate_packet() {
    ++live_packets_;
    ++counts_.injected;
    if (!free_packets_.empty()) {
        const PacketId id = free_packets_.back();
        free_packets_.pop_back();
        packets_[id] = Packet{};
        return id;
    }
    packets_.emplace_back();
    return static_cast<PacketId>(packets_.size() - 1);
}

void Simulation::free_packet(PacketId id) {
    --live_packets_;
    free_packets_.push_back(id);
}

RunResult Simulation::run() {
    for (std::uint32_t i = 0; i < schedule_.size(); ++i) {
        engine_.schedule(schedule_[i].arrive_at, EventKind::FlowStart, i);
    }
    if (config_.pattern == TrafficPattern::Convergence) {
        sample_period_ = config_.topology.target_rtt;
        const SimTime start = config_.topology.target_rtt * config_.convergence.start_after_rtts;
        end_time_ = start + sample_period_ * config_.convergence.measure_rtts;
        engine_.schedule(start, EventKind::TelemetrySample);
    } else {
        const SimTime last = schedule_.empty() ? SimTime{} : schedule_.back().arrive_at;
        end_time_ = last + config_.drain;
    }
    engine_.run_until(end_time_, *this);
    return collect();
}

void Simulation::handle(const Event& e) {
    switch (e.kind) {
        case EventKind::PacketArrival: arrive(e.target, e.payload); break;
        case EventKind::LinkFree:
            ports_[e.target].wake_pending = false;
            try_transmit(e.target);
            break;
        case EventKind::TransportTimeout: on_timer(e.target); break;
        case EventKind::FlowStart: start_flow(e.target); break;
        case EventKind::TelemetrySample: sample_tracked_flow(); break;
        case EventKind::RunEnd: break;
    }
}

void Simulation::sample_tracked_flow() {
    const SimTime start = config_.topology.target_rtt * config_.convergence.start_after_rtts;
    if (engine_.now() > start) {
        tracked_series_.push_back(static_cast<double>(tracked_bytes_) * 8.0 / sample_period_.to_seconds());
    }
    tracked_bytes_ = 0;
    const SimTime next = engine_.now() + sample_period_;
    if (next <= end_time_) engine_.schedule(next, EventKind::TelemetrySample);
}

void Simulation::start_flow(std::uint32_t flow) {
    auto& fs = flows_[flow];
    fs.sender.emplace(schedule_[flow].size, config_.transport);
    fs.receiver.emplace(schedule_[flow].size);
    fs.tally.flow_id = flow;
    pump(flow);
}

void Simulation::pump(std::uint32_t flow) {
    auto& fs = flows_[flow];
    const Flow& f = schedule_[flow];
    const std::uint32_t host_port = port_index(PortId{f.key.src, 0});
    bool sent = false;
    while (auto seg = fs.sender->next_segment()) {
        const PacketId id = allocate_packet();
        Packet& p = packets_[id];
        p.key = f.key;
        p.flow = flow;
        p.seq = seg->seq;
        p.payload = seg->len;
        p.size = seg->len + config_.transport.header_bytes;
        p.retransmit = seg->retransmit;
        p.pias_level = pias_priority(seg->bytes_sent_before, config_.fabric.pias_thresholds);
        p.flow_size = f.size;
        p.sent_at = engine_.now();
        ++fs.packets.injected;
        ports_[host_port].nic.push_back(id);
        sent = true;
    }
    if (sent) try_transmit(host_port);
    if (!fs.timer_armed) arm_timer(flow);
}

void Simulation::arm_timer(std::uint32_t flow) {
    auto& fs = flows_[flow];
    if (!fs.sender->timer_needed()) {
        fs.timer_armed = false;
        return;
    }
    fs.timer_armed = true;
    fs.timer_deadline = engine_.now() + fs.sender->state().rto;
    if (!fs.timer_event_pending) {
        engine_.schedule(fs.timer_deadline, EventKind::TransportTimeout, flow);
        fs.timer_event_pending = true;
    }
}

void Simulation::on_timer(std::uint32_t flow) {
    auto& fs = flows_[flow];
    fs.timer_event_pending = false;
    if (!fs.timer_armed || !fs.sender->timer_needed()) {
        fs.timer_armed = false;
        return;
    }
    if (engine_.now() < fs.timer_deadline) {
        engine_.schedule(fs.timer_deadline, EventKind::TransportTimeout, flow);
        fs.timer_event_pending = true;
        return;
    }
    fs.sender->on_timeout();
    fs.timer_armed = false;
    pump(flow);
}

void Simulation::arrive(std::uint32_t slot, PacketId id) {
    if (slot < topo_.n_hosts()) {
        deliver_to_host(id);
        return;
    }
    const NodeId node = topo_.node_at_slot(slot);
    const PortId out = topo_.ecmp_route(packets_[id].key, node);
    enqueue_at(port_index(out), id);
}

void Simulation::enqueue_at(std::uint32_t port, PacketId id) {
    OutPort& op = ports_[port];
    Packet& pkt = packets_[id];
    const EnqueueResult r = op.queues->enqueue(pkt, id);
    if (!r.accepted) {
        ++counts_.dropped;
        ++flows_[pkt.flow].packets.dropped;
        free_packet(id);
        return;
    }
    if (op.queues->occupancy() > op.queues->config().capacity_bytes) ++invariants_.occupancy_violations;
    if (occupancy_) occupancy_->observe(op.switch_port, engine_.now(), op.queues->occupancy());
    if (audit_) audit_->on_enqueue(port, r.queue, id);
    try_transmit(port);
}

void Simulation::try_transmit(std::uint32_t port) {
    OutPort& op = ports_[port];
    if (op.wake_pending) return;
    const SimTime now = engine_.now();
    if (now < op.busy_until) {
        if (op.has_backlog()) {
            engine_.schedule(op.busy_until, EventKind::LinkFree, port);
            op.wake_pending = true;
        }
        return;
    }
    PacketId id;
    if (op.queues) {
        const auto next = op.queues->dequeue();
        if (!next) return;
        id = *next;
        if (occupancy_) occupancy_->observe(op.switch_port, now, op.queues->occupancy());
        if (audit_) audit_->on_dequeue(port, id, invariants_);
    } else {
        if (op.nic.empty()) return;
        id = op.nic.front();
        op.nic.pop_front();
    }
    const SimTime serialization = serialization_delay(packets_[id].size, op.rate_bps);
    op.busy_until = now + serialization;
    engine_.schedule(op.busy_until + op.propagation, EventKind::PacketArrival, op.to_slot, id);
    if (op.has_backlog()) {
        engine_.schedule(op.busy_until, EventKind::LinkFree, port);
        op.wake_pending = true;
    }
}

void Simulation::deliver_to_host(PacketId id) {
    const SimTime now = engine_.now();
    Packet& pkt = packets_[id];
    pkt.delivered_at = now;
    const std::uint32_t flow = pkt.flow;
    auto& fs = flows_[flow];
    ++counts_.delivered;
    ++fs.packets.delivered;

    if (pkt.ce != (pkt.marks() > 0)) ++invariants_.ce_soundness_violations;
    if (config_.fabric.mode == SchedulerMode::Slytherin && !pkt.is_ack && pkt.hops > 0 &&
        pkt.hop_log[0].queue == 0)
        ++invariants_.first_hop_priority_violations;

    if (!pkt.is_ack) {
        const std::uint32_t marks = pkt.marks();
        fs.tally.packets_by_marks[std::min<std::size_t>(marks, kMaxSwitchHops)] += 1;
        if (config_.telemetry.keep_packet_traces) {
            traces_.push_back(PacketTraceRecord{pkt.key, pkt.seq, static_cast<std::uint8_t>(marks), now});
        }
        if (flow == 0 && config_.pattern == TrafficPattern::Convergence) tracked_bytes_ += pkt.size;

        const DataOutcome d = fs.receiver->on_data(pkt.seq, pkt.payload, pkt.ce, pkt.retransmit);
        const Flow& f = schedule_[flow];
        const std::uint32_t host_port = port_index(PortId{f.key.dst, 0});
        free_packet(id);

        const PacketId ack_id = allocate_packet();
        Packet& ack = packets_[ack_id];
        ack.key = FlowKey{f.key.dst, f.key.src, f.key.flow_id};
        ack.flow = flow;
        ack.seq = d.ack_seq;
        ack.size = config_.transport.header_bytes;
        ack.is_ack = true;
        ack.ece_echo = d.ece_echo;
        ack.pias_level = pias_priority(0, config_.fabric.pias_thresholds);
        ack.flow_size = f.size;
        ack.sent_at = now;
        ++fs.packets.injected;
        ports_[host_port].nic.push_back(ack_id);
        try_transmit(host_port);
        return;
    }

    const std::uint64_t ack_seq = pkt.seq;
    const bool ece = pkt.ece_echo;
    free_packet(id);
    if (!fs.sender || fs.sender->complete()) return;

    const AckOutcome a = fs.sender->on_ack(ack_seq, ece);
    if (a.window_closed) {
        const double alpha = fs.sender->state().alpha;
        invariants_.alpha_min = std::min(invariants_.alpha_min, alpha);
        invariants_.alpha_max = std::max(invariants_.alpha_max, alpha);
    }
    if (a.complete) {
        schedule_[flow].completed_at = now;
        fs.timer_armed = false;
        ++completed_;
        if (completed_ == schedule_.size() && config_.pattern == TrafficPattern::Poisson) engine_.stop();
        return;
    }
    if (a.newly_acked > 0) fs.timer_armed = false;  // restart below with a fresh deadline
    pump(flow);
}

RunResult Simulation::collect() {
    RunResult r;
    r.summary = RunSummary{engine_.processed(), engine_.now(), engine_.trace_digest()};
    if (occupancy_) occupancy_->finish(engine_.now());

    // Packets still queued or on the wire.
    counts_.in_flight = live_packets_;
    std::vector<std::uint64_t> live_per_flow(flows_.size(), 0);
    {
        std::vector<bool> is_free(packets_.size(), false);
        for (PacketId id : free_packets_) is_free[id] = true;
        for (std::size_t i = 0; i < packets_.size(); ++i) {
            if (!is_free[i]) ++live_per_flow[packets_[i].flow];
        }
    }

    const SimTime prop = topo_.params().propagation;
    auto& m = r.metrics;
    m.flows = schedule_.size();
    std::vector<double> short_fct, incast_fct;
    for (std::size_t i = 0; i < schedule_.size(); ++i) {
        const Flow& f = schedule_[i];
        auto& fs = flows_[i];
        fs.packets.in_flight = live_per_flow[i];
        if (!fs.packets.balanced()) ++invariants_.flow_conservation_violations;
        if (fs.sender) {
            m.timeouts += fs.sender->timeouts();
            m.fast_retransmits += fs.sender->fast_retransmits();
        }
        if (fs.receiver) {
            r.receiver_logs.push_back(ReceiverLog{fs.receiver->data_packets(), fs.receiver->reordered_packets()});
        }
        r.mark_tallies.push_back(fs.tally);
        if (!f.completed_at) continue;
        ++m.flows_completed;
        const SimTime fct = *f.completed_at - f.arrive_at;
        r.fcts.push_back(FctSample{f.key, f.cls, f.size, fct});

        const std::uint64_t segments = (f.size + config_.transport.mss - 1) / config_.transport.mss;
        const std::uint64_t wire = f.size + segments * config_.transport.header_bytes;
        const std::uint64_t links = topo_.path(f.key).size() - 1;
        const SimTime bound = serialization_delay(wire, topo_.params().host_rate_bps) + prop * (2 * links);
        if (fct < bound) ++invariants_.fct_lower_bound_violations;

        if (f.cls == FlowClass::Short || f.cls == FlowClass::Incast) short_fct.push_back(fct.to_us());
        if (f.cls == FlowClass::Incast) incast_fct.push_back(fct.to_us());
    }
    for (const auto& l : r.receiver_logs) m.data_packets_delivered += l.data_packets;

    if (!short_fct.empty()) {
        m.fct_short_mean_us = mean(short_fct);
        m.fct_short_p99_us = percentile(short_fct, 99.0);
    }
    if (!incast_fct.empty()) {
        m.fct_incast_mean_us = mean(incast_fct);
        m.fct_incast_p99_us = percentile(incast_fct, 99.0);
    }
    const bool any_long = std::any_of(r.fcts.begin(), r.fcts.end(),
                                      [](const FctSample& s) { return s.cls == FlowClass::Long; });
    if (any_long) m.throughput_long_gbps = long_flow_throughput(r.fcts) / 1e9;

    if (occupancy_ && occupancy_->total_weight() > 0) {
        m.queue_p99_bytes = static_cast<double>(occupancy_->percentile(99.0));
        m.queue_mean_bytes = occupancy_->mean();
        std::vector<std::uint64_t> grid;
        const std::uint64_t step = 1500;
        for (std::uint64_t g = 0; g <= config_.fabric.buffer_bytes; g += step) grid.push_back(g);
        r.queue_cdf = occupancy_->cdf(grid);
    }

    if (config_.pattern == TrafficPattern::Poisson) {
        std::vector<FctSample> short_samples;
        for (const auto& s : r.fcts) {
            if (s.cls != FlowClass::Long) short_samples.push_back(s);
        }
        if (!short_samples.empty()) {
            const auto opp = opportunity_fraction(r.mark_tallies, short_samples,
                                                  config_.telemetry.opportunity_granularity,
                                                  config_.telemetry.tail_percentile);
            m.opportunity = opp.fraction;
            m.opportunity_tail_packets = opp.tail_units;
            m.opportunity_low_confidence = opp.low_confidence;
        }
    } else {
        const double fair = static_cast<double>(config_.topology.uplink_rate_bps) /
                            static_cast<double>(config_.convergence.competitors + 1);
        const auto c = convergence_time(tracked_series_, fair, config_.telemetry.convergence_tol,
                                        config_.telemetry.convergence_hold);
        m.convergence_rtts = c ? static_cast<double>(*c) : std::numeric_limits<double>::infinity();
    }
    m.reordering = reordering_fraction(r.receiver_logs);
    m.drops = counts_.dropped;

    r.flows = schedule_;
    r.convergence_series_bps = tracked_series_;
    r.packet_traces = std::move(traces_);
    r.packets = counts_;
    r.invariants = invariants_;
    return r;
}

RunResult run_simulation(const SimulationConfig& config) {
    Simulation sim(config);
    return sim.run();
}

}  // namespace tailsim
