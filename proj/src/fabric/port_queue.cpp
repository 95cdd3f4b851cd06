#include "tailsim/fabric/port_queue.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace tailsim {

std::string_view to_string(SchedulerMode mode) {
    switch (mode) {
        case SchedulerMode::DctcpFifo: return "dctcp_fifo";
        case SchedulerMode::Slytherin: return "slytherin";
        case SchedulerMode::Pias: return "pias";
        case SchedulerMode::SjfIdeal: return "sjf_ideal";
    }
    return "unknown";
}

std::optional<SchedulerMode> parse_scheduler_mode(std::string_view text) {
    for (auto m : {SchedulerMode::DctcpFifo, SchedulerMode::Slytherin, SchedulerMode::Pias, SchedulerMode::SjfIdeal}) {
        if (to_string(m) == text) return m;
    }
    return std::nullopt;
}

std::uint32_t queue_count(SchedulerMode mode, std::uint32_t sjf_queues) {
    switch (mode) {
        case SchedulerMode::DctcpFifo:
        case SchedulerMode::Slytherin: return 2;
        case SchedulerMode::Pias: return kPiasQueues;
        case SchedulerMode::SjfIdeal: return sjf_queues;
    }
    return 1;
}

std::uint8_t pias_priority(std::uint64_t bytes_sent, std::span<const std::uint64_t> thresholds) {
    const auto above = std::upper_bound(thresholds.begin(), thresholds.end(), bytes_sent);
    return static_cast<std::uint8_t>(above - thresholds.begin());
}

void validate_pias_thresholds(std::span<const std::uint64_t> thresholds) {
    if (thresholds.size() != kPiasQueues - 1)
        throw SchedulerConfigError("PIAS needs exactly " + std::to_string(kPiasQueues - 1) + " demotion thresholds");
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        if (thresholds[i] <= thresholds[i - 1])
            throw SchedulerConfigError("PIAS demotion thresholds must be strictly increasing");
    }
}

std::uint32_t sjf_band(std::uint64_t flow_size, std::uint32_t n_queues) {
    const std::uint64_t units = flow_size >> 12;
    const std::uint32_t band = units == 0 ? 0 : static_cast<std::uint32_t>(std::bit_width(units) - 1);
    return std::min(band, n_queues - 1);
}

std::uint32_t classify(SchedulerMode mode, const Packet& pkt, std::uint32_t sjf_queues) {
    switch (mode) {
        case SchedulerMode::DctcpFifo:
            return 1;
        case SchedulerMode::Slytherin:
            return (pkt.ce || pkt.is_ack) ? 0 : 1;
        case SchedulerMode::Pias:
            if (!pkt.pias_level) throw SchedulerConfigError("pias mode: packet carries no priority stamp");
            return std::min<std::uint32_t>(*pkt.pias_level, kPiasQueues - 1);
        case SchedulerMode::SjfIdeal:
            if (!pkt.flow_size) throw SchedulerConfigError("sjf_ideal mode: packet carries no flow-size stamp");
            return sjf_band(*pkt.flow_size, sjf_queues);
    }
    throw SchedulerConfigError("unknown scheduler mode");
}

PortQueueSet::PortQueueSet(const PortQueueConfig& config) : config_(config) {
    if (config.ecn_threshold_bytes > config.capacity_bytes)
        throw SchedulerConfigError("ECN threshold exceeds port capacity");
    if (config.mode == SchedulerMode::SjfIdeal && config.sjf_queues == 0)
        throw SchedulerConfigError("sjf_ideal needs at least one queue");
    const auto n = tailsim::queue_count(config.mode, config.sjf_queues);
    queues_.resize(n);
    bytes_.assign(n, 0);
}

EnqueueResult PortQueueSet::enqueue(Packet& pkt, PacketId id) {
    if (total_bytes_ + pkt.size > config_.capacity_bytes) return EnqueueResult{false, 0, false};

    const std::uint32_t q = classify(config_.mode, pkt, config_.sjf_queues);
    const bool marked = total_bytes_ >= config_.ecn_threshold_bytes;
    if (marked) pkt.ce = true;
    pkt.log_hop(marked, static_cast<std::uint8_t>(q));

    queues_[q].push_back(Entry{id, pkt.size});
    bytes_[q] += pkt.size;
    total_bytes_ += pkt.size;
    ++packets_;
    return EnqueueResult{true, q, marked};
}

std::optional<PacketId> PortQueueSet::dequeue() {
    for (std::size_t q = 0; q < queues_.size(); ++q) {
        auto& fifo = queues_[q];
        if (fifo.empty()) continue;
        const Entry e = fifo.front();
        fifo.pop_front();
        bytes_[q] -= e.size;
        total_bytes_ -= e.size;
        --packets_;
        return e.id;
    }
    return std::nullopt;
}

}  // namespace tailsim
