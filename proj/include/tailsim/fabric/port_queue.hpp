#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "tailsim/fabric/packet.hpp"

namespace tailsim {

enum class SchedulerMode : std::uint8_t { DctcpFifo, Slytherin, Pias, SjfIdeal };

std::string_view to_string(SchedulerMode mode);
std::optional<SchedulerMode> parse_scheduler_mode(std::string_view text);

/// Raised when a packet lacks a stamp its scheduler mode needs, or a queue
/// set is configured inconsistently.
class SchedulerConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kPiasQueues = 4;
inline constexpr std::uint32_t kDefaultSjfQueues = 8;

/// Number of strict-priority queues per port for `mode`.
std::uint32_t queue_count(SchedulerMode mode, std::uint32_t sjf_queues = kDefaultSjfQueues);

/// MLFQ level for a flow that has already sent `bytes_sent` bytes: the number
/// of demotion thresholds at or below it.
std::uint8_t pias_priority(std::uint64_t bytes_sent, std::span<const std::uint64_t> thresholds);

/// Checks that PIAS thresholds are strictly increasing and that there is one
/// fewer than the number of PIAS queues.
void validate_pias_thresholds(std::span<const std::uint64_t> thresholds);

/// Priority band for ideal SJF: log2 of the flow size in 4 KiB units,
/// saturating at the last queue.
std::uint32_t sjf_band(std::uint64_t flow_size, std::uint32_t n_queues);

/// Queue index for `pkt` under `mode`. Slytherin sends CE-marked packets and
/// ACKs to queue 0 and everything else to queue 1.
std::uint32_t classify(SchedulerMode mode, const Packet& pkt, std::uint32_t sjf_queues = kDefaultSjfQueues);

using PacketId = std::uint32_t;

struct PortQueueConfig {
    SchedulerMode mode = SchedulerMode::DctcpFifo;
    std::uint64_t capacity_bytes = 150'000;
    std::uint64_t ecn_threshold_bytes = 37'500;
    std::uint32_t sjf_queues = kDefaultSjfQueues;
};

struct EnqueueResult {
    bool accepted = false;
    std::uint32_t queue = 0;
    bool marked = false;
};

/// Bounded strict-priority queues behind one output port. Capacity and the
/// ECN threshold apply to the total occupancy across all queues.
class PortQueueSet {
public:
    explicit PortQueueSet(const PortQueueConfig& config);

    /// Tail-drops when the packet does not fit. Otherwise classifies on the
    /// packet's arriving CE bit, then marks it if the pre-enqueue occupancy is
    /// at least the threshold, and logs the hop on the packet.
    EnqueueResult enqueue(Packet& pkt, PacketId id);

    /// Head of the lowest-index nonempty queue.
    std::optional<PacketId> dequeue();

    const PortQueueConfig& config() const { return config_; }
    std::uint32_t queue_count() const { return static_cast<std::uint32_t>(queues_.size()); }
    std::uint64_t occupancy() const { return total_bytes_; }
    std::uint64_t queue_bytes(std::uint32_t q) const { return bytes_.at(q); }
    std::size_t queue_length(std::uint32_t q) const { return queues_.at(q).size(); }
    bool empty() const { return total_bytes_ == 0 && packets_ == 0; }

private:
    struct Entry {
        PacketId id;
        std::uint32_t size;
    };

    PortQueueConfig config_;
    std::vector<std::deque<Entry>> queues_;
    std::vector<std::uint64_t> bytes_;
    std::uint64_t total_bytes_ = 0;
    std::size_t packets_ = 0;
};

}  // namespace tailsim
