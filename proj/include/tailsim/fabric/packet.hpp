#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "tailsim/sim/time.hpp"
#include "tailsim/topology/topology.hpp"

namespace tailsim {

/// What happened to a packet at one switch it was queued at.
struct HopRecord {
    bool marked = false;     // CE set by this switch
    std::uint8_t queue = 0;  // queue index it was classified to
};

inline constexpr std::size_t kMaxSwitchHops = 4;

struct Packet {
    FlowKey key;
    std::uint32_t flow = 0;  // dense flow index within a run
    std::uint64_t seq = 0;   // data: first payload byte; ACK: cumulative ack
    std::uint32_t size = 0;  // bytes on the wire
    std::uint32_t payload = 0;
    bool is_ack = false;
    bool ce = false;
    bool ece_echo = false;
    bool retransmit = false;

    // Scheduler stamps set by the sending host.
    std::optional<std::uint8_t> pias_level;
    std::optional<std::uint64_t> flow_size;

    std::uint8_t hops = 0;
    std::array<HopRecord, kMaxSwitchHops> hop_log{};

    SimTime sent_at;
    SimTime delivered_at;

    std::uint32_t marks() const {
        std::uint32_t n = 0;
        for (std::uint8_t i = 0; i < hops; ++i) n += hop_log[i].marked ? 1 : 0;
        return n;
    }

    void log_hop(bool marked, std::uint8_t queue) {
        if (hops >= kMaxSwitchHops) throw std::logic_error("packet exceeded switch hop limit");
        hop_log[hops++] = HopRecord{marked, queue};
    }
};

}  // namespace tailsim
