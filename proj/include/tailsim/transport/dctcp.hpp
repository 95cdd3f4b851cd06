#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "tailsim/sim/time.hpp"

namespace tailsim {

struct TransportParams {
    std::uint32_t mss = 1460;         // payload bytes per segment
    std::uint32_t header_bytes = 40;  // added to every segment; also the ACK size
    double g = 1.0 / 16.0;            // alpha estimator gain
    double initial_alpha = 1.0;
    std::uint32_t init_cwnd_segments = 10;
    SimTime min_rto = SimTime::ms(10);
    SimTime max_rto = SimTime::ms(640);
    std::uint32_t dupack_threshold = 3;
};

/// One step of the marked-fraction estimator: (1 - g) * alpha + g * fraction.
double dctcp_alpha_update(double alpha, double marked_fraction, double g);

/// Multiplicative decrease applied once per window with marks:
/// max(mss, cwnd * (1 - alpha / 2)).
double dctcp_reduced_window(double cwnd, double alpha, double mss);

struct DctcpState {
    double cwnd = 0;  // bytes
    double ssthresh = 0;
    double alpha = 1.0;
    double g = 1.0 / 16.0;
    std::uint64_t marked_bytes = 0;  // within the current observation window
    std::uint64_t acked_bytes = 0;
    std::uint64_t window_end_seq = 0;
    std::uint64_t next_seq = 0;
    std::uint64_t highest_acked = 0;
    std::uint64_t high_water = 0;  // highest byte ever sent; never decreases
    SimTime rto;

    std::uint64_t in_flight() const { return next_seq - highest_acked; }
};

struct Segment {
    std::uint64_t seq = 0;
    std::uint32_t len = 0;
    bool retransmit = false;
    std::uint64_t bytes_sent_before = 0;  // high-water mark when this segment left
};

struct AckOutcome {
    std::uint64_t newly_acked = 0;
    bool window_closed = false;  // an observation window ended on this ACK
    bool reduced = false;        // cwnd was cut for ECN on this ACK
    bool fast_retransmit = false;
    bool complete = false;
};

/// Sending half of a DCTCP connection for a flow of known size. Pure state
/// machine: the caller pulls segments with next_segment() and owns timers.
class DctcpSender {
public:
    DctcpSender(std::uint64_t flow_size, const TransportParams& params);

    /// Next segment allowed by the window, if any. A pending fast retransmit
    /// is released regardless of window.
    std::optional<Segment> next_segment();

    AckOutcome on_ack(std::uint64_t ack_seq, bool ece_echo);

    /// Retransmission timeout: go back to the first unacked byte.
    void on_timeout();

    bool complete() const { return state_.highest_acked >= size_; }
    bool timer_needed() const { return !complete() && state_.in_flight() > 0; }
    std::uint64_t flow_size() const { return size_; }
    const DctcpState& state() const { return state_; }
    std::uint64_t timeouts() const { return timeouts_; }
    std::uint64_t fast_retransmits() const { return fast_retransmits_; }
    std::uint64_t windows_closed() const { return windows_closed_; }
    std::uint64_t reductions() const { return reductions_; }

private:
    void close_window();

    TransportParams params_;
    std::uint64_t size_;
    DctcpState state_;
    std::optional<std::uint64_t> pending_retransmit_;
    std::uint32_t dupacks_ = 0;
    std::optional<std::uint64_t> recover_;  // fast-recovery exit point
    bool reduced_this_window_ = false;
    std::uint64_t timeouts_ = 0;
    std::uint64_t fast_retransmits_ = 0;
    std::uint64_t windows_closed_ = 0;
    std::uint64_t reductions_ = 0;
};

struct DataOutcome {
    std::uint64_t ack_seq = 0;  // cumulative: next byte expected
    bool ece_echo = false;
    bool reordered = false;  // arrived below the highest sequence already seen
    bool duplicate = false;  // carried no new bytes
    std::uint64_t newly_in_order = 0;
};

/// Receiving half: cumulative ACK per data packet, out-of-order segments
/// buffered, CE echoed per packet.
class DctcpReceiver {
public:
    explicit DctcpReceiver(std::uint64_t flow_size) : size_(flow_size) {}

    DataOutcome on_data(std::uint64_t seq, std::uint32_t len, bool ce, bool retransmit);

    std::uint64_t next_expected() const { return rcv_next_; }
    bool complete() const { return rcv_next_ >= size_; }
    std::uint64_t data_packets() const { return data_packets_; }
    std::uint64_t reordered_packets() const { return reordered_; }

private:
    std::uint64_t size_;
    std::uint64_t rcv_next_ = 0;
    std::map<std::uint64_t, std::uint64_t> out_of_order_;  // start -> end
    std::optional<std::uint64_t> max_seq_seen_;
    std::uint64_t data_packets_ = 0;
    std::uint64_t reordered_ = 0;
};

}  // namespace tailsim
