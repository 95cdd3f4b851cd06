#include "tailsim/transport/dctcp.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace tailsim {

double dctcp_alpha_update(double alpha, double marked_fraction, double g) {
    return (1.0 - g) * alpha + g * marked_fraction;
}

double dctcp_reduced_window(double cwnd, double alpha, double mss) {
    return std::max(mss, cwnd * (1.0 - alpha / 2.0));
}

DctcpSender::DctcpSender(std::uint64_t flow_size, const TransportParams& params)
    : params_(params), size_(flow_size) {
    if (flow_size == 0) throw std::invalid_argument("flow size must be positive");
    if (params.mss == 0) throw std::invalid_argument("mss must be positive");
    if (!(params.g > 0.0 && params.g <= 1.0)) throw std::invalid_argument("g must be in (0, 1]");
    if (!(params.initial_alpha >= 0.0 && params.initial_alpha <= 1.0))
        throw std::invalid_argument("initial alpha must be in [0, 1]");
    const double mss = params.mss;
    state_.cwnd = std::max<double>(1, params.init_cwnd_segments) * mss;
    state_.ssthresh = std::numeric_limits<double>::infinity();
    state_.alpha = params.initial_alpha;
    state_.g = params.g;
    state_.window_end_seq = std::min<std::uint64_t>(size_, static_cast<std::uint64_t>(state_.cwnd));
    state_.rto = params.min_rto;
}

std::optional<Segment> DctcpSender::next_segment() {
    if (pending_retransmit_) {
        const std::uint64_t seq = *pending_retransmit_;
        pending_retransmit_.reset();
        if (seq < size_) {
            const auto len = static_cast<std::uint32_t>(std::min<std::uint64_t>(params_.mss, size_ - seq));
            return Segment{seq, len, true, state_.high_water};
        }
    }
    if (state_.next_seq >= size_) return std::nullopt;
    const auto len = static_cast<std::uint32_t>(std::min<std::uint64_t>(params_.mss, size_ - state_.next_seq));
    if (static_cast<double>(state_.in_flight() + len) > state_.cwnd) return std::nullopt;

    Segment seg{state_.next_seq, len, state_.next_seq < state_.high_water, state_.high_water};
    state_.next_seq += len;
    state_.high_water = std::max(state_.high_water, state_.next_seq);
    return seg;
}

void DctcpSender::close_window() {
    const double fraction =
        state_.acked_bytes == 0 ? 0.0
                                : static_cast<double>(state_.marked_bytes) / static_cast<double>(state_.acked_bytes);
    state_.alpha = dctcp_alpha_update(state_.alpha, fraction, state_.g);
    if (!(state_.alpha >= 0.0 && state_.alpha <= 1.0)) throw std::logic_error("DCTCP alpha left [0, 1]");
    if (state_.marked_bytes > 0) {
        state_.cwnd = dctcp_reduced_window(state_.cwnd, state_.alpha, params_.mss);
        state_.ssthresh = state_.cwnd;
        ++reductions_;
    }
    state_.marked_bytes = 0;
    state_.acked_bytes = 0;
    state_.window_end_seq = state_.next_seq;
    ++windows_closed_;
}

AckOutcome DctcpSender::on_ack(std::uint64_t ack_seq, bool ece_echo) {
    AckOutcome out;
    ack_seq = std::min(ack_seq, size_);
    const double mss = params_.mss;

    if (ack_seq > state_.highest_acked) {
        const std::uint64_t acked = ack_seq - state_.highest_acked;
        out.newly_acked = acked;
        state_.highest_acked = ack_seq;
        // After a go-back the receiver may have buffered past next_seq.
        state_.next_seq = std::max(state_.next_seq, state_.highest_acked);
        dupacks_ = 0;
        state_.rto = params_.min_rto;

        state_.acked_bytes += acked;
        if (ece_echo) state_.marked_bytes += acked;

        if (recover_ && state_.highest_acked < *recover_) {
            // Partial ACK during fast recovery: the next hole is lost too.
            pending_retransmit_ = state_.highest_acked;
        } else {
            recover_.reset();
            if (state_.cwnd < state_.ssthresh) {
                state_.cwnd += static_cast<double>(acked);
            } else {
                state_.cwnd += mss * static_cast<double>(acked) / state_.cwnd;
            }
        }

        if (state_.highest_acked >= state_.window_end_seq) {
            const bool marked = state_.marked_bytes > 0;
            close_window();
            out.window_closed = true;
            out.reduced = marked;
        }
    } else if (ack_seq == state_.highest_acked && state_.in_flight() > 0) {
        ++dupacks_;
        if (dupacks_ == params_.dupack_threshold && !recover_) {
            pending_retransmit_ = state_.highest_acked;
            state_.ssthresh = std::max(state_.cwnd / 2.0, 2.0 * mss);
            state_.cwnd = state_.ssthresh;
            recover_ = state_.next_seq;
            ++fast_retransmits_;
            out.fast_retransmit = true;
        }
    }
    out.complete = complete();
    return out;
}

void DctcpSender::on_timeout() {
    ++timeouts_;
    const double mss = params_.mss;
    state_.ssthresh = std::max(2.0 * mss, state_.cwnd / 2.0);
    state_.cwnd = mss;
    state_.next_seq = state_.highest_acked;
    pending_retransmit_.reset();
    recover_.reset();
    dupacks_ = 0;
    state_.rto = std::min(state_.rto * 2, params_.max_rto);
}

DataOutcome DctcpReceiver::on_data(std::uint64_t seq, std::uint32_t len, bool ce, bool retransmit) {
    DataOutcome out;
    ++data_packets_;
    if (!retransmit && max_seq_seen_ && seq < *max_seq_seen_) {
        out.reordered = true;
        ++reordered_;
    }
    max_seq_seen_ = std::max(max_seq_seen_.value_or(seq), seq);

    const std::uint64_t end = std::min<std::uint64_t>(seq + len, size_);
    const std::uint64_t before = rcv_next_;
    if (end <= rcv_next_) {
        out.duplicate = true;
    } else if (seq <= rcv_next_) {
        rcv_next_ = end;
        while (!out_of_order_.empty() && out_of_order_.begin()->first <= rcv_next_) {
            rcv_next_ = std::max(rcv_next_, out_of_order_.begin()->second);
            out_of_order_.erase(out_of_order_.begin());
        }
    } else {
        auto& stored = out_of_order_[seq];
        stored = std::max(stored, end);
    }
    out.newly_in_order = rcv_next_ - before;
    out.ack_seq = rcv_next_;
    out.ece_echo = ce;
    return out;
}

}  // namespace tailsim
