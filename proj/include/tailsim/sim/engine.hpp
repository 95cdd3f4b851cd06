#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "tailsim/sim/time.hpp"

namespace tailsim {

enum class EventKind : std::uint8_t {
    PacketArrival,
    LinkFree,
    TransportTimeout,
    FlowStart,
    TelemetrySample,
    RunEnd,
};

/// A scheduled occurrence. `target` and `payload` are interpreted per kind
/// (node and packet for arrivals, port for link-free, flow for timeouts...).
struct Event {
    SimTime fire_at;
    std::uint64_t sequence = 0;  // assigned by Engine::schedule
    EventKind kind = EventKind::RunEnd;
    std::uint32_t target = 0;
    std::uint32_t payload = 0;
};

struct EventHandle {
    std::uint64_t sequence;
};

struct RunSummary {
    std::uint64_t events = 0;
    SimTime clock;
    std::uint64_t trace_digest = 0;
};

class SchedulingError : public std::logic_error {
    using std::logic_error::logic_error;
};

class EventSink {
public:
    virtual ~EventSink() = default;
    virtual void handle(const Event& event) = 0;
};

/// Single-threaded discrete-event engine. Events fire in (fire_at, sequence)
/// order; sequence is the insertion counter, so simultaneous events are FIFO.
class Engine {
public:
    SimTime now() const { return clock_; }
    std::size_t pending() const { return queue_.size(); }
    std::uint64_t processed() const { return processed_; }
    std::uint64_t trace_digest() const { return digest_; }

    EventHandle schedule(Event event);
    EventHandle schedule(SimTime fire_at, EventKind kind, std::uint32_t target = 0,
                         std::uint32_t payload = 0) {
        return schedule(Event{fire_at, 0, kind, target, payload});
    }

    /// Processes every event with fire_at <= end, or until stop() is called
    /// from a handler. A RunEnd event also stops the loop after dispatch.
    RunSummary run_until(SimTime end, EventSink& sink);

    void stop() { stop_requested_ = true; }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
            return a.sequence > b.sequence;
        }
    };

    void fold_into_digest(const Event& e);

    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    SimTime clock_;
    std::uint64_t next_sequence_ = 0;
    std::uint64_t processed_ = 0;
    std::uint64_t digest_ = 0xcbf29ce484222325ULL;
    bool stop_requested_ = false;
};

}  // namespace tailsim
