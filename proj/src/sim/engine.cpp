#include "tailsim/sim/engine.hpp"

#include <string>

#include "tailsim/sim/hash.hpp"

namespace tailsim {

EventHandle Engine::schedule(Event event) {
    if (event.fire_at < clock_) {
        throw SchedulingError("event scheduled in the past: fire_at=" +
                              std::to_string(event.fire_at.count()) +
                              "ns clock=" + std::to_string(clock_.count()) + "ns");
    }
    event.sequence = next_sequence_++;
    queue_.push(event);
    return EventHandle{event.sequence};
}

void Engine::fold_into_digest(const Event& e) {
    // Telemetry samples are observation only and stay out of the digest.
    // Sequence numbers are excluded too: they shift when samples are added.
    if (e.kind == EventKind::TelemetrySample) return;
    std::uint64_t h = digest_;
    h = hash_combine(h, e.fire_at.count());
    h = hash_combine(h, static_cast<std::uint64_t>(e.kind));
    h = hash_combine(h, (static_cast<std::uint64_t>(e.target) << 32) | e.payload);
    digest_ = h;
}

RunSummary Engine::run_until(SimTime end, EventSink& sink) {
    stop_requested_ = false;
    while (!queue_.empty() && !stop_requested_) {
        const Event e = queue_.top();
        if (e.fire_at > end) break;
        queue_.pop();
        clock_ = e.fire_at;
        ++processed_;
        fold_into_digest(e);
        sink.handle(e);
        if (e.kind == EventKind::RunEnd) break;
    }
    return RunSummary{processed_, clock_, digest_};
}

}  // namespace tailsim
