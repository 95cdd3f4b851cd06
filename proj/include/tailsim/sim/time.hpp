#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace tailsim {

/// Simulated time as an integer count of nanoseconds.
class SimTime {
public:
    constexpr SimTime() = default;

    static constexpr SimTime ns(std::uint64_t n) { return SimTime{n}; }
    static constexpr SimTime us(std::uint64_t n) { return SimTime{n * 1000}; }
    static constexpr SimTime ms(std::uint64_t n) { return SimTime{n * 1000 * 1000}; }
    static constexpr SimTime max() { return SimTime{std::numeric_limits<std::uint64_t>::max()}; }

    constexpr std::uint64_t count() const { return ns_; }
    constexpr double to_us() const { return static_cast<double>(ns_) / 1e3; }
    constexpr double to_seconds() const { return static_cast<double>(ns_) / 1e9; }

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime operator+(SimTime o) const { return SimTime{ns_ + o.ns_}; }
    constexpr SimTime& operator+=(SimTime o) {
        ns_ += o.ns_;
        return *this;
    }
    // Saturates at zero; SimTime is never negative.
    constexpr SimTime operator-(SimTime o) const { return SimTime{ns_ > o.ns_ ? ns_ - o.ns_ : 0}; }
    constexpr SimTime operator*(std::uint64_t k) const { return SimTime{ns_ * k}; }

private:
    constexpr explicit SimTime(std::uint64_t n) : ns_(n) {}
    std::uint64_t ns_ = 0;
};

/// Time to clock `bytes` onto a wire of `rate_bps`, rounded up to the next nanosecond.
constexpr SimTime serialization_delay(std::uint64_t bytes, std::uint64_t rate_bps) {
    if (rate_bps == 0) throw std::invalid_argument("link rate must be positive");
    const std::uint64_t bits_ns = bytes * 8ULL * 1'000'000'000ULL;
    return SimTime::ns((bits_ns + rate_bps - 1) / rate_bps);
}

}  // namespace tailsim
