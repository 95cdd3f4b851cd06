#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tailsim {

/// Seeded uniform variate stream. Built on std::mt19937_64, whose raw output
/// sequence is fixed by the standard; the real-valued draws below are computed
/// here rather than with <random> distributions, which are not portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    /// Independent stream for a named consumer ("workload", "ecmp", ...).
    static Rng derive(std::uint64_t master_seed, std::string_view label);
    static std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 bits of precision.
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer on [0, n).
    std::uint64_t next_below(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Uniform real on [lo, hi); returns lo when lo == hi.
double draw_uniform(Rng& rng, double lo, double hi);

/// Exponential with the given mean.
double draw_exponential(Rng& rng, double mean);

}  // namespace tailsim
