#include "tailsim/sim/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tailsim/sim/hash.hpp"

namespace tailsim {

std::uint64_t Rng::derive_seed(std::uint64_t master_seed, std::string_view label) {
    return hash_combine(splitmix64(master_seed), fnv1a64(label));
}

Rng Rng::derive(std::uint64_t master_seed, std::string_view label) {
    return Rng{derive_seed(master_seed, label)};
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below: empty range");
    // Rejection keeps the result exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double draw_uniform(Rng& rng, double lo, double hi) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("draw_uniform: require finite lo <= hi");
    if (lo == hi) return lo;
    const double v = lo + (hi - lo) * rng.next_unit();
    return v < hi ? v : lo;
}

double draw_exponential(Rng& rng, double mean) {
    if (!(mean > 0.0) || !std::isfinite(mean))
        throw std::invalid_argument("draw_exponential: mean must be positive and finite");
    return -mean * std::log1p(-rng.next_unit());
}

}  // namespace tailsim
