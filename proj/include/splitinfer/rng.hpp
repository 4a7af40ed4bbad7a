#ifndef SPLITINFER_RNG_HPP
#define SPLITINFER_RNG_HPP

#include <cstdint>

namespace splitinfer {

// Finalizer of the splitmix64 generator (Vigna, 2015). Constants:
// golden-ratio increment 0x9E3779B97F4A7C15 and the mixing multipliers
// 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB. Every seed, mask and weight
// draw in this project goes through this mixer so results reproduce
// across platforms.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Fold two words into one stream seed (used to derive per-trial and
// per-sample seeds from a root seed).
constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b));
}

// splitmix64 stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53 random bits
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // uniform in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        // multiply-shift; bias is < 2^-64 * n, irrelevant at our scales
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // standard normal via Box-Muller, one draw per call (pair cached)
    double next_gaussian();

private:
    std::uint64_t state_;
    double cached_gaussian_ = 0.0;
    bool has_cached_ = false;
};

} // namespace splitinfer

#endif
