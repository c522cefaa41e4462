#pragma once

// Counter-based random streams. A stream is keyed by (seed, a, b) so that,
// e.g., every (pixel, frequency) cell of a synthetic stack draws from its own
// stream and the result does not depend on which thread generates it.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace oledmag {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0)
        : key_(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xd1342543de82ef95ULL + 1))) {}

    std::uint64_t next_u64() { return splitmix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

    // Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    // Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift; bias is < n / 2^64 and irrelevant here.
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; the sine partner is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace oledmag
