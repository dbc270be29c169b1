// Deterministic named RNG streams. Every random draw in the simulator comes
// from a stream keyed by (seed, purpose label, ids...), so runs are
// reproducible regardless of evaluation order or platform.
#pragma once

#include <cstdint>
#include <string_view>

#include "vaultsim/amount.hpp"

namespace vaultsim {

namespace detail {

inline u64 splitmix64(u64& state) {
    u64 z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline u64 mix(u64 h, u64 v) {
    h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    u64 s = h;
    return splitmix64(s);
}

inline u64 mix_label(u64 h, std::string_view label) {
    u64 acc = 1469598103934665603ULL; // FNV-1a over the label bytes
    for (char c : label) {
        acc ^= u64(static_cast<unsigned char>(c));
        acc *= 1099511628211ULL;
    }
    return mix(h, acc);
}

} // namespace detail

class RngStream {
public:
    RngStream() = default;
    explicit RngStream(u64 state) : state_(state) {}

    template <class... Ids>
    static RngStream derive(u64 seed, std::string_view label, Ids... ids) {
        u64 h = detail::mix(0x6A09E667F3BCC908ULL, seed);
        h = detail::mix_label(h, label);
        ((h = detail::mix(h, u64(ids))), ...);
        return RngStream(h);
    }

    u64 next_u64() { return detail::splitmix64(state_); }

    // Uniform in [0, 1) with 53 random bits; bit-stable across platforms.
    double next_u01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n); n must be > 0. Rejection-free modulo is fine
    // here: streams are short and bias at 64 bits is immaterial.
    u64 next_below(u64 n) { return next_u64() % n; }

private:
    u64 state_ = 0;
};

} // namespace vaultsim
