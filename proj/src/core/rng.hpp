#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace heartsim {

// Every random draw in a run flows from one scenario seed through tagged
// sub-streams, so draw order in one component never shifts another.
inline uint64_t derive_seed(uint64_t base, std::string_view tag) {
    uint64_t h = 1469598103934665603ull ^ base;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::mt19937 make_rng(uint64_t base, std::string_view tag) {
    return std::mt19937(static_cast<uint32_t>(derive_seed(base, tag) & 0xffffffffu));
}

// mt19937 output is pinned by the standard; std::*_distribution is not.
// Draw through these so transcripts stay byte-identical across toolchains.
inline double next_u01(std::mt19937& rng) {
    return rng() * (1.0 / 4294967296.0);
}

inline int uniform_int(std::mt19937& rng, int lo, int hi) {
    const uint32_t span = static_cast<uint32_t>(hi - lo + 1);
    return lo + static_cast<int>(rng() % span);
}

inline bool roll(std::mt19937& rng, double p) {
    return next_u01(rng) < p;
}

}  // namespace heartsim
