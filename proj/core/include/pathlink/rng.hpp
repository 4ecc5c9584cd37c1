#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pathlink {

using Rng = std::mt19937_64;

// All randomness flows from one master seed. Component streams are derived by
// mixing an FNV-1a hash of the component name (plus an index for per-trial
// streams) into the master seed, then finalising with splitmix64.
inline uint64_t hash_name(std::string_view name) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, std::string_view component, uint64_t index = 0) {
    return splitmix64(master ^ hash_name(component) ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
}

inline Rng derive_rng(uint64_t master, std::string_view component, uint64_t index = 0) {
    return Rng(derive_seed(master, component, index));
}

}  // namespace pathlink
