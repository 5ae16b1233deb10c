#pragma once

#include <cstdint>
#include <random>

namespace tearnet {

// splitmix64 finalizer; used to derive independent per-case streams from
// (master_seed, case_id) without correlated low bits.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master ^ mix64(stream + 0x51ab3f2ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// Glorot/Xavier uniform bound for a dense layer.
inline double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename T>
inline void fill_uniform(std::mt19937_64& rng, std::vector<T>& v, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& x : v) x = static_cast<T>(dist(rng));
}

}  // namespace tearnet
