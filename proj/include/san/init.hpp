#pragma once

#include <cstdint>
#include <string>

#include "san/tensor.hpp"

namespace san {

/// Deterministic stream of doubles derived from a seed. The mapping from raw
/// 64-bit draws to doubles is spelled out here (not delegated to
/// std::uniform_real_distribution) so results are identical across standard
/// library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// uniform in [0,1)
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// uniform in [lo,hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// uniform integer in [0,n)
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t state_;
};

/// Seed derived from (seed, name) so initialization does not depend on the
/// order parameters are registered.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& name);

/// uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))
Tensor xavier_uniform(std::vector<std::size_t> shape, std::size_t fan_in,
                      std::size_t fan_out, std::uint64_t seed, const std::string& name);

}  // namespace san
