#include "san/init.hpp"

#include <cmath>

namespace san {

std::uint64_t derive_seed(std::uint64_t seed, const std::string& name) {
    // FNV-1a over the name, folded with the base seed
    std::uint64_t h = 14695981039346656037ull ^ seed;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Tensor xavier_uniform(std::vector<std::size_t> shape, std::size_t fan_in,
                      std::size_t fan_out, std::uint64_t seed, const std::string& name) {
    double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Rng rng(derive_seed(seed, name));
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-a, a);
    return t;
}

}  // namespace san
