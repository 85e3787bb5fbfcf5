#pragma once

#include <array>
#include <cstdint>
#include <cstddef>

namespace san {

/// Dimensions shared by every stage of the pipeline. Desk-scale defaults;
/// larger values are accepted anywhere that divisibility holds.
struct ModelConfig {
    std::size_t image_size = 32;  // H = W, divisible by 8
    std::array<std::size_t, 3> backbone_channels{8, 16, 32};
    std::size_t fusion_width = 16;
    std::array<std::size_t, 3> encoder_channels{8, 16, 32};  // last entry is d
    std::size_t k = 64;        // joint space dimension = GRU hidden size
    std::size_t emb_dim = 32;  // word embedding dimension
    std::size_t vocab_size = 2;
    std::size_t max_len = 16;

    std::size_t d() const { return encoder_channels[2]; }
    std::size_t grid() const { return image_size / 8; }      // X = Y
    std::size_t regions() const { return grid() * grid(); }  // M
};

}  // namespace san
