#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "san/tensor.hpp"

namespace san::datasets {

struct Sample {
    std::string id;
    Tensor image;  // [3,H,W] in [0,1]
    Tensor mask;   // [H,W] in {0,1}
    std::vector<std::string> captions;
};

struct GeneratorOptions {
    std::size_t n_samples = 200;
    std::size_t image_size = 32;
    std::size_t max_shapes = 2;     // 1..2 shapes per image
    std::size_t captions_per_image = 2;
};

/// Renders non-overlapping colored shapes (circle / square / triangle in
/// red / green / blue / yellow) on a noisy gray background, with the exact
/// foreground mask and templated captions naming every shape. Writes PPM/PGM
/// files plus a JSON-lines manifest; fully deterministic from the seed.
/// Returns the manifest path.
std::string generate_corpus(const std::string& out_dir, std::uint64_t seed,
                            const GeneratorOptions& opts);

/// Loads a JSON-lines manifest; decodes images from PPM, masks from PGM
/// (thresholded back to {0,1}).
std::vector<Sample> load_manifest(const std::string& manifest_path);

struct Split {
    std::vector<std::size_t> train, val, test;
};

/// Seeded permutation then contiguous slicing. Ratios must sum to 1.
Split split(std::size_t n, double train_ratio, double val_ratio, double test_ratio,
            std::uint64_t seed);

}  // namespace san::datasets
