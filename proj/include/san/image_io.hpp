#pragma once

#include <string>

#include "san/tensor.hpp"

namespace san::image_io {

/// [3,H,W] tensor with values in [0,1] <-> binary PPM (P6), 8-bit.
void write_ppm(const std::string& path, const Tensor& image);
Tensor read_ppm(const std::string& path);

/// [H,W] tensor <-> binary PGM (P5), 8-bit. Values scaled by 255 on write.
void write_pgm(const std::string& path, const Tensor& gray);
Tensor read_pgm(const std::string& path);

}  // namespace san::image_io
