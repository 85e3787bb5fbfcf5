#include "san/image_io.hpp"

#include <cmath>
#include <fstream>

namespace san::image_io {

namespace {

unsigned char to_byte(double v) {
    double scaled = std::round(v * 255.0);
    if (scaled < 0.0) scaled = 0.0;
    if (scaled > 255.0) scaled = 255.0;
    return static_cast<unsigned char>(scaled);
}

void skip_ws(std::istream& in) {
    while (std::isspace(in.peek())) in.get();
    if (in.peek() == '#') {
        std::string line;
        std::getline(in, line);
        skip_ws(in);
    }
}

std::size_t read_int(std::istream& in, const std::string& path) {
    skip_ws(in);
    std::size_t v = 0;
    if (!(in >> v)) throw DataError(path + ": malformed header");
    return v;
}

}  // namespace

void write_ppm(const std::string& path, const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 3)
        throw ShapeError("write_ppm: expected [3,H,W], got " + image.shape_str());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("write_ppm: cannot open " + path);
    std::size_t h = image.dim(1), w = image.dim(2);
    out << "P6\n" << w << " " << h << "\n255\n";
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j)
            for (std::size_t c = 0; c < 3; ++c) out.put(to_byte(image.at(c, i, j)));
}

Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("read_ppm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw DataError(path + ": not a binary PPM");
    std::size_t w = read_int(in, path), h = read_int(in, path), maxval = read_int(in, path);
    if (maxval != 255) throw DataError(path + ": unsupported max value");
    in.get();  // single whitespace after header
    Tensor image({3, h, w});
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j)
            for (std::size_t c = 0; c < 3; ++c) {
                int b = in.get();
                if (b < 0) throw DataError(path + ": truncated pixel data");
                image.at(c, i, j) = b / 255.0;
            }
    return image;
}

void write_pgm(const std::string& path, const Tensor& gray) {
    if (gray.rank() != 2) throw ShapeError("write_pgm: expected [H,W], got " + gray.shape_str());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("write_pgm: cannot open " + path);
    std::size_t h = gray.dim(0), w = gray.dim(1);
    out << "P5\n" << w << " " << h << "\n255\n";
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) out.put(to_byte(gray.at(i, j)));
}

Tensor read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("read_pgm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw DataError(path + ": not a binary PGM");
    std::size_t w = read_int(in, path), h = read_int(in, path), maxval = read_int(in, path);
    if (maxval != 255) throw DataError(path + ": unsupported max value");
    in.get();
    Tensor gray({h, w});
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            int b = in.get();
            if (b < 0) throw DataError(path + ": truncated pixel data");
            gray.at(i, j) = b / 255.0;
        }
    return gray;
}

}  // namespace san::image_io
