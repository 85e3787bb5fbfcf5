#include "san/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace san::checkpoint {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'N', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw CheckpointError(path + ": truncated checkpoint");
    return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& in, const std::string& path) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
        throw CheckpointError(path + ": truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save(const std::string& path, const ParamStore& params, const text::Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot open " + path + " for writing");
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    for (const auto& [name, tensor] : params.all()) {
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(out, static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t d : tensor.shape()) write_u32(out, static_cast<std::uint32_t>(d));
        for (std::size_t i = 0; i < tensor.numel(); ++i) write_f64(out, tensor[i]);
    }
    write_u32(out, 0);  // record terminator (parameter names are never empty)
    for (const auto& line : vocab.serialize()) out << line << "\n";
    if (!out) throw CheckpointError("write failed: " + path);
}

Loaded load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open " + path);
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw CheckpointError(path + ": bad magic");
    std::uint32_t version = read_u32(in, path);
    if (version != kVersion)
        throw CheckpointError(path + ": unsupported format version " + std::to_string(version));
    Loaded out;
    for (;;) {
        std::uint32_t name_len = read_u32(in, path);
        if (name_len == 0) break;
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw CheckpointError(path + ": truncated name");
        std::uint32_t rank = read_u32(in, path);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = read_u32(in, path);
        Tensor t(shape);
        for (std::size_t i = 0; i < t.numel(); ++i) t[i] = read_f64(in, path);
        out.params.add(name, std::move(t));
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    out.vocab = text::Vocabulary::deserialize(lines);
    return out;
}

}  // namespace san::checkpoint
