#pragma once

#include <string>
#include <vector>

#include "san/graph.hpp"
#include "san/text.hpp"

namespace san::checkpoint {

/// Binary container: magic "SANCKPT1", format version (u32 LE), repeated
/// records (name length u32, name bytes, rank u32, dims u32 each, raw LE f64
/// payload), a zero name-length terminator, then the vocabulary as text lines.
/// Byte-exact round trips are part of the contract.
void save(const std::string& path, const ParamStore& params, const text::Vocabulary& vocab);

struct Loaded {
    ParamStore params;
    text::Vocabulary vocab;
};

Loaded load(const std::string& path);

}  // namespace san::checkpoint
