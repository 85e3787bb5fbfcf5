#pragma once

#include <vector>

#include "san/datasets.hpp"
#include "san/evaluation.hpp"
#include "san/model.hpp"
#include "san/text.hpp"

namespace san::pipeline {

struct CaptionRef {
    std::size_t image_index;    // position within the evaluated index list
    std::size_t caption_index;  // which caption of that sample
    std::vector<int> ids;
    std::vector<std::string> tokens;
};

std::vector<CaptionRef> collect_captions(const std::vector<datasets::Sample>& samples,
                                         const std::vector<std::size_t>& indices,
                                         const text::Vocabulary& vocab,
                                         std::size_t max_len);

/// Embeds the listed samples and all their captions and ranks both directions.
/// For ST / FT(G-S) variants the textual embedding is pair-dependent, so the
/// similarity matrix is computed pair by pair; sentence features are encoded
/// once and re-seeded into each image's graph as constants.
evaluation::RankResult evaluate(const ParamStore& params, const ModelConfig& cfg,
                                const std::vector<datasets::Sample>& samples,
                                const std::vector<std::size_t>& indices,
                                const text::Vocabulary& vocab, const model::Variant& variant);

/// Similarities of one tokenized query sentence against the listed images,
/// in index order.
std::vector<double> retrieve(const ParamStore& params, const ModelConfig& cfg,
                             const std::vector<datasets::Sample>& samples,
                             const std::vector<std::size_t>& indices,
                             const std::vector<int>& query_ids, const model::Variant& variant);

}  // namespace san::pipeline
