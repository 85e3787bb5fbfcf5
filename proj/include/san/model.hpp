#pragma once

#include <string>

#include "san/config.hpp"
#include "san/graph.hpp"
#include "san/objective.hpp"
#include "san/saliency.hpp"
#include "san/sta.hpp"
#include "san/text.hpp"
#include "san/visual.hpp"

namespace san::model {

enum class VisualVariant { GV, SV, FV };
enum class TextualVariant { GT, ST, FT };

struct Variant {
    VisualVariant visual = VisualVariant::FV;
    TextualVariant textual = TextualVariant::FT;
};

/// Parses ids like "FV+FT(G-S)", "GV+GT", "SV+ST". Throws UsageError.
Variant parse_variant(const std::string& id);
std::string variant_name(const Variant& v);

/// Registers every parameter of the full pipeline.
void register_all(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed);

struct ImageEmbedding {
    Var v_g;       // Eq. 1 global feature
    Var v_s;       // Eq. 7 SVA vector
    Var v;         // fused (v_g + v_s)/2
    Var weights;   // a_v, [M]
    Var s1;        // saliency logits [H,W]
};

/// Full visual branch: encoder, RRSNet, SVA.
ImageEmbedding embed_image(Graph& g, Var image, const ModelConfig& cfg);

struct SentenceEncoding {
    Var features;  // [L,k]
    Var t_g;       // [k]
};

SentenceEncoding encode_sentence(Graph& g, const std::vector<int>& ids,
                                 const ModelConfig& cfg);

/// The embedding the similarity consumes on the visual side.
Var visual_vector(const ImageEmbedding& img, VisualVariant variant);

struct TextualResult {
    Var vec;          // embedding feeding the cosine
    Var weights;      // a_t when STA ran, else invalid
};

/// Textual embedding for one (image, sentence) pairing. ST/FT run the gated
/// fusion against the image's integrated feature v, so the result is
/// pair-dependent; GT ignores the image.
TextualResult textual_vector(Graph& g, const ImageEmbedding& img,
                             const SentenceEncoding& sent, TextualVariant variant);

/// s(I,T) under a variant.
Var pair_similarity(Graph& g, const ImageEmbedding& img, const SentenceEncoding& sent,
                    const Variant& variant);

}  // namespace san::model
