#pragma once

#include <map>
#include <string>
#include <vector>

#include "san/config.hpp"
#include "san/graph.hpp"

namespace san::text {

/// Token-to-id map with reserved ids 0 (PAD) and 1 (UNK).
class Vocabulary {
public:
    Vocabulary();

    /// Builds from training captions, keeping tokens with frequency >= threshold.
    static Vocabulary build(const std::vector<std::string>& captions,
                            std::size_t min_freq = 1);

    int id_of(const std::string& token) const;  // UNK fallback
    std::size_t size() const { return next_id_; }

    /// "token id" lines, sorted by token, for the checkpoint container.
    std::vector<std::string> serialize() const;
    static Vocabulary deserialize(const std::vector<std::string>& lines);

    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

private:
    std::map<std::string, int> ids_;
    int next_id_ = 2;
};

struct TokenSequence {
    std::vector<int> ids;
    std::vector<std::string> tokens;  // retained for attention display
};

/// Lowercase, split on whitespace/punctuation, map with UNK fallback,
/// truncate to max_len. Throws DataError on an empty sentence.
TokenSequence tokenize(const std::string& sentence, const Vocabulary& vocab,
                       std::size_t max_len = 16);

/// Split into normalized tokens without a vocabulary (used when building one).
std::vector<std::string> split_tokens(const std::string& sentence);

/// Registers the embedding matrix and both GRU cells under "text.".
void register_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed);

bool owns_param(const std::string& name);

/// ids -> [L, emb_dim] rows (column lookups of W_e)
Var embed(Graph& g, const std::vector<int>& ids);

/// [L, emb] -> per-word features [L, k]; t_j = (h_f_j + h_b_j) / 2
Var bigru(Graph& g, Var embeddings, const ModelConfig& cfg);

/// t(g) = mean over word positions
Var global_textual(Graph& g, Var features);

}  // namespace san::text
