#pragma once

#include <string>
#include <vector>

#include "san/tensor.hpp"

namespace san::evaluation {

struct RetrievalReport {
    // sentence retrieval (image query) then image retrieval (sentence query)
    double s_r1 = 0, s_r5 = 0, s_r10 = 0;
    double i_r1 = 0, i_r5 = 0, i_r10 = 0;
    double mean_recall() const { return (s_r1 + s_r5 + s_r10 + i_r1 + i_r5 + i_r10) / 6.0; }
};

struct RankResult {
    std::vector<std::vector<double>> similarity;  // [n_images][n_texts]
    std::vector<int> image_to_text_rank;  // best rank of any ground-truth caption
    std::vector<int> text_to_image_rank;  // rank of the unique ground-truth image
};

/// Full cosine matrix plus per-query ranks. text_owner[j] gives the image
/// index each caption belongs to. Ties break toward the lower gallery index.
/// Honors SAN_NUM_THREADS for the similarity sweep (results are identical
/// regardless of thread count).
RankResult rank_all(const std::vector<std::vector<double>>& image_embs,
                    const std::vector<std::vector<double>>& text_embs,
                    const std::vector<std::size_t>& text_owner);

/// Variant of rank_all for pair-dependent textual embeddings: the similarity
/// matrix is supplied directly instead of computed from embeddings.
RankResult rank_from_similarity(const std::vector<std::vector<double>>& similarity,
                                const std::vector<std::size_t>& text_owner);

/// fraction of queries with rank <= K
double recall_at_k(const std::vector<int>& ranks, int k);

RetrievalReport report_from_ranks(const std::vector<int>& image_to_text,
                                  const std::vector<int>& text_to_image);

std::string report_csv_header();
std::string report_csv_row(const std::string& label, const RetrievalReport& r);
std::string report_table(const std::vector<std::pair<std::string, RetrievalReport>>& rows);

}  // namespace san::evaluation
