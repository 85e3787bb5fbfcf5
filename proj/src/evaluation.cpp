#include "san/evaluation.hpp"

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <thread>

#include "san/error.hpp"
#include "san/objective.hpp"

namespace san::evaluation {

namespace {

// rank (1-based) of target among scores, descending, lower index wins ties
int rank_of(const std::vector<double>& scores, std::size_t target) {
    int rank = 1;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        if (j == target) continue;
        if (scores[j] > scores[target] || (scores[j] == scores[target] && j < target)) ++rank;
    }
    return rank;
}

int thread_budget() {
    if (const char* env = std::getenv("SAN_NUM_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

}  // namespace

RankResult rank_from_similarity(const std::vector<std::vector<double>>& similarity,
                                const std::vector<std::size_t>& text_owner) {
    const std::size_t n_images = similarity.size();
    if (n_images == 0 || similarity[0].empty())
        throw UsageError("rank_all: empty gallery");
    const std::size_t n_texts = similarity[0].size();
    if (text_owner.size() != n_texts)
        throw UsageError("rank_all: text_owner size mismatch");

    RankResult out;
    out.similarity = similarity;

    // image -> sentence: best rank among the image's ground-truth captions
    out.image_to_text_rank.resize(n_images);
    for (std::size_t i = 0; i < n_images; ++i) {
        int best = static_cast<int>(n_texts);
        for (std::size_t j = 0; j < n_texts; ++j)
            if (text_owner[j] == i) best = std::min(best, rank_of(similarity[i], j));
        out.image_to_text_rank[i] = best;
    }

    // sentence -> image: rank of the unique ground-truth image
    out.text_to_image_rank.resize(n_texts);
    std::vector<double> column(n_images);
    for (std::size_t j = 0; j < n_texts; ++j) {
        for (std::size_t i = 0; i < n_images; ++i) column[i] = similarity[i][j];
        out.text_to_image_rank[j] = rank_of(column, text_owner[j]);
    }
    return out;
}

RankResult rank_all(const std::vector<std::vector<double>>& image_embs,
                    const std::vector<std::vector<double>>& text_embs,
                    const std::vector<std::size_t>& text_owner) {
    if (image_embs.empty() || text_embs.empty())
        throw UsageError("rank_all: empty gallery");
    std::vector<std::vector<double>> sim(image_embs.size(),
                                         std::vector<double>(text_embs.size()));
    const int threads = std::min<int>(thread_budget(), static_cast<int>(image_embs.size()));
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t j = 0; j < text_embs.size(); ++j)
                sim[i][j] = objective::cosine(image_embs[i], text_embs[j]);
    };
    if (threads <= 1) {
        worker(0, image_embs.size());
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (image_embs.size() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            std::size_t b = t * chunk, e = std::min(image_embs.size(), b + chunk);
            if (b < e) pool.emplace_back(worker, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return rank_from_similarity(sim, text_owner);
}

double recall_at_k(const std::vector<int>& ranks, int k) {
    if (ranks.empty()) throw UsageError("recall_at_k: empty rank list");
    std::size_t hits = 0;
    for (int r : ranks) {
        if (r < 1) throw UsageError("recall_at_k: ranks are 1-based");
        if (r <= k) ++hits;
    }
    return static_cast<double>(hits) / ranks.size();
}

RetrievalReport report_from_ranks(const std::vector<int>& image_to_text,
                                  const std::vector<int>& text_to_image) {
    RetrievalReport r;
    r.s_r1 = recall_at_k(image_to_text, 1);
    r.s_r5 = recall_at_k(image_to_text, 5);
    r.s_r10 = recall_at_k(image_to_text, 10);
    r.i_r1 = recall_at_k(text_to_image, 1);
    r.i_r5 = recall_at_k(text_to_image, 5);
    r.i_r10 = recall_at_k(text_to_image, 10);
    return r;
}

std::string report_csv_header() { return "variant,sR@1,sR@5,sR@10,iR@1,iR@5,iR@10,mR"; }

std::string report_csv_row(const std::string& label, const RetrievalReport& r) {
    std::ostringstream ss;
    ss << label << std::fixed << std::setprecision(4);
    for (double v : {r.s_r1, r.s_r5, r.s_r10, r.i_r1, r.i_r5, r.i_r10, r.mean_recall()})
        ss << "," << v;
    return ss.str();
}

std::string report_table(const std::vector<std::pair<std::string, RetrievalReport>>& rows) {
    std::ostringstream ss;
    ss << std::left << std::setw(14) << "variant";
    for (const char* col : {"sR@1", "sR@5", "sR@10", "iR@1", "iR@5", "iR@10", "mR"})
        ss << std::right << std::setw(8) << col;
    ss << "\n";
    ss << std::fixed << std::setprecision(3);
    for (const auto& [label, r] : rows) {
        ss << std::left << std::setw(14) << label;
        for (double v : {r.s_r1, r.s_r5, r.s_r10, r.i_r1, r.i_r5, r.i_r10, r.mean_recall()})
            ss << std::right << std::setw(8) << v;
        ss << "\n";
    }
    return ss.str();
}

}  // namespace san::evaluation
