#pragma once

#include "san/evaluation.hpp"
#include "san/training.hpp"

namespace san::ablation {

struct Entry {
    std::string variant;
    evaluation::RetrievalReport mean_report;  // averaged over the seed list
};

/// Trains and evaluates each variant with the same seeds and splits. Stage 1
/// does not depend on the variant, so its result is trained once per seed and
/// shared. Reports are averaged over the seeds.
std::vector<Entry> run(const std::vector<std::string>& variant_ids,
                       const training::TrainConfig& base,
                       const std::vector<datasets::Sample>& samples,
                       const std::vector<std::size_t>& train_indices,
                       const std::vector<std::size_t>& test_indices,
                       const text::Vocabulary& vocab,
                       const std::vector<std::uint64_t>& seeds);

}  // namespace san::ablation
