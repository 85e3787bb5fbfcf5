#include "san/ablation.hpp"

#include "san/pipeline.hpp"

namespace san::ablation {

std::vector<Entry> run(const std::vector<std::string>& variant_ids,
                       const training::TrainConfig& base,
                       const std::vector<datasets::Sample>& samples,
                       const std::vector<std::size_t>& train_indices,
                       const std::vector<std::size_t>& test_indices,
                       const text::Vocabulary& vocab,
                       const std::vector<std::uint64_t>& seeds) {
    if (variant_ids.empty() || seeds.empty())
        throw UsageError("ablation: need at least one variant and one seed");

    std::vector<Entry> entries;
    for (const auto& id : variant_ids) entries.push_back({id, {}});

    for (std::uint64_t seed : seeds) {
        training::TrainConfig cfg = base;
        cfg.seed = seed;

        ParamStore stage1_params;
        model::register_all(stage1_params, cfg.model, seed);
        training::train_stage1(stage1_params, cfg, samples, train_indices);

        for (auto& entry : entries) {
            cfg.variant = model::parse_variant(entry.variant);
            ParamStore params = stage1_params;  // identical stage-1 start per variant
            training::train_stage2(params, cfg, samples, train_indices, vocab);
            auto ranks = pipeline::evaluate(params, cfg.model, samples, test_indices, vocab,
                                            cfg.variant);
            auto report = evaluation::report_from_ranks(ranks.image_to_text_rank,
                                                        ranks.text_to_image_rank);
            entry.mean_report.s_r1 += report.s_r1;
            entry.mean_report.s_r5 += report.s_r5;
            entry.mean_report.s_r10 += report.s_r10;
            entry.mean_report.i_r1 += report.i_r1;
            entry.mean_report.i_r5 += report.i_r5;
            entry.mean_report.i_r10 += report.i_r10;
        }
    }
    const double inv = 1.0 / static_cast<double>(seeds.size());
    for (auto& entry : entries) {
        entry.mean_report.s_r1 *= inv;
        entry.mean_report.s_r5 *= inv;
        entry.mean_report.s_r10 *= inv;
        entry.mean_report.i_r1 *= inv;
        entry.mean_report.i_r5 *= inv;
        entry.mean_report.i_r10 *= inv;
    }
    return entries;
}

}  // namespace san::ablation
