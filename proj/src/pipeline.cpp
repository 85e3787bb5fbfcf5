#include "san/pipeline.hpp"

namespace san::pipeline {

std::vector<CaptionRef> collect_captions(const std::vector<datasets::Sample>& samples,
                                         const std::vector<std::size_t>& indices,
                                         const text::Vocabulary& vocab,
                                         std::size_t max_len) {
    std::vector<CaptionRef> out;
    for (std::size_t pos = 0; pos < indices.size(); ++pos) {
        const auto& sample = samples.at(indices[pos]);
        for (std::size_t c = 0; c < sample.captions.size(); ++c) {
            auto seq = text::tokenize(sample.captions[c], vocab, max_len);
            out.push_back({pos, c, std::move(seq.ids), std::move(seq.tokens)});
        }
    }
    return out;
}

namespace {

struct FrozenSentence {
    Tensor features;  // [L,k]
    Tensor t_g;       // [k]
};

FrozenSentence freeze_sentence(const ParamStore& params, const ModelConfig& cfg,
                               const std::vector<int>& ids) {
    Graph g(&params);
    auto enc = model::encode_sentence(g, ids, cfg);
    return {g.value(enc.features), g.value(enc.t_g)};
}

}  // namespace

evaluation::RankResult evaluate(const ParamStore& params, const ModelConfig& cfg,
                                const std::vector<datasets::Sample>& samples,
                                const std::vector<std::size_t>& indices,
                                const text::Vocabulary& vocab, const model::Variant& variant) {
    if (indices.empty()) throw UsageError("evaluate: empty gallery");
    auto captions = collect_captions(samples, indices, vocab, cfg.max_len);

    std::vector<FrozenSentence> sentences;
    sentences.reserve(captions.size());
    for (const auto& c : captions) sentences.push_back(freeze_sentence(params, cfg, c.ids));

    std::vector<std::vector<double>> sim(indices.size(),
                                         std::vector<double>(captions.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        Graph g(&params);
        Var image = g.input(samples.at(indices[i]).image);
        auto img = model::embed_image(g, image, cfg);
        for (std::size_t j = 0; j < captions.size(); ++j) {
            model::SentenceEncoding enc;
            enc.features = g.input(sentences[j].features);
            enc.t_g = g.input(sentences[j].t_g);
            sim[i][j] = g.value(model::pair_similarity(g, img, enc, variant)).scalar_value();
        }
    }

    std::vector<std::size_t> owner(captions.size());
    for (std::size_t j = 0; j < captions.size(); ++j) owner[j] = captions[j].image_index;
    return evaluation::rank_from_similarity(sim, owner);
}

std::vector<double> retrieve(const ParamStore& params, const ModelConfig& cfg,
                             const std::vector<datasets::Sample>& samples,
                             const std::vector<std::size_t>& indices,
                             const std::vector<int>& query_ids, const model::Variant& variant) {
    FrozenSentence sent = freeze_sentence(params, cfg, query_ids);
    std::vector<double> scores(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        Graph g(&params);
        Var image = g.input(samples.at(indices[i]).image);
        auto img = model::embed_image(g, image, cfg);
        model::SentenceEncoding enc;
        enc.features = g.input(sent.features);
        enc.t_g = g.input(sent.t_g);
        scores[i] = g.value(model::pair_similarity(g, img, enc, variant)).scalar_value();
    }
    return scores;
}

}  // namespace san::pipeline
