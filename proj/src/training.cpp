#include "san/training.hpp"

#include <cmath>

#include "san/init.hpp"
#include "san/saliency.hpp"

namespace san::training {

void sgd_step(ParamStore& params, const GradientMap& grads, double lr) {
    for (const auto& [name, grad] : grads) {
        Tensor& p = params.at(name);
        if (!p.same_shape(grad))
            throw ShapeError("sgd_step: gradient shape " + grad.shape_str() +
                             " does not match parameter " + name + " " + p.shape_str());
        for (std::size_t i = 0; i < p.numel(); ++i) p[i] -= lr * grad[i];
    }
}

void adam_step(ParamStore& params, const GradientMap& grads, AdamState& state, double lr) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (const auto& [name, grad] : grads) {
        Tensor& p = params.at(name);
        if (!p.same_shape(grad))
            throw ShapeError("adam_step: gradient shape mismatch for " + name);
        Tensor& m = state.m.try_emplace(name, Tensor(p.shape())).first->second;
        Tensor& v = state.v.try_emplace(name, Tensor(p.shape())).first->second;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

namespace {

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.next_below(i)]);
    return order;
}

}  // namespace

std::vector<double> train_stage1(ParamStore& params, const TrainConfig& cfg,
                                 const std::vector<datasets::Sample>& samples,
                                 const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw UsageError("train_stage1: empty dataset");
    for (std::size_t idx : indices)
        if (samples.at(idx).mask.numel() <= 1)
            throw DataError("train_stage1: sample " + samples.at(idx).id + " has no mask");

    std::vector<double> losses;
    std::vector<std::size_t> order;
    std::size_t cursor = 0, epoch = 0;
    for (std::size_t it = 0; it < cfg.stage1.iterations; ++it) {
        std::size_t batch = std::min<std::size_t>(cfg.stage1.batch, indices.size());
        if (cursor + batch > order.size()) {
            order = seeded_permutation(indices.size(),
                                       derive_seed(cfg.seed, "stage1.epoch." +
                                                                 std::to_string(epoch++)));
            cursor = 0;
        }
        Graph g(&params);
        Var total = g.constant(0.0);
        for (std::size_t b = 0; b < batch; ++b) {
            const auto& sample = samples.at(indices[order[cursor + b]]);
            auto sal = saliency::forward(g, g.input(sample.image), cfg.model);
            total = g.add(total, saliency::loss(g, sal.s1, sample.mask));
        }
        cursor += batch;
        Var loss = g.scale(total, 1.0 / static_cast<double>(batch));
        losses.push_back(g.value(loss).scalar_value());
        GradientMap grads = g.backward(loss);
        // stage 1 trains RRSNet only; everything else stays frozen
        GradientMap filtered;
        for (auto& [name, grad] : grads)
            if (saliency::owns_param(name)) filtered.emplace(name, std::move(grad));
        sgd_step(params, filtered, cfg.stage1.lr);
    }
    return losses;
}

Var batch_ranking_loss(Graph& g, const TrainConfig& cfg,
                       const std::vector<const datasets::Sample*>& batch,
                       const std::vector<std::vector<int>>& caption_ids) {
    const std::size_t b = batch.size();
    if (b < 2) throw UsageError("batch_ranking_loss: batch must hold at least 2 pairs");
    std::vector<model::ImageEmbedding> images(b);
    std::vector<model::SentenceEncoding> sentences(b);
    for (std::size_t i = 0; i < b; ++i) {
        images[i] = model::embed_image(g, g.input(batch[i]->image), cfg.model);
        sentences[i] = model::encode_sentence(g, caption_ids[i], cfg.model);
    }
    std::vector<std::vector<Var>> sim(b, std::vector<Var>(b));
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j)
            sim[i][j] = model::pair_similarity(g, images[i], sentences[j], cfg.variant);
    return objective::triplet_loss(g, sim, cfg.margin);
}

std::vector<EpochLog> train_stage2(ParamStore& params, const TrainConfig& cfg,
                                   const std::vector<datasets::Sample>& samples,
                                   const std::vector<std::size_t>& indices,
                                   const text::Vocabulary& vocab,
                                   const std::function<bool(std::size_t, double)>& on_epoch) {
    if (indices.size() < 2) throw UsageError("train_stage2: need at least 2 samples");
    if (cfg.stage2.batch < 2) throw UsageError("train_stage2: batch must be >= 2");

    AdamState adam;
    std::vector<EpochLog> log;
    for (std::size_t epoch = 0; epoch < cfg.stage2.epochs; ++epoch) {
        std::uint64_t eseed = derive_seed(cfg.seed, "stage2.epoch." + std::to_string(epoch));
        auto order = seeded_permutation(indices.size(), eseed);
        Rng caption_rng(derive_seed(eseed, "captions"));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start + 2 <= order.size(); start += cfg.stage2.batch) {
            std::size_t end = std::min(order.size(), start + cfg.stage2.batch);
            if (end - start < 2) break;  // drop a trailing singleton
            std::vector<const datasets::Sample*> batch;
            std::vector<std::vector<int>> ids;
            for (std::size_t p = start; p < end; ++p) {
                const auto& sample = samples.at(indices[order[p]]);
                std::size_t c = caption_rng.next_below(sample.captions.size());
                batch.push_back(&sample);
                ids.push_back(text::tokenize(sample.captions[c], vocab, cfg.model.max_len).ids);
            }
            Graph g(&params);
            Var loss = batch_ranking_loss(g, cfg, batch, ids);
            epoch_loss += g.value(loss).scalar_value();
            adam_step(params, g.backward(loss), adam, cfg.stage2.lr);
        }
        log.push_back({epoch, epoch_loss});
        if (on_epoch && on_epoch(epoch, epoch_loss)) break;
    }
    return log;
}

}  // namespace san::training
