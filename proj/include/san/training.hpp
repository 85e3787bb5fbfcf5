#pragma once

#include <map>

#include "san/datasets.hpp"
#include "san/model.hpp"
#include "san/objective.hpp"

namespace san::training {

struct Stage1Config {
    double lr = 0.01;
    std::size_t batch = 16;
    std::size_t iterations = 500;
};

struct Stage2Config {
    double lr = 0.001;
    std::size_t batch = 8;
    std::size_t epochs = 30;
};

struct TrainConfig {
    std::uint64_t seed = 7;
    Stage1Config stage1;
    Stage2Config stage2;
    objective::MarginConfig margin;
    ModelConfig model;
    model::Variant variant;  // which embeddings feed the stage-2 loss
};

void sgd_step(ParamStore& params, const GradientMap& grads, double lr);

struct AdamState {
    std::map<std::string, Tensor> m, v;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

void adam_step(ParamStore& params, const GradientMap& grads, AdamState& state, double lr);

/// Supervised stage 1: SGD on the saliency BCE loss; only "saliency." parameters
/// move. Returns the per-iteration loss curve.
std::vector<double> train_stage1(ParamStore& params, const TrainConfig& cfg,
                                 const std::vector<datasets::Sample>& samples,
                                 const std::vector<std::size_t>& indices);

struct EpochLog {
    std::size_t epoch;
    double loss;  // summed batch losses over the epoch
};

/// Stage 2: Adam on the bidirectional triplet loss over in-batch negatives;
/// every parameter (saliency included) is fine-tuned. One caption per image
/// per batch occurrence, chosen by the epoch's seeded draw. The optional
/// callback sees each finished epoch and may return true to stop early.
std::vector<EpochLog> train_stage2(
    ParamStore& params, const TrainConfig& cfg,
    const std::vector<datasets::Sample>& samples,
    const std::vector<std::size_t>& indices, const text::Vocabulary& vocab,
    const std::function<bool(std::size_t, double)>& on_epoch = {});

/// Builds the stage-2 batch loss on a caller-supplied graph (shared by
/// training and the gradient-check suite).
Var batch_ranking_loss(Graph& g, const TrainConfig& cfg,
                       const std::vector<const datasets::Sample*>& batch,
                       const std::vector<std::vector<int>>& caption_ids);

}  // namespace san::training
