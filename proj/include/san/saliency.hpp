#pragma once

#include "san/config.hpp"
#include "san/graph.hpp"

namespace san::saliency {

/// Registers every RRSNet-lite parameter under the "saliency." prefix.
void register_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed);

bool owns_param(const std::string& name);

struct BackboneFeatures {
    Var f1, f2, f3;  // H/2, H/4, H/8 spatial scale
};

BackboneFeatures backbone_forward(Graph& g, Var image, const ModelConfig& cfg);

/// Eq-4 style low-level fusion: f2 upsampled 2x, channel-concatenated with f1,
/// then conv + PReLU down to the fusion width. Output at f1's scale.
Var fuse_low(Graph& g, Var f1, Var f2);

/// High branch: conv + PReLU on f3, then nearest upsample 4x to F_low's scale.
Var fuse_high(Graph& g, Var f3);

struct RrbOutput {
    Var s0;  // [H/2, W/2] logits
    Var s1;  // [H, W] logits
};

/// Residual refinement: S0 from F_high, residue = Phi(Cat(S0, F_low)),
/// S1 = residue + S0 upsampled to full image resolution.
RrbOutput rrb(Graph& g, Var f_low, Var f_high);

/// Full image -> S1 pipeline.
RrbOutput forward(Graph& g, Var image, const ModelConfig& cfg);

/// Mean per-pixel BCE between sigmoid(S1) and a binary mask.
Var loss(Graph& g, Var s1, const Tensor& mask);

}  // namespace san::saliency
