#pragma once

#include "san/config.hpp"
#include "san/graph.hpp"

namespace san::visual {

/// Registers the region-feature encoder and the two joint-space projections
/// P(g) / P(s) under the "visual." prefix.
void register_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed);

bool owns_param(const std::string& name);

/// image [3,H,W] -> region features V [M,d], rows in row-major grid order.
Var encode_image(Graph& g, Var image, const ModelConfig& cfg);

/// v(g) = P(g) * mean_i(v_i) + bias
Var global_visual(Graph& g, Var v);

/// S1 [H,W] -> S2 [X,Y] by block-mean pooling with strides (H/X, W/Y).
Var downsample_saliency(Graph& g, Var s1, std::size_t x, std::size_t y);

/// sigmoid then L1 normalization, flattened row-major to length M.
Var saliency_weights(Graph& g, Var s2);

/// v(s) = P(s) * sum_i a_i v_i + bias
Var sva(Graph& g, Var v, Var weights);

/// elementwise mean of the two joint vectors
Var fuse_visual(Graph& g, Var v_g, Var v_s);

}  // namespace san::visual
