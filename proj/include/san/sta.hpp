#pragma once

#include "san/config.hpp"
#include "san/graph.hpp"

namespace san::sta {

/// Gated fusion unit (U_v, U_t) and the three attention projections
/// (W_t0, W_t1, W_t2), registered under the "sta." prefix.
void register_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed);

bool owns_param(const std::string& name);

/// m_f = sigmoid(U_v(v) + U_t(t_g)); every element in (0,1).
Var gated_fusion(Graph& g, Var v, Var t_g);

struct AttentionOutput {
    Var weights;  // [L], softmax over word positions
    Var t_s;      // [k], attention-weighted sum of word features
};

/// h_j = tanh(W_t0 m_f) ⊙ tanh(W_t1 t_j); scores via W_t2; softmax over j.
AttentionOutput textual_attention(Graph& g, Var m_f, Var features);

/// elementwise mean of t(g) and t(s)
Var fuse_textual(Graph& g, Var t_g, Var t_s);

}  // namespace san::sta
