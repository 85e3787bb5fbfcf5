#include "san/sta.hpp"

#include "san/init.hpp"

namespace san::sta {

void register_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed) {
    auto affine = [&](const std::string& name, std::size_t out, std::size_t in) {
        store.add(name + ".w", xavier_uniform({out, in}, in, out, seed, name + ".w"));
        store.add(name + ".b", Tensor({out}));
    };
    affine("sta.uv", cfg.k, cfg.k);
    affine("sta.ut", cfg.k, cfg.k);
    affine("sta.w0", cfg.k, cfg.k);
    affine("sta.w1", cfg.k, cfg.k);
    affine("sta.w2", 1, cfg.k);
}

bool owns_param(const std::string& name) { return name.rfind("sta.", 0) == 0; }

Var gated_fusion(Graph& g, Var v, Var t_g) {
    const Tensor& a = g.value(v);
    const Tensor& b = g.value(t_g);
    if (!a.same_shape(b))
        throw ShapeError("gated_fusion: " + a.shape_str() + " vs " + b.shape_str());
    Var vh = g.add(g.matvec(g.param("sta.uv.w"), v), g.param("sta.uv.b"));
    Var th = g.add(g.matvec(g.param("sta.ut.w"), t_g), g.param("sta.ut.b"));
    return g.sigmoid(g.add(vh, th));
}

AttentionOutput textual_attention(Graph& g, Var m_f, Var features) {
    const Tensor& feats = g.value(features);
    if (feats.rank() != 2) throw ShapeError("textual_attention: features must be [L,k]");
    // tanh(W_t0 m_f) is word-independent; computed once and broadcast
    Var ctx = g.tanh_(g.add(g.matvec(g.param("sta.w0.w"), m_f), g.param("sta.w0.b")));
    Var proj = g.tanh_(g.linear_rows(features, g.param("sta.w1.w"), g.param("sta.w1.b")));
    Var hidden = g.mul_rows(proj, ctx);                                       // [L,k]
    Var scores = g.linear_rows(hidden, g.param("sta.w2.w"), g.param("sta.w2.b"));  // [L,1]
    Var weights = g.softmax(g.reshape(scores, {feats.dim(0)}));
    AttentionOutput out;
    out.weights = weights;
    out.t_s = g.reshape(g.matmul(g.reshape(weights, {1, feats.dim(0)}), features),
                        {feats.dim(1)});
    return out;
}

Var fuse_textual(Graph& g, Var t_g, Var t_s) {
    const Tensor& a = g.value(t_g);
    const Tensor& b = g.value(t_s);
    if (!a.same_shape(b))
        throw ShapeError("fuse_textual: " + a.shape_str() + " vs " + b.shape_str());
    return g.scale(g.add(t_g, t_s), 0.5);
}

}  // namespace san::sta
