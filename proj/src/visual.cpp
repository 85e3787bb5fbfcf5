#include "san/visual.hpp"

#include "san/init.hpp"

namespace san::visual {

namespace {

Var conv_prelu(Graph& g, Var x, const std::string& name, int stride) {
    Var y = g.conv2d(x, g.param(name + ".w"), g.param(name + ".b"), stride, 1);
    return g.prelu(y, g.param(name + ".slope"));
}

}  // namespace

void register_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed) {
    const auto& ec = cfg.encoder_channels;
    std::size_t in_c = 3;
    for (int i = 0; i < 3; ++i) {
        std::string name = "visual.enc.conv" + std::to_string(i + 1);
        // 4x4 stride-2 pad-1: output is exactly half the input resolution
        store.add(name + ".w", xavier_uniform({ec[i], in_c, 4, 4}, in_c * 16, ec[i] * 16,
                                              seed, name + ".w"));
        store.add(name + ".b", Tensor({ec[i]}));
        store.add(name + ".slope", Tensor::full({ec[i]}, 0.25));
        in_c = ec[i];
    }
    store.add("visual.pg.w", xavier_uniform({cfg.k, cfg.d()}, cfg.d(), cfg.k, seed, "visual.pg.w"));
    store.add("visual.pg.b", Tensor({cfg.k}));
    store.add("visual.ps.w", xavier_uniform({cfg.k, cfg.d()}, cfg.d(), cfg.k, seed, "visual.ps.w"));
    store.add("visual.ps.b", Tensor({cfg.k}));
}

bool owns_param(const std::string& name) { return name.rfind("visual.", 0) == 0; }

Var encode_image(Graph& g, Var image, const ModelConfig& cfg) {
    const Tensor& x = g.value(image);
    if (x.rank() != 3 || x.dim(0) != 3)
        throw ShapeError("encode_image: expected [3,H,W], got " + x.shape_str());
    if (x.dim(1) % 8 != 0 || x.dim(2) % 8 != 0)
        throw ConfigError("encode_image: dims must be divisible by the total stride (8), got " +
                          x.shape_str());
    Var h1 = conv_prelu(g, image, "visual.enc.conv1", 2);
    Var h2 = conv_prelu(g, h1, "visual.enc.conv2", 2);
    Var h3 = conv_prelu(g, h2, "visual.enc.conv3", 2);
    (void)cfg;
    return g.chw_to_rows(h3);  // [M, d]
}

Var global_visual(Graph& g, Var v) {
    Var mean = g.mean_axis(v, 0);
    return g.add(g.matvec(g.param("visual.pg.w"), mean), g.param("visual.pg.b"));
}

Var downsample_saliency(Graph& g, Var s1, std::size_t x, std::size_t y) {
    const Tensor& s = g.value(s1);
    if (s.rank() != 2) throw ShapeError("downsample_saliency: expected [H,W]");
    if (x == 0 || y == 0 || s.dim(0) % x != 0 || s.dim(1) % y != 0)
        throw ConfigError("downsample_saliency: target grid " + std::to_string(x) + "x" +
                          std::to_string(y) + " does not divide " + s.shape_str());
    return g.avg_pool2d(s1, static_cast<int>(s.dim(0) / x), static_cast<int>(s.dim(1) / y));
}

Var saliency_weights(Graph& g, Var s2) {
    const Tensor& s = g.value(s2);
    Var flat = g.reshape(s2, {s.numel()});
    return g.normalize_l1(g.sigmoid(flat));
}

Var sva(Graph& g, Var v, Var weights) {
    const Tensor& vv = g.value(v);
    const Tensor& w = g.value(weights);
    if (w.numel() != vv.dim(0))
        throw ShapeError("sva: weight count " + w.shape_str() + " vs regions " + vv.shape_str());
    Var wsum = g.reshape(g.matmul(g.reshape(weights, {1, w.numel()}), v), {vv.dim(1)});
    return g.add(g.matvec(g.param("visual.ps.w"), wsum), g.param("visual.ps.b"));
}

Var fuse_visual(Graph& g, Var v_g, Var v_s) {
    return g.scale(g.add(v_g, v_s), 0.5);
}

}  // namespace san::visual
