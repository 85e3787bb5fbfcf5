#include "san/saliency.hpp"

#include "san/init.hpp"

namespace san::saliency {

namespace {

void add_conv(ParamStore& store, const std::string& name, std::size_t out_c,
              std::size_t in_c, std::uint64_t seed, bool with_slope,
              std::size_t k = 3) {
    store.add(name + ".w", xavier_uniform({out_c, in_c, k, k}, in_c * k * k,
                                          out_c * k * k, seed, name + ".w"));
    store.add(name + ".b", Tensor({out_c}));
    if (with_slope) store.add(name + ".slope", Tensor::full({out_c}, 0.25));
}

Var conv_prelu(Graph& g, Var x, const std::string& name, int stride) {
    Var y = g.conv2d(x, g.param(name + ".w"), g.param(name + ".b"), stride, 1);
    return g.prelu(y, g.param(name + ".slope"));
}

}  // namespace

void register_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed) {
    const auto& bc = cfg.backbone_channels;
    // stride-2 stages use 4x4 kernels so pad-1 output is exactly H/2
    add_conv(store, "saliency.backbone.conv1", bc[0], 3, seed, true, 4);
    add_conv(store, "saliency.backbone.conv2", bc[1], bc[0], seed, true, 4);
    add_conv(store, "saliency.backbone.conv3", bc[2], bc[1], seed, true, 4);
    add_conv(store, "saliency.fuse_low", cfg.fusion_width, bc[0] + bc[1], seed, true);
    add_conv(store, "saliency.fuse_high", cfg.fusion_width, bc[2], seed, true);
    add_conv(store, "saliency.s0", 1, cfg.fusion_width, seed, false);
    add_conv(store, "saliency.rrb.conv1", cfg.fusion_width, cfg.fusion_width + 1, seed, true);
    add_conv(store, "saliency.rrb.conv2", 1, cfg.fusion_width, seed, false);
}

bool owns_param(const std::string& name) { return name.rfind("saliency.", 0) == 0; }

BackboneFeatures backbone_forward(Graph& g, Var image, const ModelConfig& cfg) {
    const Tensor& x = g.value(image);
    if (x.rank() != 3 || x.dim(0) != 3)
        throw ShapeError("backbone: expected [3,H,W], got " + x.shape_str());
    if (x.dim(1) % 8 != 0 || x.dim(2) % 8 != 0)
        throw ConfigError("backbone: spatial dims must be divisible by 8, got " + x.shape_str());
    (void)cfg;
    BackboneFeatures out;
    out.f1 = conv_prelu(g, image, "saliency.backbone.conv1", 2);
    out.f2 = conv_prelu(g, out.f1, "saliency.backbone.conv2", 2);
    out.f3 = conv_prelu(g, out.f2, "saliency.backbone.conv3", 2);
    return out;
}

Var fuse_low(Graph& g, Var f1, Var f2) {
    const Tensor& a = g.value(f1);
    const Tensor& b = g.value(f2);
    if (a.dim(1) != 2 * b.dim(1) || a.dim(2) != 2 * b.dim(2))
        throw ShapeError("fuse_low: f2 must be at half of f1's scale, got " + a.shape_str() +
                         " and " + b.shape_str());
    Var up = g.upsample2d(f2, 2);
    Var cat = g.concat_channels(f1, up);
    return conv_prelu(g, cat, "saliency.fuse_low", 1);
}

Var fuse_high(Graph& g, Var f3) {
    Var fused = conv_prelu(g, f3, "saliency.fuse_high", 1);
    return g.upsample2d(fused, 4);  // align with F_low (H/2 scale)
}

RrbOutput rrb(Graph& g, Var f_low, Var f_high) {
    const Tensor& lo = g.value(f_low);
    const Tensor& hi = g.value(f_high);
    if (lo.dim(1) != hi.dim(1) || lo.dim(2) != hi.dim(2))
        throw ShapeError("rrb: F_low and F_high not spatially aligned");
    Var s0 = g.conv2d(f_high, g.param("saliency.s0.w"), g.param("saliency.s0.b"), 1, 1);
    Var cat = g.concat_channels(s0, f_low);
    Var h = conv_prelu(g, cat, "saliency.rrb.conv1", 1);
    Var residue =
        g.conv2d(h, g.param("saliency.rrb.conv2.w"), g.param("saliency.rrb.conv2.b"), 1, 1);
    Var s1_half = g.add(residue, s0);
    Var s1 = g.upsample2d(s1_half, 2);
    RrbOutput out;
    std::size_t h2 = lo.dim(1), w2 = lo.dim(2);
    out.s0 = g.reshape(s0, {h2, w2});
    out.s1 = g.reshape(s1, {2 * h2, 2 * w2});
    return out;
}

RrbOutput forward(Graph& g, Var image, const ModelConfig& cfg) {
    BackboneFeatures f = backbone_forward(g, image, cfg);
    Var lo = fuse_low(g, f.f1, f.f2);
    Var hi = fuse_high(g, f.f3);
    return rrb(g, lo, hi);
}

Var loss(Graph& g, Var s1, const Tensor& mask) { return g.bce_logits_mean(s1, mask); }

}  // namespace san::saliency
