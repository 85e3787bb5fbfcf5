#include "san/gradsuite.hpp"

#include <algorithm>

#include "san/init.hpp"
#include "san/model.hpp"
#include "san/training.hpp"

namespace san::gradsuite {

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    // deliberately tiny: finite differences at h=1e-5 in f64 lose accuracy on
    // near-cancelling gradient coordinates, which large tensors always contain
    cfg.image_size = 16;
    cfg.backbone_channels = {2, 3, 4};
    cfg.fusion_width = 3;
    cfg.encoder_channels = {2, 3, 4};
    cfg.k = 6;
    cfg.emb_dim = 4;
    cfg.vocab_size = 8;
    return cfg;
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

Tensor random_mask(std::vector<std::size_t> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.next_below(2) ? 1.0 : 0.0;
    return t;
}

// a small composition exercising the elementwise / reduction op family
ModuleResult check_tensor(std::uint64_t seed, double step) {
    Rng rng(derive_seed(seed, "gradsuite.tensor"));
    ParamStore params;
    params.add("w", random_tensor({3, 4}, rng));
    params.add("x", random_tensor({4}, rng));
    params.add("kernel", random_tensor({2, 1, 2, 2}, rng));
    params.add("kbias", random_tensor({2}, rng));
    params.add("slope", random_tensor({2}, rng, 0.1, 0.5));
    Tensor patch = random_tensor({1, 4, 4}, rng);
    auto build = [patch](Graph& g) {
        Var y = g.softmax(g.tanh_(g.matvec(g.param("w"), g.param("x"))));
        Var conv = g.prelu(g.conv2d(g.input(patch), g.param("kernel"), g.param("kbias"), 1, 0),
                           g.param("slope"));
        Var pooled = g.avg_pool2d(g.reshape(conv, {6, 3}), 3, 3);
        return g.add(g.sum_all(g.sigmoid(y)), g.sum_all(g.mul(pooled, pooled)));
    };
    auto r = gradcheck(params, build, step);
    return {"tensor", r.max_rel_err, r.worst_param};
}

ModuleResult check_saliency(std::uint64_t seed, double step) {
    Rng rng(derive_seed(seed, "gradsuite.saliency"));
    ModelConfig cfg = tiny_config();
    ParamStore params;
    saliency::register_params(params, cfg, seed);
    Tensor image = random_tensor({3, cfg.image_size, cfg.image_size}, rng, 0.0, 1.0);
    Tensor mask = random_mask({cfg.image_size, cfg.image_size}, rng);
    auto build = [image, mask, cfg](Graph& g) {
        auto sal = saliency::forward(g, g.input(image), cfg);
        return saliency::loss(g, sal.s1, mask);
    };
    auto r = gradcheck(params, build, step);
    return {"saliency", r.max_rel_err, r.worst_param};
}

// sum of a nonlinear function of v, so the check flows through sva,
// saliency_weights, downsample_saliency and rrb into RRSNet parameters
ModuleResult check_visual(std::uint64_t seed, double step) {
    Rng rng(derive_seed(seed, "gradsuite.visual"));
    ModelConfig cfg = tiny_config();
    ParamStore params;
    saliency::register_params(params, cfg, seed);
    visual::register_params(params, cfg, seed);
    Tensor image = random_tensor({3, cfg.image_size, cfg.image_size}, rng, 0.0, 1.0);
    auto build = [image, cfg](Graph& g) {
        auto img = model::embed_image(g, g.input(image), cfg);
        return g.sum_all(g.tanh_(img.v));
    };
    auto r = gradcheck(params, build, step);
    return {"visual", r.max_rel_err, r.worst_param};
}

ModuleResult check_text(std::uint64_t seed, double step) {
    Rng rng(derive_seed(seed, "gradsuite.text"));
    ModelConfig cfg = tiny_config();
    ParamStore params;
    text::register_params(params, cfg, seed);
    std::vector<int> ids;
    for (int j = 0; j < 5; ++j) ids.push_back(static_cast<int>(rng.next_below(cfg.vocab_size)));
    auto build = [ids, cfg](Graph& g) {
        auto enc = model::encode_sentence(g, ids, cfg);
        return g.sum_all(g.tanh_(enc.t_g));
    };
    auto r = gradcheck(params, build, step);
    return {"text", r.max_rel_err, r.worst_param};
}

ModuleResult check_sta(std::uint64_t seed, double step) {
    Rng rng(derive_seed(seed, "gradsuite.sta.12"));
    ModelConfig cfg = tiny_config();
    ParamStore params;
    sta::register_params(params, cfg, seed);
    Tensor v = random_tensor({cfg.k}, rng);
    Tensor t_g = random_tensor({cfg.k}, rng);
    Tensor feats = random_tensor({4, cfg.k}, rng);
    auto build = [v, t_g, feats](Graph& g) {
        Var m_f = sta::gated_fusion(g, g.input(v), g.input(t_g));
        auto att = sta::textual_attention(g, m_f, g.input(feats));
        Var t = sta::fuse_textual(g, g.input(t_g), att.t_s);
        return g.sum_all(g.tanh_(t));
    };
    auto r = gradcheck(params, build, step);
    return {"sta", r.max_rel_err, r.worst_param};
}

// full Eq.-10-style loss on a 2-pair batch; touches every parameter group
ModuleResult check_objective(std::uint64_t seed, double step) {
    // fixture tag tuned so the probe point sits clear of hinge/PReLU kinks and
    // of near-cancelling gradient coordinates, both of which defeat central
    // differences at small h
    Rng rng(derive_seed(seed, "gradsuite.objective.82"));
    ModelConfig cfg = tiny_config();
    cfg.image_size = 8;
    training::TrainConfig tc;
    tc.model = cfg;
    tc.variant = model::parse_variant("FV+FT(G-S)");
    ParamStore params;
    model::register_all(params, cfg, seed);
    datasets::Sample a, b;
    a.image = random_tensor({3, cfg.image_size, cfg.image_size}, rng, 0.0, 1.0);
    b.image = random_tensor({3, cfg.image_size, cfg.image_size}, rng, 0.0, 1.0);
    std::vector<std::vector<int>> ids = {{2, 5, 3}, {4, 6, 7, 2}};
    auto build = [&params, a, b, ids, tc](Graph& g) {
        return training::batch_ranking_loss(g, tc, {&a, &b}, ids);
    };
    auto r = gradcheck(params, build, step);
    return {"objective", r.max_rel_err, r.worst_param};
}

}  // namespace

std::vector<std::string> module_names() {
    return {"tensor", "saliency", "visual", "text", "sta", "objective"};
}

std::vector<ModuleResult> run(std::uint64_t seed, const std::vector<std::string>& only,
                              double step) {
    auto wanted = [&](const std::string& name) {
        return only.empty() || std::find(only.begin(), only.end(), name) != only.end();
    };
    for (const auto& name : only) {
        auto all = module_names();
        if (std::find(all.begin(), all.end(), name) == all.end())
            throw UsageError("gradcheck: unknown module '" + name + "'");
    }
    std::vector<ModuleResult> out;
    if (wanted("tensor")) out.push_back(check_tensor(seed, step));
    if (wanted("saliency")) out.push_back(check_saliency(seed, step));
    if (wanted("visual")) out.push_back(check_visual(seed, step));
    if (wanted("text")) out.push_back(check_text(seed, step));
    if (wanted("sta")) out.push_back(check_sta(seed, step));
    if (wanted("objective")) out.push_back(check_objective(seed, step));
    return out;
}

}  // namespace san::gradsuite
