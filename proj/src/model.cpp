#include "san/model.hpp"

namespace san::model {

Variant parse_variant(const std::string& id) {
    auto plus = id.find('+');
    if (plus == std::string::npos)
        throw UsageError("variant: expected '<visual>+<textual>', got '" + id + "'");
    auto trim = [](std::string s) {
        while (!s.empty() && s.front() == ' ') s.erase(s.begin());
        while (!s.empty() && s.back() == ' ') s.pop_back();
        return s;
    };
    std::string vis = trim(id.substr(0, plus));
    std::string txt = trim(id.substr(plus + 1));
    Variant v;
    if (vis == "GV") v.visual = VisualVariant::GV;
    else if (vis == "SV") v.visual = VisualVariant::SV;
    else if (vis == "FV") v.visual = VisualVariant::FV;
    else throw UsageError("variant: unknown visual side '" + vis + "'");
    if (txt == "GT") v.textual = TextualVariant::GT;
    else if (txt == "ST") v.textual = TextualVariant::ST;
    else if (txt == "FT" || txt == "FT(G-S)") v.textual = TextualVariant::FT;
    else throw UsageError("variant: unknown textual side '" + txt + "'");
    return v;
}

std::string variant_name(const Variant& v) {
    std::string out;
    switch (v.visual) {
        case VisualVariant::GV: out = "GV"; break;
        case VisualVariant::SV: out = "SV"; break;
        case VisualVariant::FV: out = "FV"; break;
    }
    out += "+";
    switch (v.textual) {
        case TextualVariant::GT: out += "GT"; break;
        case TextualVariant::ST: out += "ST"; break;
        case TextualVariant::FT: out += "FT(G-S)"; break;
    }
    return out;
}

void register_all(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed) {
    saliency::register_params(store, cfg, seed);
    visual::register_params(store, cfg, seed);
    text::register_params(store, cfg, seed);
    sta::register_params(store, cfg, seed);
}

ImageEmbedding embed_image(Graph& g, Var image, const ModelConfig& cfg) {
    ImageEmbedding out;
    Var v = visual::encode_image(g, image, cfg);
    auto sal = saliency::forward(g, image, cfg);
    out.s1 = sal.s1;
    Var s2 = visual::downsample_saliency(g, sal.s1, cfg.grid(), cfg.grid());
    out.weights = visual::saliency_weights(g, s2);
    out.v_g = visual::global_visual(g, v);
    out.v_s = visual::sva(g, v, out.weights);
    out.v = visual::fuse_visual(g, out.v_g, out.v_s);
    return out;
}

SentenceEncoding encode_sentence(Graph& g, const std::vector<int>& ids,
                                 const ModelConfig& cfg) {
    SentenceEncoding out;
    Var emb = text::embed(g, ids);
    out.features = text::bigru(g, emb, cfg);
    out.t_g = text::global_textual(g, out.features);
    return out;
}

Var visual_vector(const ImageEmbedding& img, VisualVariant variant) {
    switch (variant) {
        case VisualVariant::GV: return img.v_g;
        case VisualVariant::SV: return img.v_s;
        case VisualVariant::FV: return img.v;
    }
    throw UsageError("visual_vector: bad variant");
}

TextualResult textual_vector(Graph& g, const ImageEmbedding& img,
                             const SentenceEncoding& sent, TextualVariant variant) {
    TextualResult out;
    if (variant == TextualVariant::GT) {
        out.vec = sent.t_g;
        return out;
    }
    Var m_f = sta::gated_fusion(g, img.v, sent.t_g);
    auto att = sta::textual_attention(g, m_f, sent.features);
    out.weights = att.weights;
    out.vec = variant == TextualVariant::ST ? att.t_s
                                            : sta::fuse_textual(g, sent.t_g, att.t_s);
    return out;
}

Var pair_similarity(Graph& g, const ImageEmbedding& img, const SentenceEncoding& sent,
                    const Variant& variant) {
    Var vv = visual_vector(img, variant.visual);
    Var tv = textual_vector(g, img, sent, variant.textual).vec;
    return g.cosine(vv, tv);
}

}  // namespace san::model
