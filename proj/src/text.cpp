#include "san/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "san/init.hpp"

namespace san::text {

Vocabulary::Vocabulary() = default;

Vocabulary Vocabulary::build(const std::vector<std::string>& captions, std::size_t min_freq) {
    std::map<std::string, std::size_t> freq;
    for (const auto& c : captions)
        for (const auto& t : split_tokens(c)) ++freq[t];
    Vocabulary v;
    for (const auto& [token, n] : freq)
        if (n >= min_freq) v.ids_[token] = v.next_id_++;
    return v;
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

std::vector<std::string> Vocabulary::serialize() const {
    std::vector<std::string> lines;
    for (const auto& [token, id] : ids_) lines.push_back(token + " " + std::to_string(id));
    return lines;
}

Vocabulary Vocabulary::deserialize(const std::vector<std::string>& lines) {
    Vocabulary v;
    for (const auto& line : lines) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string token;
        int id = -1;
        if (!(ss >> token >> id) || id < 2)
            throw DataError("vocabulary: malformed line: " + line);
        v.ids_[token] = id;
        v.next_id_ = std::max(v.next_id_, id + 1);
    }
    return v;
}

std::vector<std::string> split_tokens(const std::string& sentence) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : sentence) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

TokenSequence tokenize(const std::string& sentence, const Vocabulary& vocab,
                       std::size_t max_len) {
    TokenSequence seq;
    seq.tokens = split_tokens(sentence);
    if (seq.tokens.empty()) throw DataError("tokenize: empty sentence after normalization");
    if (seq.tokens.size() > max_len) seq.tokens.resize(max_len);
    for (const auto& t : seq.tokens) seq.ids.push_back(vocab.id_of(t));
    return seq;
}

void register_params(ParamStore& store, const ModelConfig& cfg, std::uint64_t seed) {
    store.add("text.embedding", xavier_uniform({cfg.emb_dim, cfg.vocab_size}, cfg.vocab_size,
                                               cfg.emb_dim, seed, "text.embedding"));
    for (const char* dir : {"f", "b"})
        for (const char* gate : {"z", "r", "h"}) {
            std::string base = std::string("text.gru.") + dir + ".";
            std::string w = base + "w" + gate;
            std::string u = base + "u" + gate;
            std::string b = base + "b" + gate;
            store.add(w, xavier_uniform({cfg.k, cfg.emb_dim}, cfg.emb_dim, cfg.k, seed, w));
            store.add(u, xavier_uniform({cfg.k, cfg.k}, cfg.k, cfg.k, seed, u));
            store.add(b, Tensor({cfg.k}));
        }
}

bool owns_param(const std::string& name) { return name.rfind("text.", 0) == 0; }

Var embed(Graph& g, const std::vector<int>& ids) {
    return g.embedding(g.param("text.embedding"), ids);
}

namespace {

// z = sig(Wz e + Uz h + bz); r = sig(Wr e + Ur h + br);
// cand = tanh(Wh e + Uh (r.h) + bh); h' = (1-z).h + z.cand
Var gru_cell(Graph& g, const std::string& base, Var e, Var h) {
    auto gate = [&](const char* id, Var hin) {
        return g.add(g.add(g.matvec(g.param(base + "w" + id), e),
                           g.matvec(g.param(base + "u" + id), hin)),
                     g.param(base + "b" + id));
    };
    Var z = g.sigmoid(gate("z", h));
    Var r = g.sigmoid(gate("r", h));
    Var cand = g.tanh_(g.add(g.add(g.matvec(g.param(base + "wh"), e),
                                   g.matvec(g.param(base + "uh"), g.mul(r, h))),
                             g.param(base + "bh")));
    // h + z.(cand - h)
    return g.add(h, g.mul(z, g.sub(cand, h)));
}

}  // namespace

Var bigru(Graph& g, Var embeddings, const ModelConfig& cfg) {
    const Tensor& e = g.value(embeddings);
    if (e.rank() != 2 || e.dim(1) != cfg.emb_dim)
        throw ShapeError("bigru: expected [L," + std::to_string(cfg.emb_dim) + "], got " +
                         e.shape_str());
    const std::size_t L = e.dim(0);
    std::vector<Var> fwd(L), bwd(L);
    Var h = g.input(Tensor({cfg.k}));
    for (std::size_t j = 0; j < L; ++j) {
        h = gru_cell(g, "text.gru.f.", g.row(embeddings, j), h);
        fwd[j] = h;
    }
    h = g.input(Tensor({cfg.k}));
    for (std::size_t j = L; j-- > 0;) {
        h = gru_cell(g, "text.gru.b.", g.row(embeddings, j), h);
        bwd[j] = h;
    }
    std::vector<Var> rows(L);
    for (std::size_t j = 0; j < L; ++j) rows[j] = g.scale(g.add(fwd[j], bwd[j]), 0.5);
    return g.stack_rows(rows);
}

Var global_textual(Graph& g, Var features) { return g.mean_axis(features, 0); }

}  // namespace san::text
