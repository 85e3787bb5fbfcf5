#include "san/objective.hpp"

#include <cmath>

namespace san::objective {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < 1e-12 || nb < 1e-12) throw NumericError("cosine: degenerate (near-zero) vector");
    return std::min(1.0, std::max(-1.0, dot / (na * nb)));
}

Var triplet_loss(Graph& g, const std::vector<std::vector<Var>>& s, const MarginConfig& cfg) {
    const std::size_t b = s.size();
    if (b < 2) throw UsageError("triplet_loss: batch size must be >= 2 (no negatives exist)");
    if (cfg.margin <= 0.0) throw UsageError("triplet_loss: margin must be positive");
    for (const auto& r : s)
        if (r.size() != b) throw ShapeError("triplet_loss: similarity matrix must be square");

    Var total = g.constant(0.0);
    for (std::size_t i = 0; i < b; ++i) {
        std::vector<Var> sent_terms, img_terms;
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            Var margin = g.constant(cfg.margin);
            // max[0, margin - s(I,T) + s(I,T-)]
            sent_terms.push_back(g.relu(g.add(g.sub(margin, s[i][i]), s[i][j])));
            // max[0, margin - s(I,T) + s(I-,T)]
            img_terms.push_back(g.relu(g.add(g.sub(margin, s[i][i]), s[j][i])));
        }
        auto aggregate = [&](const std::vector<Var>& terms) {
            if (cfg.mode == NegativeMode::Hardest) {
                // graph values are available eagerly; picking the max term here
                // gives the same subgradient as a max node
                Var best = terms[0];
                for (std::size_t t = 1; t < terms.size(); ++t)
                    if (g.value(terms[t]).scalar_value() > g.value(best).scalar_value())
                        best = terms[t];
                return best;
            }
            Var acc = terms[0];
            for (std::size_t t = 1; t < terms.size(); ++t) acc = g.add(acc, terms[t]);
            return acc;
        };
        total = g.add(total, g.add(aggregate(sent_terms), aggregate(img_terms)));
    }
    return total;
}

}  // namespace san::objective
