#pragma once

#include <vector>

#include "san/graph.hpp"

namespace san::objective {

enum class NegativeMode { SumAll, Hardest };

struct MarginConfig {
    double margin = 0.2;
    NegativeMode mode = NegativeMode::SumAll;
};

/// Cosine similarity of two plain vectors, clamped to [-1,1]. Throws
/// NumericError when either norm is below 1e-12.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Bidirectional hinge loss over a batch similarity matrix of graph scalars.
/// S[i][j] = s(I_i, T_j); the diagonal holds the matched pairs. For each i the
/// sentence-negative terms use row entries S[i][j] and the image-negative
/// terms column entries S[j][i] (j != i), summed or maxed per the mode.
Var triplet_loss(Graph& g, const std::vector<std::vector<Var>>& similarities,
                 const MarginConfig& cfg);

}  // namespace san::objective
