#pragma once

#include <functional>
#include <string>

#include "san/graph.hpp"

namespace san {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
};

/// Compares backward() gradients against central finite differences
/// (f(x+h) - f(x-h)) / (2h), coordinate by coordinate, over every trainable
/// parameter the loss touches. Relative error denominator is
/// max(|analytic|, |numeric|, 1e-8).
GradCheckResult gradcheck(ParamStore& params,
                          const std::function<Var(Graph&)>& build_loss,
                          double step = 1e-5);

}  // namespace san
