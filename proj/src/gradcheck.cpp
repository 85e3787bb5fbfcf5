#include "san/gradcheck.hpp"

#include <cmath>

namespace san {

GradCheckResult gradcheck(ParamStore& params,
                          const std::function<Var(Graph&)>& build_loss,
                          double step) {
    if (step <= 0.0) throw UsageError("gradcheck: step must be positive");

    GradientMap analytic;
    {
        Graph g(&params);
        Var loss = build_loss(g);
        analytic = g.backward(loss);
    }

    auto eval = [&]() {
        Graph g(&params);
        return g.value(build_loss(g)).scalar_value();
    };

    GradCheckResult result;
    for (auto& [name, grad] : analytic) {
        Tensor& p = params.at(name);
        for (std::size_t i = 0; i < p.numel(); ++i) {
            double saved = p[i];
            p[i] = saved + step;
            double fp = eval();
            p[i] = saved - step;
            double fm = eval();
            p[i] = saved;
            double numeric = (fp - fm) / (2.0 * step);
            double denom = std::max({std::abs(grad[i]), std::abs(numeric), 1e-8});
            double rel = std::abs(grad[i] - numeric) / denom;
            if (rel > result.max_rel_err) {
                result.max_rel_err = rel;
                result.worst_param = name;
                result.worst_index = i;
            }
        }
    }
    return result;
}

}  // namespace san
