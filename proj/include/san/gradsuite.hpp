#pragma once

#include <string>
#include <vector>

#include "san/gradcheck.hpp"

namespace san::gradsuite {

struct ModuleResult {
    std::string module;
    double max_rel_err;
    std::string worst_param;
};

/// Names accepted by run(): tensor, saliency, visual, text, sta, objective.
std::vector<std::string> module_names();

/// Finite-difference checks on small randomized instances, one entry per
/// module. "objective" is the end-to-end ranking loss on a 2-pair batch,
/// including gradient flow through the saliency weights into RRSNet.
std::vector<ModuleResult> run(std::uint64_t seed,
                              const std::vector<std::string>& only = {},
                              double step = 1e-5);

}  // namespace san::gradsuite
