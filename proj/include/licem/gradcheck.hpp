#pragma once

#include <string>
#include <vector>

#include "licem/train.hpp"

namespace licem {

// Central-finite-difference audit of the reverse-mode gradients through a
// full model + loss composition. Gradients come from the tape; reference
// values perturb each parameter entry by +/- h and re-run the forward pass.
struct GradCheckCase {
    std::string name;
    double max_rel_err = 0.0;
    size_t entries = 0;
    bool passed = false;
};

double finite_difference_max_err(Model& model, const Batch& batch, const TrainConfig& config,
                                 const InterventionPlan* plan, double h);

// The standard suite: every model variant of the family against both loss
// shapes on a small randomized instance (m=4, n=3, k=8, b=16).
std::vector<GradCheckCase> run_gradient_suite(std::uint64_t seed, double h = 1e-5,
                                              double tolerance = 1e-4);

} // namespace licem
