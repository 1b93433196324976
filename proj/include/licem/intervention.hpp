#pragma once

#include <cstdint>
#include <vector>

#include "licem/train.hpp"

namespace licem {

struct InterventionCurve {
    std::vector<double> probabilities;
    std::vector<double> accuracy_gain; // mean task-accuracy delta vs the unintervened baseline
    std::vector<double> gain_std;      // dispersion across repetitions (0 at the exact endpoints)
    double auc = 0.0;
    double baseline_accuracy = 0.0;
    int repetitions = 0;
};

// Test-time concept interventions: for each probability in the grid, concept
// scores are replaced by their labels coordinate-wise, the task accuracy is
// averaged over repetitions, and the gain over the baseline is reported with
// its trapezoidal AUC. Endpoints are deterministic (no sampling at p=0/p=1).
// Models without injectable concepts yield a flat zero curve.
InterventionCurve intervention_curve(const Model& model, const TensorData& data,
                                     const std::vector<double>& grid, int repetitions,
                                     std::uint64_t seed);

std::string curve_to_csv(const InterventionCurve& curve);
std::string curve_to_json(const InterventionCurve& curve);

} // namespace licem
