#include "licem/intervention.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "licem/metrics.hpp"

namespace licem {

namespace {

double accuracy_under_plan(const Model& model, const Batch& batch, const InterventionPlan& plan) {
    Model::ForwardOptions options;
    if (batch.has_injected()) {
        options.injected = &batch.injected_scores;
    }
    options.override_mask = &plan.mask;
    options.override_values = &plan.values;
    Model::Output out = model.infer(batch.embeddings, options);
    return task_accuracy(out.predicted, batch.labels);
}

} // namespace

InterventionCurve intervention_curve(const Model& model, const TensorData& data,
                                     const std::vector<double>& grid, int repetitions,
                                     std::uint64_t seed) {
    if (grid.empty()) {
        throw UsageError("intervention_curve: empty probability grid");
    }
    for (size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || grid[i] > 1.0) {
            throw UsageError("intervention_curve: probabilities must lie in [0,1]");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw UsageError("intervention_curve: probability grid must be strictly increasing");
        }
    }
    if (repetitions < 1) {
        throw UsageError("intervention_curve: repetitions must be at least 1");
    }

    InterventionCurve curve;
    curve.probabilities = grid;
    curve.repetitions = repetitions;

    Batch batch = data.all();
    Model::ForwardOptions base_options;
    if (batch.has_injected()) {
        base_options.injected = &batch.injected_scores;
    }
    Model::Output base = model.infer(batch.embeddings, base_options);
    curve.baseline_accuracy = task_accuracy(base.predicted, batch.labels);

    if (!supports_injection(model.config().kind)) {
        // E2E exposes no concepts to intervene on; report the flat line.
        curve.accuracy_gain.assign(grid.size(), 0.0);
        curve.gain_std.assign(grid.size(), 0.0);
        curve.auc = grid.size() >= 2 ? auc_trapezoid(grid, curve.accuracy_gain) : 0.0;
        return curve;
    }
    if (!batch.has_concept_targets()) {
        throw ConfigError("intervention_curve: dataset has no concept labels");
    }

    for (double p : grid) {
        double gain = 0.0;
        double dispersion = 0.0;
        if (p == 0.0) {
            gain = 0.0;
        } else if (p == 1.0) {
            std::vector<std::uint64_t> keys(static_cast<size_t>(batch.size()));
            for (size_t i = 0; i < keys.size(); ++i) {
                keys[i] = i;
            }
            InterventionPlan plan = plan_interventions(batch.concept_targets, 1.0, seed, keys);
            gain = accuracy_under_plan(model, batch, plan) - curve.baseline_accuracy;
        } else {
            double sum = 0.0;
            double sum_sq = 0.0;
            for (int rep = 0; rep < repetitions; ++rep) {
                std::vector<std::uint64_t> keys(static_cast<size_t>(batch.size()));
                for (size_t i = 0; i < keys.size(); ++i) {
                    keys[i] = static_cast<std::uint64_t>(rep) * static_cast<std::uint64_t>(batch.size()) + i;
                }
                // nudge the seed per probability so grid points are independent
                const std::uint64_t p_seed = seed ^ fnv1a(std::to_string(p));
                InterventionPlan plan = plan_interventions(batch.concept_targets, p, p_seed, keys);
                const double acc = accuracy_under_plan(model, batch, plan);
                sum += acc;
                sum_sq += acc * acc;
            }
            const double mean = sum / repetitions;
            const double var = sum_sq / repetitions - mean * mean;
            gain = mean - curve.baseline_accuracy;
            dispersion = var > 0.0 ? std::sqrt(var) : 0.0;
        }
        curve.accuracy_gain.push_back(gain);
        curve.gain_std.push_back(dispersion);
    }
    curve.auc = grid.size() >= 2 ? auc_trapezoid(grid, curve.accuracy_gain) : 0.0;
    return curve;
}

std::string curve_to_csv(const InterventionCurve& curve) {
    std::ostringstream os;
    os << "p,gain\n";
    os.precision(17);
    for (size_t i = 0; i < curve.probabilities.size(); ++i) {
        os << curve.probabilities[i] << "," << curve.accuracy_gain[i] << "\n";
    }
    return os.str();
}

std::string curve_to_json(const InterventionCurve& curve) {
    nlohmann::ordered_json j;
    j["probabilities"] = curve.probabilities;
    j["accuracy_gain"] = curve.accuracy_gain;
    j["auc"] = curve.auc;
    j["baseline_accuracy"] = curve.baseline_accuracy;
    j["repetitions"] = curve.repetitions;
    return j.dump(2) + "\n";
}

} // namespace licem
