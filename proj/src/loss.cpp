#include "licem/loss.hpp"

#include <algorithm>

#include "licem/dataset.hpp"
#include <cmath>

namespace licem {

std::string to_string(SupervisionMode mode) {
    switch (mode) {
    case SupervisionMode::supervised: return "supervised";
    case SupervisionMode::generative: return "generative";
    case SupervisionMode::self_generative: return "self_generative";
    }
    throw UsageError("unknown supervision mode");
}

SupervisionMode supervision_mode_from_string(const std::string& name) {
    if (name == "supervised") {
        return SupervisionMode::supervised;
    }
    if (name == "generative") {
        return SupervisionMode::generative;
    }
    if (name == "self_generative" || name == "self-generative") {
        return SupervisionMode::self_generative;
    }
    throw UsageError("unknown supervision mode '" + name +
                     "' (expected supervised, generative or self_generative)");
}

double TrainConfig::resolved_intervention_p(ModelKind kind) const {
    if (train_intervention_p >= 0.0) {
        return train_intervention_p;
    }
    const bool trains_scorer = is_cem_family(kind) && has_internal_concepts(kind) &&
                               mode != SupervisionMode::self_generative;
    return trains_scorer ? 0.5 : 0.0;
}

void TrainConfig::validate() const {
    if (lambda_y < 0.0 || lambda_w < 0.0 || lambda_b < 0.0) {
        throw ConfigError("training: lambda coefficients must be non-negative");
    }
    if (epochs < 0) {
        throw ConfigError("training: epochs must be non-negative");
    }
    if (base_lr <= 0.0) {
        throw ConfigError("training: base_lr must be positive");
    }
    if (batch_size <= 0) {
        throw ConfigError("training: batch_size must be positive");
    }
    if (train_intervention_p > 1.0) {
        throw ConfigError("training: train_intervention_p must lie in [0,1]");
    }
    if (step_size <= 0) {
        throw ConfigError("training: step_size must be positive");
    }
    if (weight_decay < 0.0) {
        throw ConfigError("training: weight_decay must be non-negative");
    }
}

namespace {

// Mask of known concept targets and their {0,1} values as doubles.
void split_targets(const Matrix& targets, Matrix& values, Matrix& mask, double& known_count) {
    values = Matrix(targets.rows, targets.cols);
    mask = Matrix(targets.rows, targets.cols);
    known_count = 0.0;
    for (size_t i = 0; i < targets.data.size(); ++i) {
        const double t = targets.data[i];
        if (t >= 0.0) {
            values.data[i] = t;
            mask.data[i] = 1.0;
            known_count += 1.0;
        }
    }
}

// Mean per-sample L1 of the realized equation weights and mean per-sample
// squared L2 of the realized bias. Zero Vars when the graph has no head
// outputs (non-LICEM models).
void head_regularizers(Tape& tape, const Model::Graph& graph, int batch, Var& l1, Var& l2) {
    if (graph.weights.empty()) {
        l1 = tape.scalar(0.0);
        l2 = tape.scalar(0.0);
        return;
    }
    Var acc = sum(abs(graph.weights[0]));
    for (size_t j = 1; j < graph.weights.size(); ++j) {
        acc = add(acc, sum(abs(graph.weights[j])));
    }
    l1 = scale(acc, 1.0 / batch);
    l2 = scale(sum(square(graph.bias)), 1.0 / batch);
}

Var task_term(const Model& model, const Model::Graph& graph, const Batch& batch) {
    (void)model;
    return cross_entropy(graph.task_logits, batch.labels);
}

Var assemble(Tape& tape, const Model& model, const Model::Graph& graph, const Batch& batch,
             const TrainConfig& config, LossReport* report, bool with_concept_term) {
    // models without a concept path (e2e) train on the plain task loss
    with_concept_term = with_concept_term && graph.has_concepts;
    Var concept_loss = tape.scalar(0.0);
    if (with_concept_term) {
        if (!batch.has_concept_targets()) {
            throw ConfigError("supervised loss requires concept labels (none in batch)");
        }
        Matrix values, mask;
        double known = 0.0;
        split_targets(batch.concept_targets, values, mask, known);
        if (known == 0.0) {
            throw ConfigError("supervised loss: no known concept labels in batch");
        }
        if (graph.concept_logits) {
            concept_loss = sigmoid_bce(*graph.concept_logits, values, mask);
        } else {
            // Score-injected model: the concept term measures the injected
            // scores against the labels and carries no gradient.
            Matrix clamped = graph.task_scores.value();
            for (double& v : clamped.data) {
                v = std::min(1.0 - 1e-12, std::max(1e-12, v));
            }
            double acc = 0.0;
            for (size_t i = 0; i < clamped.data.size(); ++i) {
                if (mask.data[i] != 0.0) {
                    const double t = values.data[i];
                    acc -= t * std::log(clamped.data[i]) + (1.0 - t) * std::log(1.0 - clamped.data[i]);
                }
            }
            concept_loss = tape.scalar(acc / known);
        }
    }

    Var task = task_term(model, graph, batch);
    Var l1, l2;
    head_regularizers(tape, graph, batch.size(), l1, l2);

    // the joint loss weights the task term by lambda_y; the task-only loss uses it plain
    Var total = with_concept_term ? add(concept_loss, scale(task, config.lambda_y)) : task;
    total = add(total, scale(l1, config.lambda_w));
    total = add(total, scale(l2, config.lambda_b));

    if (report != nullptr) {
        report->concept_term = concept_loss.value().data[0];
        report->task_term = task.value().data[0];
        report->l1_term = l1.value().data[0];
        report->l2_term = l2.value().data[0];
        report->total = total.value().data[0];
    }
    return total;
}

} // namespace

Var supervised_loss(Tape& tape, const Model& model, const Model::Graph& graph, const Batch& batch,
                    const TrainConfig& config, LossReport* report) {
    return assemble(tape, model, graph, batch, config, report, true);
}

Var selfgen_loss(Tape& tape, const Model& model, const Model::Graph& graph, const Batch& batch,
                 const TrainConfig& config, LossReport* report) {
    return assemble(tape, model, graph, batch, config, report, false);
}

Var training_loss(Tape& tape, const Model& model, const Model::Graph& graph, const Batch& batch,
                  const TrainConfig& config, LossReport* report) {
    if (config.mode == SupervisionMode::self_generative) {
        return selfgen_loss(tape, model, graph, batch, config, report);
    }
    return supervised_loss(tape, model, graph, batch, config, report);
}

InterventionResult intervene(const std::vector<double>& scores, const std::vector<int>& labels, double p,
                             std::uint64_t seed, std::uint64_t sample_key) {
    if (scores.size() != labels.size()) {
        throw DimError("intervene: scores and labels must have equal length");
    }
    if (p < 0.0 || p > 1.0) {
        throw UsageError("intervene: probability must lie in [0,1]");
    }
    InterventionResult out;
    out.scores = scores;
    for (size_t j = 0; j < scores.size(); ++j) {
        if (keyed_uniform(seed, sample_key, j) < p) {
            if (labels[j] == kUnknownConcept) {
                out.skipped_unknown += 1;
                continue;
            }
            out.scores[j] = static_cast<double>(labels[j]);
        }
    }
    return out;
}

InterventionPlan plan_interventions(const Matrix& concept_targets, double p, std::uint64_t seed,
                                    const std::vector<std::uint64_t>& row_keys) {
    if (p < 0.0 || p > 1.0) {
        throw UsageError("plan_interventions: probability must lie in [0,1]");
    }
    if (static_cast<int>(row_keys.size()) != concept_targets.rows) {
        throw DimError("plan_interventions: one key per row required");
    }
    InterventionPlan plan;
    plan.mask = Matrix(concept_targets.rows, concept_targets.cols);
    plan.values = Matrix(concept_targets.rows, concept_targets.cols);
    if (p == 0.0) {
        return plan;
    }
    for (int i = 0; i < concept_targets.rows; ++i) {
        for (int j = 0; j < concept_targets.cols; ++j) {
            if (keyed_uniform(seed, row_keys[static_cast<size_t>(i)], static_cast<std::uint64_t>(j)) < p) {
                const double label = concept_targets.at(i, j);
                if (label < 0.0) {
                    plan.skipped_unknown += 1;
                    continue;
                }
                plan.mask.at(i, j) = 1.0;
                plan.values.at(i, j) = label;
            }
        }
    }
    return plan;
}

} // namespace licem
