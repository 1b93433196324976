#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "licem/model.hpp"
#include "licem/optim.hpp"

namespace licem {

enum class SupervisionMode { supervised, generative, self_generative };

std::string to_string(SupervisionMode mode);
SupervisionMode supervision_mode_from_string(const std::string& name);

struct TrainConfig {
    double lambda_y = 0.5;
    double lambda_w = 1e-6;
    double lambda_b = 1e-6;
    int epochs = 50;
    double base_lr = 1e-2;
    double gamma = 0.1;
    int step_size = 10;
    int batch_size = 64;
    // Probability of replacing a predicted concept score with its label during
    // training forward passes; negative means "resolve by model kind"
    // (0.5 for CEM-family models trained with concept labels, 0 otherwise).
    double train_intervention_p = -1.0;
    std::uint64_t seed = 0;
    SupervisionMode mode = SupervisionMode::supervised;
    double weight_decay = 1e-2;

    LrSchedule schedule() const { return LrSchedule{base_lr, gamma, step_size}; }
    double resolved_intervention_p(ModelKind kind) const;
    void validate() const;
};

struct LossReport {
    double concept_term = 0.0; // H(c, c_hat) over known concept entries
    double task_term = 0.0;    // H(y, y_hat)
    double l1_term = 0.0;      // mean per-sample ||w_hat||_1
    double l2_term = 0.0;      // mean per-sample ||b_hat||_2^2
    double total = 0.0;
};

// Materialized tensors for one batch of samples.
struct Batch {
    Matrix embeddings;            // B x b
    std::vector<int> labels;      // B
    Matrix concept_targets;       // B x m with -1 unknown; empty when absent
    Matrix injected_scores;       // B x m external scores; empty when absent

    int size() const { return embeddings.rows; }
    bool has_concept_targets() const { return concept_targets.size() != 0; }
    bool has_injected() const { return injected_scores.size() != 0; }
};

// Joint concept+task loss: concept BCE over known entries + lambda_y * task CE
// + lambda_w * L1(w_hat) + lambda_b * L2(b_hat). Models without an internal
// concept predictor contribute a constant concept term (no gradient).
Var supervised_loss(Tape& tape, const Model& model, const Model::Graph& graph, const Batch& batch,
                    const TrainConfig& config, LossReport* report);

// Task-only loss: task CE + regularizers; the concept term is zero.
Var selfgen_loss(Tape& tape, const Model& model, const Model::Graph& graph, const Batch& batch,
                 const TrainConfig& config, LossReport* report);

Var training_loss(Tape& tape, const Model& model, const Model::Graph& graph, const Batch& batch,
                  const TrainConfig& config, LossReport* report);

// ----------------------------- interventions -----------------------------

struct InterventionResult {
    std::vector<double> scores;
    int skipped_unknown = 0;
};

// Each coordinate is independently replaced by its label with probability p.
// Decisions are keyed by (seed, sample_key, coordinate), so they are
// order-independent and composable over disjoint coordinate sets. Unknown
// labels at selected coordinates are skipped and counted.
InterventionResult intervene(const std::vector<double>& scores, const std::vector<int>& labels, double p,
                             std::uint64_t seed, std::uint64_t sample_key);

// Batched form producing the override mask/values pair consumed by
// Model::forward. row_keys identify samples independently of batch order.
struct InterventionPlan {
    Matrix mask;   // B x m, 1 where replaced
    Matrix values; // B x m, replacement scores
    int skipped_unknown = 0;
};
InterventionPlan plan_interventions(const Matrix& concept_targets, double p, std::uint64_t seed,
                                    const std::vector<std::uint64_t>& row_keys);

} // namespace licem
