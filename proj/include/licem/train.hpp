#pragma once

#include <string>
#include <vector>

#include "licem/dataset.hpp"
#include "licem/embedding.hpp"
#include "licem/loss.hpp"
#include "licem/model.hpp"

namespace licem {

// Column-aligned tensors for a dataset slice. Rows follow the index order
// given at materialization; ids keep the linkage back to samples.
struct TensorData {
    Matrix embeddings;      // N x b
    std::vector<int> labels;
    Matrix concept_targets; // N x m with -1 unknown; empty when no labels at all
    Matrix injected_scores; // N x m external concept scores; empty unless self mode
    std::vector<std::string> ids;

    int size() const { return embeddings.rows; }
    Batch slice(const std::vector<int>& rows) const;
    Batch all() const;
};

// Gathers embeddings/labels/concepts for the chosen samples. In
// self-generative mode the annotation overlay (or, failing that, the stored
// concept column) becomes the injected score stream and must be fully known.
TensorData materialize(const Dataset& dataset, const std::vector<int>& indices,
                       const EmbeddingStore& store, SupervisionMode mode,
                       const ConceptFile* annotations = nullptr);

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    LossReport train_loss; // sample-weighted mean over the epoch's batches
    double val_accuracy = 0.0;
    double val_concept_f1 = -1.0; // -1 when not applicable
    int intervention_skips = 0;   // unknown labels hit by training interventions
};

struct TrainResult {
    Model best;
    int best_epoch = -1;
    Model final;
    std::vector<EpochRecord> history;
    bool diverged = false;
};

// Full training loop: AdamW with the step-decay schedule, per-epoch seeded
// shuffling, optional concept interventions on training forward passes, and
// checkpoint selection by best validation task accuracy. A non-finite loss
// aborts with the last finite parameter state in `final`.
TrainResult train(const ModelConfig& model_config, const TensorData& train_data,
                  const TensorData& val_data, const TrainConfig& config);

std::string history_to_jsonl(const std::vector<EpochRecord>& history, const TrainConfig& config);
void save_history(const std::vector<EpochRecord>& history, const TrainConfig& config,
                  const std::string& path);

// Validation-style metrics for an arbitrary slice.
struct EvalSummary {
    double accuracy = 0.0;
    double concept_f1 = -1.0; // -1 when concepts unavailable
    double sparsity_deviation = -1.0;
};
EvalSummary evaluate(const Model& model, const TensorData& data);

} // namespace licem
