#pragma once

#include <optional>
#include <string>
#include <vector>

#include "licem/optim.hpp"
#include "licem/tape.hpp"

namespace licem {

// Model grid: four architectures, each optionally consuming externally
// generated concept scores instead of predicting its own (self_* kinds).
enum class ModelKind {
    e2e,
    cbm_ll,
    cbm_mlp,
    cem,
    licem,
    self_cbm_ll,
    self_cbm_mlp,
    self_cem,
    self_licem,
};

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Scores arrive injected rather than from an internal scorer.
bool is_self_kind(ModelKind kind);
// Uses the concept-embedding layer (positive/negative states + mixture).
bool is_cem_family(ModelKind kind);
// Predicts its own concept scores (has a concept loss term).
bool has_internal_concepts(ModelKind kind);
// Concept scores can be replaced from outside (everything but e2e).
bool supports_injection(ModelKind kind);

struct ModelConfig {
    ModelKind kind = ModelKind::licem;
    int embed_dim = 0;          // b: encoder output width
    int concept_count = 0;      // m
    int class_count = 0;        // n
    int concept_embed_dim = 768; // k
    bool use_bias = true;        // LICEM beta network present
    bool per_concept_rho = false; // one weight net per concept instead of shared

    bool binary_head() const { return class_count == 2; }
    // Binary tasks use a single-logit sigmoid head (class 1 positive).
    int head_width() const { return binary_head() ? 1 : class_count; }
    void validate() const;
};

class Model {
public:
    Model() = default;
    Model(const ModelConfig& config, Rng& rng);

    const ModelConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    struct ForwardOptions {
        // External concept scores (B x m), required for self_* kinds.
        const Matrix* injected = nullptr;
        // Per-coordinate replacement of the scores feeding the task path:
        // where mask is 1, the score becomes the value (a constant in the
        // backward pass). Used for interventions and do-operations.
        const Matrix* override_mask = nullptr;
        const Matrix* override_values = nullptr;
    };

    // Tape-bound forward pass outputs.
    struct Graph {
        Var task_logits;                       // B x head_width
        std::optional<Var> concept_logits;     // B x m, pre-sigmoid (internal scorer only)
        std::optional<Var> concept_scores_raw; // B x m, internal sigmoid scores
        Var task_scores;                       // B x m scores consumed by the task path
        std::vector<Var> weights;              // licem: m entries of B x head_width
        Var bias;                              // licem: B x head_width (zeros when use_bias=false)
        bool has_concepts = false;
    };

    // Parameters must be registered on the tape first (in params order).
    std::vector<Var> register_params(Tape& tape) const;
    Graph forward(Tape& tape, const std::vector<Var>& param_vars, Var embeddings,
                  const ForwardOptions& options) const;
    Graph forward(Tape& tape, const std::vector<Var>& param_vars, Var embeddings) const {
        return forward(tape, param_vars, embeddings, ForwardOptions{});
    }

    // Value-level inference (no gradients retained).
    struct Output {
        Matrix task_logits;        // B x head_width
        Matrix probabilities;      // B x class_count (binary head expanded to two columns)
        Matrix task_scores;        // B x m (empty for e2e)
        Matrix raw_concept_scores; // B x m internal predictions (empty if none)
        std::vector<Matrix> weights; // licem: m entries of B x head_width
        Matrix bias;                 // licem: B x head_width
        std::vector<int> predicted;  // argmax / threshold class per row
    };
    Output infer(const Matrix& embeddings, const ForwardOptions& options) const;
    Output infer(const Matrix& embeddings) const { return infer(embeddings, ForwardOptions{}); }

    // Per-class logit of a binary head: class 1 carries the logit, class 0 its
    // negation, so the linear decomposition holds for both classes.
    double class_logit(const Output& out, int row, int class_index) const;
    double class_probability(const Output& out, int row, int class_index) const;
    // licem: weight of concept j for a class, sign-adjusted for binary heads.
    double class_weight(const Output& out, int row, int class_index, int concept_index) const;
    double class_bias(const Output& out, int row, int class_index) const;

    void save(const std::string& path, std::uint64_t schema_hash) const;
    static Model load(const std::string& path,
                      std::optional<std::uint64_t> expected_schema_hash = std::nullopt);
    std::uint64_t schema_hash() const { return schema_hash_; }

private:
    void add_linear(const std::string& prefix, int in, int out, Rng& rng);

    ModelConfig config_;
    ParamStore params_;
    std::uint64_t schema_hash_ = 0;
};

} // namespace licem
