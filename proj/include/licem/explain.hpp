#pragma once

#include <string>
#include <vector>

#include "licem/schema.hpp"
#include "licem/train.hpp"

namespace licem {

// Per-sample linear explanation for the predicted class: concept scores,
// realized weights, their products, and the bias. Items are ordered by
// absolute contribution, largest first; index breaks ties.
struct ExplanationRecord {
    std::string id;
    int predicted_class = 0;
    std::string class_name;
    double probability = 0.0;
    double logit = 0.0;
    double bias = 0.0;

    struct Item {
        std::string concept_name;
        double score = 0.0;
        double weight = 0.0;
        double contribution = 0.0;
    };
    std::vector<Item> items;
};

// Contributions for one inferred row and class: w_hat * c_hat per concept
// plus the bias reproduce the class logit.
ExplanationRecord explain_output(const Model& model, const Model::Output& output, int row,
                                 int class_index, const ConceptSchema& schema, const std::string& id);
// Same, for the predicted class of a single sample.
ExplanationRecord explain_sample(const Model& model, const ConceptSchema& schema, const std::string& id,
                                 const Matrix& embedding_row, const Matrix* injected_scores = nullptr);

std::string render_json(const ExplanationRecord& record);
std::string render_csv(const ExplanationRecord& record);
// Deterministic horizontal bar chart on a fixed 640 x (40*m) canvas; the most
// important concept sits at the bottom.
std::string render_svg(const ExplanationRecord& record);
std::string render(const ExplanationRecord& record, const std::string& format);

ExplanationRecord parse_record(const std::string& json_text);

// Dataset-level aggregation of the realized equations for predicted classes.
struct ConceptSummary {
    std::string concept_name;
    double mean_abs_weight = 0.0;
    double mean_contribution = 0.0;
    // fraction of samples agreeing with the majority contribution sign
    double sign_consistency = 0.0;
};
struct GlobalSummary {
    std::vector<ConceptSummary> concepts;
    int samples = 0;
};
GlobalSummary global_summary(const Model& model, const TensorData& data, const ConceptSchema& schema);
std::string summary_to_json(const GlobalSummary& summary);

} // namespace licem
