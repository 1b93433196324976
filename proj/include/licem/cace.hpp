#pragma once

#include <string>
#include <vector>

#include "licem/schema.hpp"
#include "licem/train.hpp"

namespace licem {

// Causal concept effect of a do-intervention: mean over samples of
// P(target | do(c_j = 1)) - P(target | do(c_j = 0)), all other concepts at
// their model-predicted values; the embedding mixture follows the forced
// score. Deviation is the per-sample standard deviation of that difference.
struct CaceEntry {
    int concept_index = 0;
    std::string concept_name;
    int target_class = 0;
    double effect = 0.0;
    double stddev = 0.0;
};

CaceEntry cace(const Model& model, const TensorData& data, int concept_index, int target_class);
std::vector<CaceEntry> cace_all(const Model& model, const TensorData& data, const ConceptSchema& schema,
                                int target_class);
std::string cace_to_json(const std::vector<CaceEntry>& entries, const ConceptSchema& schema);

} // namespace licem
