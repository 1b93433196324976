#include "licem/cace.hpp"

#include <cmath>

#include <json.hpp>

namespace licem {

CaceEntry cace(const Model& model, const TensorData& data, int concept_index, int target_class) {
    const ModelConfig& cfg = model.config();
    if (!supports_injection(cfg.kind)) {
        throw UsageError("cace: model does not expose concepts for do-interventions");
    }
    if (concept_index < 0 || concept_index >= cfg.concept_count) {
        throw UsageError("cace: concept index out of range");
    }
    if (target_class < 0 || target_class >= cfg.class_count) {
        throw UsageError("cace: target class out of range");
    }
    Batch batch = data.all();
    const int n = batch.size();

    auto forced = [&](double value) {
        Matrix mask(n, cfg.concept_count);
        Matrix values(n, cfg.concept_count);
        for (int i = 0; i < n; ++i) {
            mask.at(i, concept_index) = 1.0;
            values.at(i, concept_index) = value;
        }
        Model::ForwardOptions options;
        if (batch.has_injected()) {
            options.injected = &batch.injected_scores;
        }
        options.override_mask = &mask;
        options.override_values = &values;
        return model.infer(batch.embeddings, options);
    };

    Model::Output on = forced(1.0);
    Model::Output off = forced(0.0);

    CaceEntry entry;
    entry.concept_index = concept_index;
    entry.target_class = target_class;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = model.class_probability(on, i, target_class) -
                         model.class_probability(off, i, target_class);
        sum += d;
        sum_sq += d * d;
    }
    entry.effect = sum / n;
    const double var = sum_sq / n - entry.effect * entry.effect;
    entry.stddev = var > 0.0 ? std::sqrt(var) : 0.0;
    return entry;
}

std::vector<CaceEntry> cace_all(const Model& model, const TensorData& data, const ConceptSchema& schema,
                                int target_class) {
    std::vector<CaceEntry> out;
    for (int j = 0; j < schema.concept_count(); ++j) {
        CaceEntry e = cace(model, data, j, target_class);
        e.concept_name = schema.concept_names[static_cast<size_t>(j)];
        out.push_back(std::move(e));
    }
    return out;
}

std::string cace_to_json(const std::vector<CaceEntry>& entries, const ConceptSchema& schema) {
    nlohmann::ordered_json j;
    j["concepts"] = nlohmann::ordered_json::array();
    for (const CaceEntry& e : entries) {
        nlohmann::ordered_json item;
        item["concept"] = e.concept_name.empty()
                              ? schema.concept_names[static_cast<size_t>(e.concept_index)]
                              : e.concept_name;
        item["target_class"] = schema.class_names[static_cast<size_t>(e.target_class)];
        item["effect"] = e.effect;
        item["stddev"] = e.stddev;
        j["concepts"].push_back(item);
    }
    return j.dump(2) + "\n";
}

} // namespace licem
