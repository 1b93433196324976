#pragma once

#include <optional>
#include <string>
#include <vector>

#include "licem/schema.hpp"

namespace licem {

inline constexpr int kUnknownConcept = -1;

struct Sample {
    std::string id;
    std::optional<std::string> text;
    int label = 0;
    // Length m when present; entries in {0, 1, kUnknownConcept}.
    std::vector<int> concepts;

    bool has_concepts() const { return !concepts.empty(); }
};

struct Dataset {
    ConceptSchema schema;
    std::vector<Sample> samples;

    size_t size() const { return samples.size(); }
    const Sample* find(const std::string& id) const;
};

// One JSON object per line: {"id", "text"?, "label", "concepts"?}.
// Concepts use -1 for unknown. Errors carry the offending field and line.
Dataset load_dataset(const std::string& dataset_path, const std::string& schema_path);
Dataset load_dataset_with_schema(const std::string& dataset_path, const ConceptSchema& schema);
void save_dataset(const Dataset& dataset, const std::string& path);
std::string dataset_to_jsonl(const Dataset& dataset);

// Annotation files are dataset-shaped JSONL restricted to {"id","concepts"}.
// Loading one against a dataset replaces (or fills) the concept labels of the
// listed ids and leaves everything else untouched.
struct ConceptFile {
    std::vector<std::pair<std::string, std::vector<int>>> entries;
};
ConceptFile load_concept_file(const std::string& path, const ConceptSchema& schema);
void save_concept_file(const ConceptFile& file, const std::string& path);
Dataset apply_concepts(const Dataset& dataset, const ConceptFile& overlay);

} // namespace licem
