#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "licem/common.hpp"

namespace licem {

enum class TaskKind { binary, multiclass };

// Concept and class vocabulary for a classification problem. Binary tasks
// (exactly two classes, index 1 positive) get a single-logit sigmoid head
// downstream; anything wider gets softmax.
struct ConceptSchema {
    std::vector<std::string> concept_names;
    std::vector<std::string> class_names;

    int concept_count() const { return static_cast<int>(concept_names.size()); }
    int class_count() const { return static_cast<int>(class_names.size()); }
    TaskKind task_kind() const { return class_count() == 2 ? TaskKind::binary : TaskKind::multiclass; }

    void validate() const;

    // Stable content hash used to bind checkpoints and annotation files
    // to the schema they were produced under.
    std::uint64_t hash() const;

    static ConceptSchema load(const std::string& path);
    void save(const std::string& path) const;
    std::string to_json() const;
    static ConceptSchema from_json(const std::string& text);
};

} // namespace licem
