#include "licem/schema.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace licem {

void ConceptSchema::validate() const {
    if (concept_names.empty()) {
        throw ConfigError("schema: at least one concept is required");
    }
    if (class_names.size() < 2) {
        throw ConfigError("schema: at least two classes are required");
    }
    std::unordered_set<std::string> seen;
    for (const auto& n : concept_names) {
        if (n.empty()) {
            throw ConfigError("schema: empty concept name");
        }
        if (!seen.insert(n).second) {
            throw ConfigError("schema: duplicate concept name '" + n + "'");
        }
    }
    seen.clear();
    for (const auto& n : class_names) {
        if (n.empty()) {
            throw ConfigError("schema: empty class name");
        }
        if (!seen.insert(n).second) {
            throw ConfigError("schema: duplicate class name '" + n + "'");
        }
    }
}

std::uint64_t ConceptSchema::hash() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& n : concept_names) {
        h = fnv1a(n, h);
        h = fnv1a("\x1f", h);
    }
    h = fnv1a("\x1e", h);
    for (const auto& n : class_names) {
        h = fnv1a(n, h);
        h = fnv1a("\x1f", h);
    }
    return h;
}

std::string ConceptSchema::to_json() const {
    nlohmann::ordered_json j;
    j["concepts"] = concept_names;
    j["classes"] = class_names;
    return j.dump();
}

ConceptSchema ConceptSchema::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("schema: invalid JSON: ") + e.what());
    }
    if (!j.contains("concepts") || !j["concepts"].is_array()) {
        throw ParseError("schema: missing 'concepts' array");
    }
    if (!j.contains("classes") || !j["classes"].is_array()) {
        throw ParseError("schema: missing 'classes' array");
    }
    ConceptSchema s;
    for (const auto& v : j["concepts"]) {
        if (!v.is_string()) {
            throw ParseError("schema: concept names must be strings");
        }
        s.concept_names.push_back(v.get<std::string>());
    }
    for (const auto& v : j["classes"]) {
        if (!v.is_string()) {
            throw ParseError("schema: class names must be strings");
        }
        s.class_names.push_back(v.get<std::string>());
    }
    s.validate();
    return s;
}

ConceptSchema ConceptSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open schema file: " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

void ConceptSchema::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write schema file: " + path);
    }
    out << to_json() << "\n";
}

} // namespace licem
