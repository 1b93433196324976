#include "licem/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace licem {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void ingest_fail(const std::string& path, size_t line, const std::string& what) {
    std::ostringstream os;
    os << path << ":" << line << ": " << what;
    throw ParseError(os.str());
}

std::vector<int> parse_concepts(const json& arr, int m, const std::string& path, size_t line,
                                const std::string& id) {
    if (!arr.is_array()) {
        ingest_fail(path, line, "field 'concepts' of record '" + id + "' must be an array");
    }
    if (static_cast<int>(arr.size()) != m) {
        ingest_fail(path, line,
                    "record '" + id + "' has " + std::to_string(arr.size()) + " concepts, schema expects " +
                        std::to_string(m));
    }
    std::vector<int> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number_integer()) {
            ingest_fail(path, line, "record '" + id + "': concept entries must be integers");
        }
        const int c = v.get<int>();
        if (c != 0 && c != 1 && c != kUnknownConcept) {
            ingest_fail(path, line, "record '" + id + "': concept value " + std::to_string(c) +
                                        " not in {0,1,-1}");
        }
        out.push_back(c);
    }
    return out;
}

Sample parse_sample(const std::string& text_line, const ConceptSchema& schema, const std::string& path,
                    size_t line) {
    json j;
    try {
        j = json::parse(text_line);
    } catch (const json::exception& e) {
        ingest_fail(path, line, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        ingest_fail(path, line, "record must be a JSON object");
    }
    Sample s;
    if (!j.contains("id") || !j["id"].is_string()) {
        ingest_fail(path, line, "field 'id' missing or not a string");
    }
    s.id = j["id"].get<std::string>();
    if (s.id.empty()) {
        ingest_fail(path, line, "field 'id' must be non-empty");
    }
    if (j.contains("text")) {
        if (!j["text"].is_string()) {
            ingest_fail(path, line, "field 'text' of record '" + s.id + "' must be a string");
        }
        s.text = j["text"].get<std::string>();
    }
    if (!j.contains("label") || !j["label"].is_number_integer()) {
        ingest_fail(path, line, "field 'label' of record '" + s.id + "' missing or not an integer");
    }
    s.label = j["label"].get<int>();
    if (s.label < 0 || s.label >= schema.class_count()) {
        ingest_fail(path, line, "field 'label' of record '" + s.id + "' out of range [0," +
                                    std::to_string(schema.class_count()) + ")");
    }
    if (j.contains("concepts") && !j["concepts"].is_null()) {
        s.concepts = parse_concepts(j["concepts"], schema.concept_count(), path, line, s.id);
    }
    return s;
}

} // namespace

const Sample* Dataset::find(const std::string& id) const {
    for (const Sample& s : samples) {
        if (s.id == id) {
            return &s;
        }
    }
    return nullptr;
}

Dataset load_dataset_with_schema(const std::string& dataset_path, const ConceptSchema& schema) {
    std::ifstream in(dataset_path);
    if (!in) {
        throw IoError("cannot open dataset file: " + dataset_path);
    }
    Dataset ds;
    ds.schema = schema;
    std::unordered_set<std::string> seen;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        Sample s = parse_sample(line, schema, dataset_path, lineno);
        if (!seen.insert(s.id).second) {
            ingest_fail(dataset_path, lineno, "duplicate id '" + s.id + "'");
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset load_dataset(const std::string& dataset_path, const std::string& schema_path) {
    return load_dataset_with_schema(dataset_path, ConceptSchema::load(schema_path));
}

std::string dataset_to_jsonl(const Dataset& dataset) {
    std::ostringstream os;
    for (const Sample& s : dataset.samples) {
        ordered_json j;
        j["id"] = s.id;
        if (s.text) {
            j["text"] = *s.text;
        }
        j["label"] = s.label;
        if (s.has_concepts()) {
            j["concepts"] = s.concepts;
        }
        os << j.dump() << "\n";
    }
    return os.str();
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write dataset file: " + path);
    }
    out << dataset_to_jsonl(dataset);
}

ConceptFile load_concept_file(const std::string& path, const ConceptSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open concept file: " + path);
    }
    ConceptFile file;
    std::unordered_set<std::string> seen;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            ingest_fail(path, lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!j.contains("id") || !j["id"].is_string()) {
            ingest_fail(path, lineno, "field 'id' missing or not a string");
        }
        const std::string id = j["id"].get<std::string>();
        if (!seen.insert(id).second) {
            ingest_fail(path, lineno, "duplicate id '" + id + "'");
        }
        if (!j.contains("concepts")) {
            ingest_fail(path, lineno, "field 'concepts' missing for record '" + id + "'");
        }
        file.entries.emplace_back(id, parse_concepts(j["concepts"], schema.concept_count(), path, lineno, id));
    }
    return file;
}

void save_concept_file(const ConceptFile& file, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write concept file: " + path);
    }
    for (const auto& [id, concepts] : file.entries) {
        ordered_json j;
        j["id"] = id;
        j["concepts"] = concepts;
        out << j.dump() << "\n";
    }
}

Dataset apply_concepts(const Dataset& dataset, const ConceptFile& overlay) {
    std::unordered_map<std::string, const std::vector<int>*> by_id;
    for (const auto& [id, concepts] : overlay.entries) {
        by_id[id] = &concepts;
    }
    Dataset out = dataset;
    for (Sample& s : out.samples) {
        auto it = by_id.find(s.id);
        if (it != by_id.end()) {
            s.concepts = *it->second;
        }
    }
    return out;
}

} // namespace licem
