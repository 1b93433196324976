#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "licem/dataset.hpp"
#include "licem/embedding.hpp"

namespace licem {

// Instruction template for LLM concept annotation: fixed text with exactly
// one placeholder for the input, the ordered concept names it asks about,
// and the worked examples it ships with.
struct PromptTemplate {
    std::string name;
    std::string instruction; // contains `placeholder` exactly once
    std::string placeholder; // e.g. "<review>"
    std::vector<std::string> concepts;

    struct Example {
        std::string text;
        std::string answer;
        std::vector<int> expected;
    };
    std::vector<Example> examples;

    void validate() const;
    static PromptTemplate load(const std::string& path);
};

// Placeholder substitution; the rest of the template is emitted byte-for-byte.
std::string build_prompt(const PromptTemplate& tmpl, const std::string& text);

// Case-insensitive, whitespace-tolerant parse of "Name:score" pairs in any
// order. Every schema concept must appear exactly once with a score of 0 or
// 1; anything else raises ParseError carrying the raw response.
std::vector<int> parse_annotation(const std::string& response, const ConceptSchema& schema);

struct AnnotationRecord {
    std::string sample_id;
    std::string template_name;
    std::string raw_response;
    std::vector<int> scores; // length m, entries {0,1} or -1 when unparseable
    std::string endpoint;
    bool from_cache = false;
};

struct ClientConfig {
    std::string endpoint;  // http://host:port/path of a chat-completions API
    std::string model;
    double temperature = 0.0; // fixed; nonzero configs are rejected
    int max_retries = 3;
    int backoff_ms = 200;
    int timeout_s = 30;
    int concurrency = 1;
    std::string cache_path; // empty disables the on-disk cache
};

struct AnnotationReport {
    int total = 0;
    int annotated = 0;
    int unknown = 0;     // parse failures after retries
    int cache_hits = 0;
    long long requests = 0;
};

// Deterministic annotation client: temperature-0 requests, per-(template,
// model, text) caching, bounded concurrency, results merged in dataset order.
class AnnotationClient {
public:
    AnnotationClient(ClientConfig config, PromptTemplate tmpl, ConceptSchema schema);
    ~AnnotationClient();

    AnnotationRecord annotate_one(const Sample& sample);
    // Writes the concept file to out_path; throws IoError listing missing ids
    // when the endpoint is unreachable and the cache cannot cover them.
    AnnotationReport annotate_dataset(const Dataset& dataset, const std::string& out_path);

    long long request_count() const { return requests_.load(); }

private:
    struct CacheEntry {
        std::string raw_response;
        std::vector<int> scores;
    };

    std::string cache_key(const std::string& text) const;
    void load_cache();
    void append_cache(const std::string& key, const std::string& sample_id, const CacheEntry& entry);
    // One annotation attempt loop; returns nullopt on transport failure.
    std::optional<CacheEntry> query(const std::string& prompt);

    ClientConfig config_;
    PromptTemplate template_;
    ConceptSchema schema_;
    std::map<std::string, CacheEntry> cache_;
    std::mutex cache_mutex_;
    std::atomic<long long> requests_{0};
};

// Macro F1 of an annotation file against the gold concept labels of a dataset.
double agreement(const std::string& concept_file_path, const Dataset& dataset);

// Optional embeddings-endpoint fetch (OpenAI-style /v1/embeddings). Texts are
// sent in dataset order; the returned store carries the endpoint as provenance.
EmbeddingStore fetch_embeddings(const std::string& endpoint, const std::string& model,
                                const Dataset& dataset, int timeout_s = 60);

} // namespace licem
