#include "licem/annotate.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "licem/metrics.hpp"

namespace licem {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string normalize_name(const std::string& s) {
    std::string out;
    bool in_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = !out.empty();
            continue;
        }
        if (in_space) {
            out += ' ';
            in_space = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string trim(const std::string& s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

struct ParsedUrl {
    std::string host_port; // scheme://host:port
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint URL must start with http:// : " + url);
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http") {
        throw ConfigError("only http endpoints are supported (got " + scheme + "://)");
    }
    const auto path_begin = url.find('/', scheme_end + 3);
    ParsedUrl out;
    if (path_begin == std::string::npos) {
        out.host_port = url;
        out.path = "/v1/chat/completions";
    } else {
        out.host_port = url.substr(0, path_begin);
        out.path = url.substr(path_begin);
    }
    return out;
}

} // namespace

void PromptTemplate::validate() const {
    if (name.empty()) {
        throw ConfigError("prompt template: name must be non-empty");
    }
    if (placeholder.empty()) {
        throw ConfigError("prompt template '" + name + "': placeholder must be non-empty");
    }
    const auto first = instruction.find(placeholder);
    if (first == std::string::npos) {
        throw ConfigError("prompt template '" + name + "': placeholder " + placeholder + " not found");
    }
    if (instruction.find(placeholder, first + placeholder.size()) != std::string::npos) {
        throw ConfigError("prompt template '" + name + "': placeholder " + placeholder +
                          " occurs more than once");
    }
    if (concepts.empty()) {
        throw ConfigError("prompt template '" + name + "': concept list is empty");
    }
}

PromptTemplate PromptTemplate::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open prompt template: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("prompt template " + path + ": " + e.what());
    }
    PromptTemplate t;
    try {
        t.name = j.at("name").get<std::string>();
        t.instruction = j.at("instruction").get<std::string>();
        t.placeholder = j.at("placeholder").get<std::string>();
        for (const auto& c : j.at("concepts")) {
            t.concepts.push_back(c.get<std::string>());
        }
        if (j.contains("examples")) {
            for (const auto& ex : j["examples"]) {
                Example e;
                e.text = ex.at("text").get<std::string>();
                e.answer = ex.at("answer").get<std::string>();
                for (const auto& v : ex.at("expected")) {
                    e.expected.push_back(v.get<int>());
                }
                t.examples.push_back(std::move(e));
            }
        }
    } catch (const json::exception& e) {
        throw ParseError("prompt template " + path + ": " + e.what());
    }
    t.validate();
    return t;
}

std::string build_prompt(const PromptTemplate& tmpl, const std::string& text) {
    tmpl.validate();
    if (text.empty()) {
        throw UsageError("build_prompt: input text is empty");
    }
    std::string out = tmpl.instruction;
    out.replace(out.find(tmpl.placeholder), tmpl.placeholder.size(), text);
    return out;
}

std::vector<int> parse_annotation(const std::string& response, const ConceptSchema& schema) {
    const int m = schema.concept_count();
    std::vector<std::string> keys(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        keys[static_cast<size_t>(j)] = normalize_name(schema.concept_names[static_cast<size_t>(j)]);
    }

    auto fail = [&](const std::string& what) -> void {
        throw ParseError("annotation parse error: " + what + "; raw response: \"" + response + "\"");
    };

    std::vector<int> scores(static_cast<size_t>(m), kUnknownConcept);
    const std::string body = trim(response);
    if (body.empty()) {
        fail("empty response");
    }

    size_t pos = 0;
    while (pos < body.size()) {
        size_t comma = body.find(',', pos);
        if (comma == std::string::npos) {
            comma = body.size();
        }
        const std::string token = trim(body.substr(pos, comma - pos));
        pos = comma + 1;
        if (token.empty()) {
            fail("empty 'Name:score' pair");
        }
        const size_t colon = token.find(':');
        if (colon == std::string::npos) {
            fail("missing ':' in pair \"" + token + "\"");
        }
        const std::string name = normalize_name(token.substr(0, colon));
        const std::string value = trim(token.substr(colon + 1));
        int index = -1;
        for (int j = 0; j < m; ++j) {
            if (keys[static_cast<size_t>(j)] == name) {
                index = j;
                break;
            }
        }
        if (index < 0) {
            fail("unknown concept \"" + token.substr(0, colon) + "\"");
        }
        if (scores[static_cast<size_t>(index)] != kUnknownConcept) {
            fail("duplicate concept \"" + schema.concept_names[static_cast<size_t>(index)] + "\"");
        }
        if (value == "0") {
            scores[static_cast<size_t>(index)] = 0;
        } else if (value == "1") {
            scores[static_cast<size_t>(index)] = 1;
        } else {
            fail("score \"" + value + "\" is not 0 or 1");
        }
    }
    for (int j = 0; j < m; ++j) {
        if (scores[static_cast<size_t>(j)] == kUnknownConcept) {
            fail("missing concept \"" + schema.concept_names[static_cast<size_t>(j)] + "\"");
        }
    }
    return scores;
}

// ----------------------------- client -----------------------------

AnnotationClient::AnnotationClient(ClientConfig config, PromptTemplate tmpl, ConceptSchema schema)
    : config_(std::move(config)), template_(std::move(tmpl)), schema_(std::move(schema)) {
    if (config_.temperature != 0.0) {
        throw ConfigError("annotation client: temperature is fixed to 0 for deterministic outputs");
    }
    template_.validate();
    schema_.validate();
    if (static_cast<int>(template_.concepts.size()) != schema_.concept_count()) {
        throw ConfigError("annotation client: template lists " + std::to_string(template_.concepts.size()) +
                          " concepts, schema has " + std::to_string(schema_.concept_count()));
    }
    for (int j = 0; j < schema_.concept_count(); ++j) {
        if (normalize_name(template_.concepts[static_cast<size_t>(j)]) !=
            normalize_name(schema_.concept_names[static_cast<size_t>(j)])) {
            throw ConfigError("annotation client: template concept order differs from schema at index " +
                              std::to_string(j));
        }
    }
    load_cache();
}

AnnotationClient::~AnnotationClient() = default;

std::string AnnotationClient::cache_key(const std::string& text) const {
    std::uint64_t h = fnv1a(template_.instruction);
    h = fnv1a("\x1f", h);
    h = fnv1a(config_.model, h);
    h = fnv1a("\x1f", h);
    h = fnv1a(text, h);
    return to_hex(h);
}

void AnnotationClient::load_cache() {
    if (config_.cache_path.empty()) {
        return;
    }
    std::ifstream in(config_.cache_path);
    if (!in) {
        return; // nothing cached yet
    }
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
            throw ParseError("annotation cache " + config_.cache_path + ":" + std::to_string(lineno) +
                             ": " + e.what());
        }
        CacheEntry entry;
        entry.raw_response = j.at("raw").get<std::string>();
        for (const auto& v : j.at("scores")) {
            entry.scores.push_back(v.get<int>());
        }
        cache_[j.at("key").get<std::string>()] = std::move(entry);
    }
}

void AnnotationClient::append_cache(const std::string& key, const std::string& sample_id,
                                    const CacheEntry& entry) {
    if (config_.cache_path.empty()) {
        return;
    }
    ordered_json j;
    j["key"] = key;
    j["id"] = sample_id;
    j["template"] = template_.name;
    j["model"] = config_.model;
    j["endpoint"] = config_.endpoint;
    j["raw"] = entry.raw_response;
    j["scores"] = entry.scores;
    std::ofstream out(config_.cache_path, std::ios::app | std::ios::binary);
    if (!out) {
        throw IoError("cannot append to annotation cache: " + config_.cache_path);
    }
    out << j.dump() << "\n";
}

std::optional<AnnotationClient::CacheEntry> AnnotationClient::query(const std::string& prompt) {
    const ParsedUrl url = parse_url(config_.endpoint);
    ordered_json payload;
    payload["model"] = config_.model;
    payload["messages"] = ordered_json::array({ordered_json{{"role", "user"}, {"content", prompt}}});
    payload["temperature"] = 0;
    const std::string body = payload.dump();

    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms * attempt));
        }
        httplib::Client http(url.host_port);
        http.set_connection_timeout(config_.timeout_s, 0);
        http.set_read_timeout(config_.timeout_s, 0);
        requests_.fetch_add(1);
        httplib::Result res = http.Post(url.path, body, "application/json");
        if (!res || res->status >= 500) {
            continue; // transport failure or server error: retry
        }
        if (res->status != 200) {
            // 4xx is not going to improve with retries
            throw IoError("annotation endpoint returned HTTP " + std::to_string(res->status) + ": " +
                          res->body.substr(0, 256));
        }
        CacheEntry entry;
        try {
            const json reply = json::parse(res->body);
            entry.raw_response = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw IoError(std::string("annotation endpoint returned malformed JSON: ") + e.what());
        }
        try {
            entry.scores = parse_annotation(entry.raw_response, schema_);
        } catch (const ParseError&) {
            if (attempt < config_.max_retries) {
                continue; // ask again, then give up and record unknown
            }
            entry.scores.assign(static_cast<size_t>(schema_.concept_count()), kUnknownConcept);
        }
        return entry;
    }
    return std::nullopt; // unreachable endpoint
}

AnnotationRecord AnnotationClient::annotate_one(const Sample& sample) {
    if (!sample.text || sample.text->empty()) {
        throw ConfigError("annotate: sample '" + sample.id + "' has no text");
    }
    const std::string key = cache_key(*sample.text);
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            return AnnotationRecord{sample.id, template_.name, it->second.raw_response,
                                    it->second.scores, config_.endpoint, true};
        }
    }
    std::optional<CacheEntry> entry = query(build_prompt(template_, *sample.text));
    if (!entry) {
        throw IoError("annotation endpoint unreachable for id '" + sample.id + "'");
    }
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto [it, inserted] = cache_.emplace(key, *entry);
        if (inserted) {
            append_cache(key, sample.id, *entry);
        }
    }
    return AnnotationRecord{sample.id, template_.name, entry->raw_response, entry->scores,
                            config_.endpoint, false};
}

AnnotationReport AnnotationClient::annotate_dataset(const Dataset& dataset, const std::string& out_path) {
    AnnotationReport report;
    report.total = static_cast<int>(dataset.samples.size());

    std::vector<std::optional<AnnotationRecord>> results(dataset.samples.size());
    std::vector<std::string> unreachable;
    std::mutex state_mutex;
    std::atomic<size_t> cursor{0};
    std::exception_ptr fault;

    auto worker = [&]() {
        for (;;) {
            const size_t i = cursor.fetch_add(1);
            if (i >= dataset.samples.size()) {
                return;
            }
            try {
                AnnotationRecord record = annotate_one(dataset.samples[i]);
                std::lock_guard<std::mutex> lock(state_mutex);
                results[i] = std::move(record);
            } catch (const IoError&) {
                std::lock_guard<std::mutex> lock(state_mutex);
                unreachable.push_back(dataset.samples[i].id);
            } catch (...) {
                std::lock_guard<std::mutex> lock(state_mutex);
                if (!fault) {
                    fault = std::current_exception();
                }
                return;
            }
        }
    };

    const int threads = std::max(1, config_.concurrency);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(threads));
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    if (fault) {
        std::rethrow_exception(fault);
    }

    ConceptFile out;
    for (size_t i = 0; i < results.size(); ++i) {
        if (!results[i]) {
            continue;
        }
        const AnnotationRecord& r = *results[i];
        if (r.from_cache) {
            ++report.cache_hits;
        }
        const bool known = std::none_of(r.scores.begin(), r.scores.end(),
                                        [](int v) { return v == kUnknownConcept; });
        if (known) {
            ++report.annotated;
        } else {
            ++report.unknown;
        }
        out.entries.emplace_back(r.sample_id, r.scores);
    }
    save_concept_file(out, out_path);
    report.requests = request_count();

    if (!unreachable.empty()) {
        std::sort(unreachable.begin(), unreachable.end());
        std::string ids;
        for (const std::string& id : unreachable) {
            if (!ids.empty()) {
                ids += ", ";
            }
            ids += id;
        }
        throw IoError("annotation endpoint unreachable; partial results written to " + out_path +
                      "; missing ids: " + ids);
    }
    return report;
}

double agreement(const std::string& concept_file_path, const Dataset& dataset) {
    const ConceptFile file = load_concept_file(concept_file_path, dataset.schema);
    const int m = dataset.schema.concept_count();
    std::vector<double> pred_rows;
    std::vector<double> gold_rows;
    for (const auto& [id, scores] : file.entries) {
        const Sample* sample = dataset.find(id);
        if (sample == nullptr || !sample->has_concepts()) {
            continue;
        }
        for (int j = 0; j < m; ++j) {
            pred_rows.push_back(static_cast<double>(scores[static_cast<size_t>(j)]));
            gold_rows.push_back(static_cast<double>(sample->concepts[static_cast<size_t>(j)]));
        }
    }
    if (pred_rows.empty()) {
        throw ConfigError("agreement: no overlapping ids with gold concept labels");
    }
    const int rows = static_cast<int>(pred_rows.size()) / m;
    Matrix pred(rows, m, std::move(pred_rows));
    Matrix gold(rows, m, std::move(gold_rows));
    // unknown annotation entries (-1) never count as active predictions
    return macro_f1(pred, gold);
}

EmbeddingStore fetch_embeddings(const std::string& endpoint, const std::string& model,
                                const Dataset& dataset, int timeout_s) {
    const ParsedUrl url = parse_url(endpoint);
    httplib::Client http(url.host_port);
    http.set_connection_timeout(timeout_s, 0);
    http.set_read_timeout(timeout_s, 0);

    EmbeddingStore store;
    constexpr size_t kBatch = 64;
    std::vector<const Sample*> pending;
    for (const Sample& s : dataset.samples) {
        if (!s.text || s.text->empty()) {
            throw ConfigError("fetch_embeddings: sample '" + s.id + "' has no text");
        }
        pending.push_back(&s);
    }
    for (size_t start = 0; start < pending.size(); start += kBatch) {
        const size_t stop = std::min(pending.size(), start + kBatch);
        ordered_json payload;
        payload["model"] = model;
        payload["input"] = ordered_json::array();
        for (size_t i = start; i < stop; ++i) {
            payload["input"].push_back(*pending[i]->text);
        }
        httplib::Result res = http.Post(url.path, payload.dump(), "application/json");
        if (!res || res->status != 200) {
            throw IoError("embeddings endpoint failed at batch starting " + std::to_string(start) +
                          (res ? " (HTTP " + std::to_string(res->status) + ")" : " (no response)"));
        }
        json reply;
        std::vector<std::vector<double>> vectors(stop - start);
        try {
            reply = json::parse(res->body);
            for (const auto& item : reply.at("data")) {
                const size_t index = item.at("index").get<size_t>();
                if (index >= vectors.size()) {
                    throw IoError("embeddings endpoint returned an out-of-range index");
                }
                vectors[index] = item.at("embedding").get<std::vector<double>>();
            }
        } catch (const json::exception& e) {
            throw IoError(std::string("embeddings endpoint returned malformed JSON: ") + e.what());
        }
        for (size_t i = start; i < stop; ++i) {
            store.put(pending[i]->id, vectors[i - start]);
        }
    }
    if (store.size() > 0) {
        EmbeddingStore tagged(store.dim(), endpoint + " model=" + model);
        for (const std::string& id : store.ids()) {
            tagged.put(id, store.get(id));
        }
        return tagged;
    }
    return store;
}

} // namespace licem
