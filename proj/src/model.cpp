#include "licem/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace licem {

std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::e2e: return "e2e";
    case ModelKind::cbm_ll: return "cbm-ll";
    case ModelKind::cbm_mlp: return "cbm-mlp";
    case ModelKind::cem: return "cem";
    case ModelKind::licem: return "licem";
    case ModelKind::self_cbm_ll: return "self-cbm-ll";
    case ModelKind::self_cbm_mlp: return "self-cbm-mlp";
    case ModelKind::self_cem: return "self-cem";
    case ModelKind::self_licem: return "self-licem";
    }
    throw UsageError("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& name) {
    static const std::pair<const char*, ModelKind> table[] = {
        {"e2e", ModelKind::e2e},
        {"cbm-ll", ModelKind::cbm_ll},
        {"cbm-mlp", ModelKind::cbm_mlp},
        {"cem", ModelKind::cem},
        {"licem", ModelKind::licem},
        {"self-cbm-ll", ModelKind::self_cbm_ll},
        {"self-cbm-mlp", ModelKind::self_cbm_mlp},
        {"self-cem", ModelKind::self_cem},
        {"self-licem", ModelKind::self_licem},
    };
    for (const auto& [n, k] : table) {
        if (name == n) {
            return k;
        }
    }
    throw UsageError("unknown model kind '" + name +
                     "' (expected one of e2e, cbm-ll, cbm-mlp, cem, licem, self-cbm-ll, self-cbm-mlp, "
                     "self-cem, self-licem)");
}

bool is_self_kind(ModelKind kind) {
    return kind == ModelKind::self_cbm_ll || kind == ModelKind::self_cbm_mlp ||
           kind == ModelKind::self_cem || kind == ModelKind::self_licem;
}

bool is_cem_family(ModelKind kind) {
    return kind == ModelKind::cem || kind == ModelKind::licem || kind == ModelKind::self_cem ||
           kind == ModelKind::self_licem;
}

bool has_internal_concepts(ModelKind kind) {
    return kind == ModelKind::cbm_ll || kind == ModelKind::cbm_mlp || kind == ModelKind::cem ||
           kind == ModelKind::licem;
}

bool supports_injection(ModelKind kind) {
    return kind != ModelKind::e2e;
}

void ModelConfig::validate() const {
    if (embed_dim <= 0) {
        throw ConfigError("model: embed_dim must be positive");
    }
    if (class_count < 2) {
        throw ConfigError("model: class_count must be at least 2");
    }
    if (kind != ModelKind::e2e && concept_count <= 0) {
        throw ConfigError("model: concept_count must be positive for concept models");
    }
    if (is_cem_family(kind) && concept_embed_dim <= 0) {
        throw ConfigError("model: concept_embed_dim must be positive");
    }
}

namespace {

constexpr int kE2eHidden = 100;
constexpr int kConceptHidden = 10; // hidden width of concept predictor, CEM head, rho and beta
constexpr int kCbmMlpFactor = 3;   // CBM+MLP hidden width = 3 * concept_count

std::string rho_prefix(const ModelConfig& cfg, int j) {
    if (cfg.per_concept_rho) {
        return "rho." + std::to_string(j);
    }
    return "rho";
}

} // namespace

void Model::add_linear(const std::string& prefix, int in, int out, Rng& rng) {
    params_.items.push_back({prefix + ".W", Matrix::random_normal(in, out, rng, 1.0 / std::sqrt(in)), false});
    params_.items.push_back({prefix + ".b", Matrix(1, out), true});
}

Model::Model(const ModelConfig& config, Rng& rng) : config_(config) {
    config_.validate();
    const int b = config_.embed_dim;
    const int m = config_.concept_count;
    const int k = config_.concept_embed_dim;
    const int h = config_.head_width();

    switch (config_.kind) {
    case ModelKind::e2e:
        add_linear("e2e.l1", b, kE2eHidden, rng);
        add_linear("e2e.l2", kE2eHidden, h, rng);
        break;
    case ModelKind::cbm_ll:
    case ModelKind::cbm_mlp:
        add_linear("concept.l1", b, kConceptHidden, rng);
        add_linear("concept.l2", kConceptHidden, m, rng);
        [[fallthrough]];
    case ModelKind::self_cbm_ll:
    case ModelKind::self_cbm_mlp:
        if (config_.kind == ModelKind::cbm_ll || config_.kind == ModelKind::self_cbm_ll) {
            add_linear("head", m, h, rng);
        } else {
            add_linear("head.l1", m, kCbmMlpFactor * m, rng);
            add_linear("head.l2", kCbmMlpFactor * m, h, rng);
        }
        break;
    case ModelKind::cem:
    case ModelKind::licem:
    case ModelKind::self_cem:
    case ModelKind::self_licem:
        for (int j = 0; j < m; ++j) {
            add_linear("gen." + std::to_string(j) + ".pos", b, k, rng);
            add_linear("gen." + std::to_string(j) + ".neg", b, k, rng);
        }
        if (has_internal_concepts(config_.kind)) {
            add_linear("scorer", 2 * k, 1, rng);
        }
        if (config_.kind == ModelKind::cem || config_.kind == ModelKind::self_cem) {
            add_linear("head.l1", m * k, kConceptHidden, rng);
            add_linear("head.l2", kConceptHidden, h, rng);
        } else {
            if (config_.per_concept_rho) {
                for (int j = 0; j < m; ++j) {
                    add_linear(rho_prefix(config_, j) + ".l1", k, kConceptHidden, rng);
                    add_linear(rho_prefix(config_, j) + ".l2", kConceptHidden, h, rng);
                }
            } else {
                add_linear("rho.l1", k, kConceptHidden, rng);
                add_linear("rho.l2", kConceptHidden, h, rng);
            }
            if (config_.use_bias) {
                add_linear("beta.l1", m * k, kConceptHidden, rng);
                add_linear("beta.l2", kConceptHidden, h, rng);
            }
        }
        break;
    }
}

std::vector<Var> Model::register_params(Tape& tape) const {
    std::vector<Var> vars;
    vars.reserve(params_.items.size());
    for (const Param& p : params_.items) {
        vars.push_back(tape.leaf(p.value));
    }
    return vars;
}

namespace {

// Resolves parameter Vars by name against the store ordering.
struct ParamLookup {
    const ParamStore& store;
    const std::vector<Var>& vars;

    Var operator()(const std::string& name) const {
        const int i = store.index_of(name);
        if (i < 0) {
            throw UsageError("forward: missing parameter " + name);
        }
        return vars[static_cast<size_t>(i)];
    }
};

Var mlp2(Var x, const ParamLookup& p, const std::string& prefix) {
    Var hidden = relu(linear(x, p(prefix + ".l1.W"), p(prefix + ".l1.b")));
    return linear(hidden, p(prefix + ".l2.W"), p(prefix + ".l2.b"));
}

} // namespace

Model::Graph Model::forward(Tape& tape, const std::vector<Var>& param_vars, Var embeddings,
                            const ForwardOptions& options) const {
    if (param_vars.size() != params_.items.size()) {
        throw UsageError("forward: parameter vars out of sync with the store");
    }
    const ParamLookup p{params_, param_vars};
    const int batch = embeddings.rows();
    if (embeddings.cols() != config_.embed_dim) {
        throw DimError("forward: embedding width " + std::to_string(embeddings.cols()) +
                       " does not match model embed_dim " + std::to_string(config_.embed_dim));
    }
    const int m = config_.concept_count;
    const int h = config_.head_width();

    Graph g;
    if (config_.kind == ModelKind::e2e) {
        g.task_logits = mlp2(embeddings, p, "e2e");
        return g;
    }
    g.has_concepts = true;

    if (options.injected != nullptr) {
        if (options.injected->rows != batch || options.injected->cols != m) {
            throw DimError("forward: injected scores must be " + std::to_string(batch) + "x" +
                           std::to_string(m));
        }
    } else if (is_self_kind(config_.kind)) {
        throw UsageError("forward: " + to_string(config_.kind) + " requires injected concept scores");
    }
    if ((options.override_mask == nullptr) != (options.override_values == nullptr)) {
        throw UsageError("forward: override mask and values must come together");
    }
    if (options.override_mask != nullptr &&
        (options.override_mask->rows != batch || options.override_mask->cols != m ||
         options.override_values->rows != batch || options.override_values->cols != m)) {
        throw DimError("forward: override matrices must be batch x concept_count");
    }

    const bool cem_like = is_cem_family(config_.kind);

    // Concept scores per concept as B x 1 columns feeding the task path.
    std::vector<Var> score_cols(static_cast<size_t>(m));
    std::vector<Var> pos_embed, neg_embed;

    if (cem_like) {
        pos_embed.reserve(static_cast<size_t>(m));
        neg_embed.reserve(static_cast<size_t>(m));
        for (int j = 0; j < m; ++j) {
            const std::string gp = "gen." + std::to_string(j);
            pos_embed.push_back(linear(embeddings, p(gp + ".pos.W"), p(gp + ".pos.b")));
            neg_embed.push_back(linear(embeddings, p(gp + ".neg.W"), p(gp + ".neg.b")));
        }
    }

    if (has_internal_concepts(config_.kind)) {
        if (cem_like) {
            std::vector<Var> logit_cols(static_cast<size_t>(m));
            for (int j = 0; j < m; ++j) {
                Var pair = concat_cols({pos_embed[static_cast<size_t>(j)], neg_embed[static_cast<size_t>(j)]});
                logit_cols[static_cast<size_t>(j)] = linear(pair, p("scorer.W"), p("scorer.b"));
            }
            g.concept_logits = concat_cols(logit_cols);
        } else {
            g.concept_logits = mlp2(embeddings, p, "concept");
        }
        g.concept_scores_raw = sigmoid(*g.concept_logits);
    }

    // Task-path scores: injected constants win, otherwise internal predictions.
    Var scores;
    if (options.injected != nullptr) {
        scores = tape.constant(*options.injected);
    } else {
        scores = *g.concept_scores_raw;
    }
    if (options.override_mask != nullptr) {
        // scores*(1-mask) + values*mask with mask and values as constants,
        // so replaced coordinates are constants in the backward pass.
        Var mask = tape.constant(*options.override_mask);
        Var values = tape.constant(*options.override_values);
        Var keep = affine(mask, -1.0, 1.0);
        scores = add(mul(scores, keep), mul(values, mask));
    }
    g.task_scores = scores;

    if (config_.kind == ModelKind::cbm_ll || config_.kind == ModelKind::self_cbm_ll) {
        g.task_logits = linear(scores, p("head.W"), p("head.b"));
        return g;
    }
    if (config_.kind == ModelKind::cbm_mlp || config_.kind == ModelKind::self_cbm_mlp) {
        g.task_logits = mlp2(scores, p, "head");
        return g;
    }

    // CEM mixture: c_j = s_j * c_j+ + (1 - s_j) * c_j-
    std::vector<Var> mixed(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        // slice column j out of the score matrix via a constant selector
        Matrix selector(m, 1);
        selector.at(j, 0) = 1.0;
        Var col = matmul(scores, tape.constant(selector));
        score_cols[static_cast<size_t>(j)] = col;
        Var inv = affine(col, -1.0, 1.0);
        mixed[static_cast<size_t>(j)] = add(mul_colbroadcast(pos_embed[static_cast<size_t>(j)], col),
                                            mul_colbroadcast(neg_embed[static_cast<size_t>(j)], inv));
    }

    if (config_.kind == ModelKind::cem || config_.kind == ModelKind::self_cem) {
        g.task_logits = mlp2(concat_cols(mixed), p, "head");
        return g;
    }

    // LICEM head: per-concept weights from rho, shared bias from beta, then
    // the symbolic linear execution over the concept scores.
    g.weights.resize(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        g.weights[static_cast<size_t>(j)] = mlp2(mixed[static_cast<size_t>(j)], p, rho_prefix(config_, j));
    }
    if (config_.use_bias) {
        g.bias = mlp2(concat_cols(mixed), p, "beta");
    } else {
        g.bias = tape.constant(Matrix(batch, h));
    }
    Var logits = g.bias;
    for (int j = 0; j < m; ++j) {
        logits = add(logits, mul_colbroadcast(g.weights[static_cast<size_t>(j)],
                                              score_cols[static_cast<size_t>(j)]));
    }
    g.task_logits = logits;
    return g;
}

Model::Output Model::infer(const Matrix& embeddings, const ForwardOptions& options) const {
    Tape tape;
    std::vector<Var> vars = register_params(tape);
    Var e = tape.constant(embeddings);
    Graph g = forward(tape, vars, e, options);

    Output out;
    out.task_logits = g.task_logits.value();
    if (g.has_concepts) {
        out.task_scores = g.task_scores.value();
    }
    if (g.concept_scores_raw) {
        out.raw_concept_scores = g.concept_scores_raw->value();
    }
    for (Var w : g.weights) {
        out.weights.push_back(w.value());
    }
    if (g.bias.valid()) {
        out.bias = g.bias.value();
    }

    const int batch = out.task_logits.rows;
    out.probabilities = Matrix(batch, config_.class_count);
    out.predicted.resize(static_cast<size_t>(batch));
    if (config_.binary_head()) {
        for (int i = 0; i < batch; ++i) {
            const double z = out.task_logits.at(i, 0);
            const double p1 = 1.0 / (1.0 + std::exp(-z));
            out.probabilities.at(i, 0) = 1.0 - p1;
            out.probabilities.at(i, 1) = p1;
            out.predicted[static_cast<size_t>(i)] = p1 > 0.5 ? 1 : 0;
        }
    } else {
        out.probabilities = softmax_rows(out.task_logits);
        for (int i = 0; i < batch; ++i) {
            int best = 0;
            for (int j = 1; j < config_.class_count; ++j) {
                if (out.probabilities.at(i, j) > out.probabilities.at(i, best)) {
                    best = j;
                }
            }
            out.predicted[static_cast<size_t>(i)] = best;
        }
    }
    return out;
}

double Model::class_logit(const Output& out, int row, int class_index) const {
    if (class_index < 0 || class_index >= config_.class_count) {
        throw UsageError("class index out of range");
    }
    if (config_.binary_head()) {
        const double z = out.task_logits.at(row, 0);
        return class_index == 1 ? z : -z;
    }
    return out.task_logits.at(row, class_index);
}

double Model::class_probability(const Output& out, int row, int class_index) const {
    if (class_index < 0 || class_index >= config_.class_count) {
        throw UsageError("class index out of range");
    }
    return out.probabilities.at(row, class_index);
}

double Model::class_weight(const Output& out, int row, int class_index, int concept_index) const {
    const Matrix& w = out.weights.at(static_cast<size_t>(concept_index));
    if (config_.binary_head()) {
        const double v = w.at(row, 0);
        return class_index == 1 ? v : -v;
    }
    return w.at(row, class_index);
}

double Model::class_bias(const Output& out, int row, int class_index) const {
    if (out.bias.size() == 0) {
        return 0.0;
    }
    if (config_.binary_head()) {
        const double v = out.bias.at(row, 0);
        return class_index == 1 ? v : -v;
    }
    return out.bias.at(row, class_index);
}

// ----------------------------- checkpoint io -----------------------------

namespace {

constexpr char kCkptMagic[4] = {'L', 'C', 'K', 'P'};
constexpr std::uint32_t kCkptVersion = 1;

template <typename T>
void put(std::string& buf, const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf.append(p, sizeof(T));
}

void put_str(std::string& buf, const std::string& s) {
    put(buf, static_cast<std::uint16_t>(s.size()));
    buf.append(s);
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;
    const std::string& path;

    template <typename T>
    T get() {
        if (pos + sizeof(T) > buf.size()) {
            throw ParseError("checkpoint " + path + ": truncated at byte " + std::to_string(pos));
        }
        T v{};
        std::memcpy(&v, buf.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }

    std::string get_str() {
        const auto len = get<std::uint16_t>();
        if (pos + len > buf.size()) {
            throw ParseError("checkpoint " + path + ": truncated string at byte " + std::to_string(pos));
        }
        std::string s = buf.substr(pos, len);
        pos += len;
        return s;
    }
};

} // namespace

void Model::save(const std::string& path, std::uint64_t schema_hash) const {
    std::string buf;
    buf.append(kCkptMagic, 4);
    put(buf, kCkptVersion);
    put(buf, schema_hash);
    put(buf, static_cast<std::uint8_t>(config_.kind));
    put(buf, static_cast<std::int32_t>(config_.embed_dim));
    put(buf, static_cast<std::int32_t>(config_.concept_count));
    put(buf, static_cast<std::int32_t>(config_.class_count));
    put(buf, static_cast<std::int32_t>(config_.concept_embed_dim));
    put(buf, static_cast<std::uint8_t>(config_.use_bias ? 1 : 0));
    put(buf, static_cast<std::uint8_t>(config_.per_concept_rho ? 1 : 0));
    put(buf, static_cast<std::uint32_t>(params_.items.size()));
    for (const Param& p : params_.items) {
        put_str(buf, p.name);
        put(buf, static_cast<std::uint8_t>(p.is_bias ? 1 : 0));
        put(buf, static_cast<std::int32_t>(p.value.rows));
        put(buf, static_cast<std::int32_t>(p.value.cols));
        buf.append(reinterpret_cast<const char*>(p.value.data.data()),
                   p.value.data.size() * sizeof(double));
    }
    put(buf, fnv1a(buf));
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write checkpoint: " + path);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw IoError("short write to checkpoint: " + path);
    }
}

Model Model::load(const std::string& path, std::optional<std::uint64_t> expected_schema_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint: " + path);
    }
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 4 + sizeof(std::uint32_t) + sizeof(std::uint64_t)) {
        throw ParseError("checkpoint " + path + ": file too short");
    }
    if (std::memcmp(buf.data(), kCkptMagic, 4) != 0) {
        throw ParseError("checkpoint " + path + ": bad magic, expected LCKP");
    }
    const std::string body = buf.substr(0, buf.size() - sizeof(std::uint64_t));
    std::uint64_t stored_sum = 0;
    std::memcpy(&stored_sum, buf.data() + buf.size() - sizeof(std::uint64_t), sizeof(std::uint64_t));
    if (fnv1a(body) != stored_sum) {
        throw ParseError("checkpoint " + path + ": checksum mismatch (corrupt file)");
    }

    Reader r{body, 4, path};
    const auto version = r.get<std::uint32_t>();
    if (version != kCkptVersion) {
        throw ParseError("checkpoint " + path + ": unsupported version " + std::to_string(version));
    }
    const auto schema_hash = r.get<std::uint64_t>();
    if (expected_schema_hash && *expected_schema_hash != schema_hash) {
        throw ConfigError("checkpoint " + path + ": schema hash mismatch (checkpoint " +
                          to_hex(schema_hash) + ", expected " + to_hex(*expected_schema_hash) + ")");
    }

    Model model;
    model.schema_hash_ = schema_hash;
    model.config_.kind = static_cast<ModelKind>(r.get<std::uint8_t>());
    model.config_.embed_dim = r.get<std::int32_t>();
    model.config_.concept_count = r.get<std::int32_t>();
    model.config_.class_count = r.get<std::int32_t>();
    model.config_.concept_embed_dim = r.get<std::int32_t>();
    model.config_.use_bias = r.get<std::uint8_t>() != 0;
    model.config_.per_concept_rho = r.get<std::uint8_t>() != 0;
    model.config_.validate();

    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        Param p;
        p.name = r.get_str();
        p.is_bias = r.get<std::uint8_t>() != 0;
        const int rows = r.get<std::int32_t>();
        const int cols = r.get<std::int32_t>();
        if (rows <= 0 || cols <= 0) {
            throw ParseError("checkpoint " + path + ": bad shape for parameter " + p.name);
        }
        p.value = Matrix(rows, cols);
        const size_t bytes = p.value.data.size() * sizeof(double);
        if (r.pos + bytes > body.size()) {
            throw ParseError("checkpoint " + path + ": truncated data for parameter " + p.name);
        }
        std::memcpy(p.value.data.data(), body.data() + r.pos, bytes);
        r.pos += bytes;
        if (!p.value.all_finite()) {
            throw ParseError("checkpoint " + path + ": non-finite values in parameter " + p.name);
        }
        model.params_.items.push_back(std::move(p));
    }

    // Shape audit against a freshly constructed skeleton of the same config.
    Rng probe(0);
    Model skeleton(model.config_, probe);
    if (skeleton.params_.items.size() != model.params_.items.size()) {
        throw ParseError("checkpoint " + path + ": parameter set does not match model kind");
    }
    for (size_t i = 0; i < skeleton.params_.items.size(); ++i) {
        const Param& a = skeleton.params_.items[i];
        const Param& b = model.params_.items[i];
        if (a.name != b.name || !a.value.same_shape(b.value) || a.is_bias != b.is_bias) {
            throw ParseError("checkpoint " + path + ": parameter " + b.name + " does not match model kind");
        }
    }
    return model;
}

} // namespace licem
