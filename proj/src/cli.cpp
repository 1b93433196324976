#include "licem/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "licem/annotate.hpp"
#include "licem/cace.hpp"
#include "licem/config.hpp"
#include "licem/explain.hpp"
#include "licem/gradcheck.hpp"
#include "licem/intervention.hpp"
#include "licem/manifest.hpp"
#include "licem/metrics.hpp"
#include "licem/split.hpp"
#include "licem/train.hpp"

namespace licem {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config_path;
    std::string data_path;
    std::string schema_path;
    std::string embeddings_path;
    std::string concepts_from;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_embeddings) {
    cmd->add_option("--config", args.config_path, "config file (TOML-style sections)");
    cmd->add_option("--data", args.data_path, "dataset JSONL file")->required();
    cmd->add_option("--schema", args.schema_path, "schema JSON file")->required();
    if (needs_embeddings) {
        cmd->add_option("--embeddings", args.embeddings_path, "embedding binary file")->required();
    }
    cmd->add_option("--concepts-from", args.concepts_from,
                    "annotation JSONL overriding/feeding concept labels");
    cmd->add_option("--out", args.out, "output directory or file")->required();
    auto* seed_opt = cmd->add_option("--seed", args.seed, "seed for all randomness");
    seed_opt->each([&args](const std::string&) { args.seed_given = true; });
}

ConfigFile load_config(const CommonArgs& args) {
    if (args.config_path.empty()) {
        return ConfigFile();
    }
    return ConfigFile::load(args.config_path);
}

TrainConfig train_config_from(const ConfigFile& cfg, const CommonArgs& args) {
    TrainConfig tc;
    tc.lambda_y = cfg.get_double("training", "lambda_y", tc.lambda_y);
    tc.lambda_w = cfg.get_double("training", "lambda_w", tc.lambda_w);
    tc.lambda_b = cfg.get_double("training", "lambda_b", tc.lambda_b);
    tc.epochs = static_cast<int>(cfg.get_int("training", "epochs", tc.epochs));
    tc.base_lr = cfg.get_double("training", "base_lr", tc.base_lr);
    tc.gamma = cfg.get_double("training", "gamma", tc.gamma);
    tc.step_size = static_cast<int>(cfg.get_int("training", "step_size", tc.step_size));
    tc.batch_size = static_cast<int>(cfg.get_int("training", "batch_size", tc.batch_size));
    tc.train_intervention_p =
        cfg.get_double("training", "train_intervention_p", tc.train_intervention_p);
    tc.weight_decay = cfg.get_double("training", "weight_decay", tc.weight_decay);
    tc.seed = static_cast<std::uint64_t>(cfg.get_int("training", "seed", 0));
    tc.mode = supervision_mode_from_string(cfg.get_string("training", "supervision_mode", "supervised"));
    if (args.seed_given) {
        tc.seed = args.seed;
    }
    return tc;
}

SplitSpec split_spec_from(const ConfigFile& cfg, const TrainConfig& tc) {
    SplitSpec spec;
    spec.seed = static_cast<std::uint64_t>(cfg.get_int("split", "seed", static_cast<long long>(tc.seed)));
    spec.validation_fraction = cfg.get_double("split", "validation_fraction", spec.validation_fraction);
    spec.test_fraction = cfg.get_double("split", "test_fraction", spec.test_fraction);
    const std::string file = cfg.get_string("split", "file", "");
    if (!file.empty()) {
        spec.split_file = file;
    }
    return spec;
}

ModelConfig model_config_from(const ConfigFile& cfg, const std::string& kind_flag,
                              const ConceptSchema& schema, int embed_dim) {
    ModelConfig mc;
    const std::string kind = !kind_flag.empty() ? kind_flag : cfg.get_string("model", "kind", "licem");
    mc.kind = model_kind_from_string(kind);
    mc.embed_dim = embed_dim;
    mc.concept_count = schema.concept_count();
    mc.class_count = schema.class_count();
    mc.concept_embed_dim =
        static_cast<int>(cfg.get_int("model", "concept_embed_dim", mc.concept_embed_dim));
    mc.use_bias = cfg.get_bool("model", "use_bias", mc.use_bias);
    mc.per_concept_rho = cfg.get_bool("model", "per_concept_rho", mc.per_concept_rho);
    return mc;
}

Dataset load_data(const CommonArgs& args, bool apply_overlay_for_targets) {
    Dataset ds = load_dataset(args.data_path, args.schema_path);
    if (apply_overlay_for_targets && !args.concepts_from.empty()) {
        ds = apply_concepts(ds, load_concept_file(args.concepts_from, ds.schema));
    }
    return ds;
}

std::vector<int> all_indices(const Dataset& ds) {
    std::vector<int> idx(ds.samples.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        idx[i] = static_cast<int>(i);
    }
    return idx;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) {
        throw IoError("cannot create output directory " + path + ": " + ec.message());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    out << text;
}

RunManifest start_manifest(const std::string& command, const CommonArgs& args, const ConfigFile& cfg) {
    RunManifest m;
    m.command = command;
    m.seed = args.seed;
    m.config = cfg.entries();
    m.stamp_start();
    for (const std::string& p :
         {args.config_path, args.data_path, args.schema_path, args.embeddings_path, args.concepts_from}) {
        if (!p.empty()) {
            m.add_input(p);
        }
    }
    return m;
}

// Materialized partition of the dataset for model consumption. Annotations
// feed injected scores for self-model kinds.
TensorData materialize_for(const Model& model, const Dataset& ds, const std::vector<int>& idx,
                           const EmbeddingStore& store, const std::string& concepts_from) {
    const SupervisionMode mode = is_self_kind(model.config().kind) ? SupervisionMode::self_generative
                                                                   : SupervisionMode::supervised;
    ConceptFile overlay;
    const ConceptFile* overlay_ptr = nullptr;
    if (mode == SupervisionMode::self_generative && !concepts_from.empty()) {
        overlay = load_concept_file(concepts_from, ds.schema);
        overlay_ptr = &overlay;
    }
    return materialize(ds, idx, store, mode, overlay_ptr);
}

std::vector<int> partition_of(const SplitResult& split_result, const std::string& name) {
    if (name == "train") {
        return split_result.train;
    }
    if (name == "val") {
        return split_result.val;
    }
    if (name == "test") {
        return split_result.test;
    }
    throw UsageError("unknown partition '" + name + "' (expected train, val or test)");
}

// ----------------------------- subcommands -----------------------------

int cmd_ingest(const CommonArgs& args, const std::string& embeddings_jsonl,
               const std::string& fetch_endpoint, const std::string& embed_model, bool make_split,
               const ConfigFile& cfg) {
    RunManifest manifest = start_manifest("ingest", args, cfg);
    ensure_dir(args.out);
    Dataset ds = load_data(args, true);

    save_dataset(ds, args.out + "/dataset.jsonl");
    ds.schema.save(args.out + "/schema.json");

    if (!embeddings_jsonl.empty() && !fetch_endpoint.empty()) {
        throw UsageError("ingest: choose one of --embeddings-jsonl or --fetch-embeddings");
    }
    if (!embeddings_jsonl.empty()) {
        manifest.add_input(embeddings_jsonl);
        std::ifstream in(embeddings_jsonl);
        if (!in) {
            throw IoError("cannot open embeddings JSONL: " + embeddings_jsonl);
        }
        EmbeddingStore store;
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) {
                continue;
            }
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
                store.put(j.at("id").get<std::string>(), j.at("embedding").get<std::vector<double>>());
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(embeddings_jsonl + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
        store.save(args.out + "/embeddings.bin");
    } else if (!fetch_endpoint.empty()) {
        EmbeddingStore store = fetch_embeddings(fetch_endpoint, embed_model, ds);
        store.save(args.out + "/embeddings.bin");
    }

    if (make_split) {
        TrainConfig tc = train_config_from(cfg, args);
        SplitSpec spec = split_spec_from(cfg, tc);
        if (args.seed_given) {
            spec.seed = args.seed;
        }
        save_split(split(ds, spec), ds, args.out + "/split.json");
    }

    manifest.stamp_finish();
    manifest.save(args.out + "/manifest.json");
    std::cout << "ingested " << ds.size() << " samples -> " << args.out << "\n";
    return 0;
}

int cmd_annotate(const CommonArgs& args, const std::string& template_path, const std::string& endpoint,
                 const std::string& model_name, std::string cache_path, int concurrency, int max_retries,
                 const ConfigFile& cfg) {
    RunManifest manifest = start_manifest("annotate", args, cfg);
    manifest.add_input(template_path);
    Dataset ds = load_data(args, false);
    PromptTemplate tmpl = PromptTemplate::load(template_path);

    ClientConfig client_cfg;
    client_cfg.endpoint = !endpoint.empty() ? endpoint : cfg.get_string("annotate", "endpoint", "");
    client_cfg.model = !model_name.empty() ? model_name : cfg.get_string("annotate", "model", "");
    client_cfg.max_retries = max_retries >= 0
                                 ? max_retries
                                 : static_cast<int>(cfg.get_int("annotate", "max_retries", 3));
    client_cfg.backoff_ms = static_cast<int>(cfg.get_int("annotate", "backoff_ms", 200));
    client_cfg.timeout_s = static_cast<int>(cfg.get_int("annotate", "timeout_s", 30));
    client_cfg.concurrency =
        concurrency > 0 ? concurrency : static_cast<int>(cfg.get_int("annotate", "concurrency", 1));
    if (client_cfg.endpoint.empty()) {
        throw UsageError("annotate: --endpoint (or [annotate].endpoint) is required");
    }
    if (client_cfg.model.empty()) {
        throw UsageError("annotate: --model-name (or [annotate].model) is required");
    }
    if (cache_path.empty()) {
        cache_path = cfg.get_string("annotate", "cache", "");
    }
    if (cache_path.empty()) {
        const char* dir = std::getenv("LICEM_CACHE_DIR");
        if (dir != nullptr && *dir != '\0') {
            ensure_dir(dir);
            cache_path = std::string(dir) + "/annotations-" + tmpl.name + "-" + client_cfg.model + ".jsonl";
        }
    }
    client_cfg.cache_path = cache_path;

    AnnotationClient client(client_cfg, tmpl, ds.schema);
    AnnotationReport report = client.annotate_dataset(ds, args.out);

    manifest.config["annotate.endpoint"] = client_cfg.endpoint;
    manifest.config["annotate.model"] = client_cfg.model;
    manifest.config["annotate.template"] = tmpl.name;
    manifest.stamp_finish();
    manifest.save(args.out + ".manifest.json");

    std::cout << "annotated " << report.annotated << "/" << report.total << " (unknown " << report.unknown
              << ", cache hits " << report.cache_hits << ", requests " << report.requests << ") -> "
              << args.out << "\n";
    return 0;
}

int cmd_train(const CommonArgs& args, const std::string& model_flag, const ConfigFile& cfg) {
    RunManifest manifest = start_manifest("train", args, cfg);
    ensure_dir(args.out);

    Dataset ds = load_dataset(args.data_path, args.schema_path);
    TrainConfig tc = train_config_from(cfg, args);

    ConceptFile overlay;
    const ConceptFile* overlay_ptr = nullptr;
    if (!args.concepts_from.empty()) {
        overlay = load_concept_file(args.concepts_from, ds.schema);
        if (tc.mode == SupervisionMode::generative) {
            ds = apply_concepts(ds, overlay); // annotations become training targets
        } else if (tc.mode == SupervisionMode::self_generative) {
            overlay_ptr = &overlay; // annotations become injected scores
        } else {
            ds = apply_concepts(ds, overlay);
        }
    }

    EmbeddingStore store = EmbeddingStore::load(args.embeddings_path);
    SplitSpec spec = split_spec_from(cfg, tc);
    SplitResult parts = split(ds, spec);

    ModelConfig mc = model_config_from(cfg, model_flag, ds.schema, store.dim());
    if (is_self_kind(mc.kind) && tc.mode != SupervisionMode::self_generative) {
        tc.mode = SupervisionMode::self_generative;
    }

    TensorData train_data = materialize(ds, parts.train, store, tc.mode, overlay_ptr);
    TensorData val_data = materialize(ds, parts.val, store, tc.mode, overlay_ptr);

    TrainResult result = train(mc, train_data, val_data, tc);

    const std::uint64_t schema_hash = ds.schema.hash();
    result.best.save(args.out + "/checkpoint.ckpt", schema_hash);
    result.final.save(args.out + "/final.ckpt", schema_hash);
    save_history(result.history, tc, args.out + "/history.jsonl");
    save_split(parts, ds, args.out + "/split.json");

    manifest.config["model.kind"] = to_string(mc.kind);
    manifest.config["training.mode"] = to_string(tc.mode);
    manifest.seed = tc.seed;
    manifest.stamp_finish();
    manifest.save(args.out + "/manifest.json");

    if (result.diverged) {
        std::cerr << "training diverged (non-finite loss); last finite state saved to " << args.out
                  << "/final.ckpt\n";
        return 1;
    }
    std::cout << "trained " << to_string(mc.kind) << " for " << result.history.size() << " epochs; best "
              << "val accuracy "
              << (result.best_epoch >= 0
                      ? result.history[static_cast<size_t>(result.best_epoch)].val_accuracy
                      : 0.0)
              << " at epoch " << result.best_epoch << " -> " << args.out << "\n";
    return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint, const std::string& split_file,
             const std::string& partition, const ConfigFile& cfg) {
    RunManifest manifest = start_manifest("eval", args, cfg);
    manifest.add_input(checkpoint);
    Dataset ds = load_data(args, false);
    EmbeddingStore store = EmbeddingStore::load(args.embeddings_path);
    Model model = Model::load(checkpoint, ds.schema.hash());

    std::vector<int> idx;
    if (!split_file.empty()) {
        SplitSpec spec;
        spec.split_file = split_file;
        manifest.add_input(split_file);
        idx = partition_of(split(ds, spec), partition);
    } else {
        idx = all_indices(ds);
    }

    TensorData data = materialize_for(model, ds, idx, store, args.concepts_from);
    EvalSummary summary = evaluate(model, data);

    nlohmann::ordered_json j;
    j["model"] = to_string(model.config().kind);
    j["samples"] = static_cast<int>(idx.size());
    j["partition"] = split_file.empty() ? "all" : partition;
    j["task_accuracy"] = summary.accuracy;
    if (summary.concept_f1 >= 0.0) {
        j["concept_macro_f1"] = summary.concept_f1;
        j["sparsity_deviation"] = summary.sparsity_deviation;
    }
    write_text(args.out, j.dump(2) + "\n");
    manifest.stamp_finish();
    manifest.save(args.out + ".manifest.json");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_intervene(const CommonArgs& args, const std::string& checkpoint, const std::string& grid_text,
                  int reps, const ConfigFile& cfg) {
    RunManifest manifest = start_manifest("intervene", args, cfg);
    manifest.add_input(checkpoint);
    Dataset ds = load_data(args, false);
    EmbeddingStore store = EmbeddingStore::load(args.embeddings_path);
    Model model = Model::load(checkpoint, ds.schema.hash());

    std::vector<double> grid;
    std::stringstream ss(grid_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) {
            grid.push_back(std::stod(tok));
        }
    }
    TensorData data = materialize_for(model, ds, all_indices(ds), store, args.concepts_from);
    InterventionCurve curve = intervention_curve(model, data, grid, reps, args.seed);

    write_text(args.out + ".csv", curve_to_csv(curve));
    write_text(args.out + ".json", curve_to_json(curve));
    manifest.stamp_finish();
    manifest.save(args.out + ".manifest.json");
    std::cout << "intervention auc " << curve.auc << " over " << grid.size() << " probabilities -> "
              << args.out << ".csv\n";
    return 0;
}

int cmd_cace(const CommonArgs& args, const std::string& checkpoint, int target_class,
             const ConfigFile& cfg) {
    RunManifest manifest = start_manifest("cace", args, cfg);
    manifest.add_input(checkpoint);
    Dataset ds = load_data(args, false);
    EmbeddingStore store = EmbeddingStore::load(args.embeddings_path);
    Model model = Model::load(checkpoint, ds.schema.hash());
    TensorData data = materialize_for(model, ds, all_indices(ds), store, args.concepts_from);

    std::vector<CaceEntry> entries;
    if (target_class >= 0) {
        entries = cace_all(model, data, ds.schema, target_class);
    } else if (ds.schema.task_kind() == TaskKind::binary) {
        entries = cace_all(model, data, ds.schema, 1); // positive class
    } else {
        for (int c = 0; c < ds.schema.class_count(); ++c) {
            std::vector<CaceEntry> per_class = cace_all(model, data, ds.schema, c);
            entries.insert(entries.end(), per_class.begin(), per_class.end());
        }
    }
    write_text(args.out, cace_to_json(entries, ds.schema));
    manifest.stamp_finish();
    manifest.save(args.out + ".manifest.json");
    std::cout << "cace over " << entries.size() << " concept/class pairs -> " << args.out << "\n";
    return 0;
}

int cmd_explain(const CommonArgs& args, const std::string& checkpoint, const std::string& sample_id,
                int limit, const std::string& format, bool summary, const ConfigFile& cfg) {
    RunManifest manifest = start_manifest("explain", args, cfg);
    manifest.add_input(checkpoint);
    ensure_dir(args.out);
    Dataset ds = load_data(args, false);
    EmbeddingStore store = EmbeddingStore::load(args.embeddings_path);
    Model model = Model::load(checkpoint, ds.schema.hash());

    std::vector<int> idx;
    if (!sample_id.empty()) {
        const Sample* s = ds.find(sample_id);
        if (s == nullptr) {
            throw ConfigError("explain: id '" + sample_id + "' not in dataset");
        }
        idx.push_back(static_cast<int>(s - ds.samples.data()));
    } else {
        idx = all_indices(ds);
        if (limit > 0 && static_cast<size_t>(limit) < idx.size()) {
            idx.resize(static_cast<size_t>(limit));
        }
    }

    TensorData data = materialize_for(model, ds, idx, store, args.concepts_from);
    Batch batch = data.all();
    Model::ForwardOptions options;
    if (batch.has_injected()) {
        options.injected = &batch.injected_scores;
    }
    Model::Output out = model.infer(batch.embeddings, options);
    for (size_t r = 0; r < idx.size(); ++r) {
        ExplanationRecord record =
            explain_output(model, out, static_cast<int>(r), out.predicted[r], ds.schema, data.ids[r]);
        write_text(args.out + "/" + data.ids[r] + "." + format, render(record, format));
    }
    if (summary) {
        write_text(args.out + "/summary.json", summary_to_json(global_summary(model, data, ds.schema)));
    }
    manifest.stamp_finish();
    manifest.save(args.out + "/manifest.json");
    std::cout << "explained " << idx.size() << " samples -> " << args.out << "\n";
    return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
    const std::vector<GradCheckCase> cases = run_gradient_suite(seed);
    bool all_ok = true;
    for (const GradCheckCase& c : cases) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  max_rel_err=" << c.max_rel_err
                  << "  (" << c.entries << " parameters)\n";
        all_ok = all_ok && c.passed;
    }
    std::cout << (all_ok ? "gradient check passed" : "gradient check FAILED") << "\n";
    return all_ok ? 0 : 1;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"concept-based text classification over precomputed embeddings"};
    app.require_subcommand(1);

    CommonArgs ingest_args, annotate_args, train_args, eval_args, intervene_args, cace_args, explain_args;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate and canonicalize dataset inputs");
    add_common(ingest, ingest_args, false);
    std::string ingest_embeddings_jsonl, ingest_fetch, ingest_embed_model;
    bool ingest_split = false;
    ingest->add_option("--embeddings-jsonl", ingest_embeddings_jsonl,
                       "convert {id, embedding} JSONL into the binary store");
    ingest->add_option("--fetch-embeddings", ingest_fetch, "embeddings endpoint URL (http)");
    ingest->add_option("--embed-model", ingest_embed_model, "model name for the embeddings endpoint");
    ingest->add_flag("--split", ingest_split, "also derive and save a split file");

    // annotate
    auto* annotate = app.add_subcommand("annotate", "LLM concept annotation via a chat-completions API");
    add_common(annotate, annotate_args, false);
    std::string annotate_template, annotate_endpoint, annotate_model, annotate_cache;
    int annotate_concurrency = 0;
    int annotate_retries = -1;
    annotate->add_option("--template", annotate_template, "prompt template JSON file")->required();
    annotate->add_option("--endpoint", annotate_endpoint, "chat-completions endpoint URL");
    annotate->add_option("--model-name", annotate_model, "LLM model name");
    annotate->add_option("--cache", annotate_cache, "cache JSONL path (default from LICEM_CACHE_DIR)");
    annotate->add_option("--concurrency", annotate_concurrency, "max in-flight requests");
    annotate->add_option("--max-retries", annotate_retries, "retries per sample");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model and save checkpoint + history");
    add_common(train_cmd, train_args, true);
    std::string train_model;
    train_cmd->add_option("--model", train_model,
                          "e2e, cbm-ll, cbm-mlp, cem, licem, self-cbm-ll, self-cbm-mlp, self-cem, self-licem");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "task/concept metrics for a checkpoint");
    add_common(eval_cmd, eval_args, true);
    std::string eval_checkpoint, eval_split_file, eval_partition = "test";
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
    eval_cmd->add_option("--split-file", eval_split_file, "split JSON; evaluates one partition");
    eval_cmd->add_option("--partition", eval_partition, "train, val or test (with --split-file)");

    // intervene
    auto* intervene_cmd = app.add_subcommand("intervene", "test-time concept intervention curve");
    add_common(intervene_cmd, intervene_args, true);
    std::string intervene_checkpoint, intervene_grid = "0,0.2,0.4,0.6,0.8,1.0";
    int intervene_reps = 5;
    intervene_cmd->add_option("--checkpoint", intervene_checkpoint, "model checkpoint")->required();
    intervene_cmd->add_option("--grid", intervene_grid, "comma-separated probabilities");
    intervene_cmd->add_option("--reps", intervene_reps, "repetitions per probability");

    // cace
    auto* cace_cmd = app.add_subcommand("cace", "causal concept effects via do-interventions");
    add_common(cace_cmd, cace_args, true);
    std::string cace_checkpoint;
    int cace_class = -1;
    cace_cmd->add_option("--checkpoint", cace_checkpoint, "model checkpoint")->required();
    cace_cmd->add_option("--class", cace_class, "target class (default: positive / all)");

    // explain
    auto* explain_cmd = app.add_subcommand("explain", "per-sample linear-equation explanations");
    add_common(explain_cmd, explain_args, true);
    std::string explain_checkpoint, explain_id, explain_format = "json";
    int explain_limit = 0;
    bool explain_summary = false;
    explain_cmd->add_option("--checkpoint", explain_checkpoint, "model checkpoint")->required();
    explain_cmd->add_option("--id", explain_id, "explain a single sample id");
    explain_cmd->add_option("--limit", explain_limit, "explain at most N samples");
    explain_cmd->add_option("--format", explain_format, "json, csv or svg");
    explain_cmd->add_flag("--summary", explain_summary, "also write a global weight summary");

    // gradcheck
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    std::uint64_t gradcheck_seed = 0;
    gradcheck_cmd->add_option("--seed", gradcheck_seed, "seed for the randomized instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*ingest) {
            return cmd_ingest(ingest_args, ingest_embeddings_jsonl, ingest_fetch, ingest_embed_model,
                              ingest_split, load_config(ingest_args));
        }
        if (*annotate) {
            return cmd_annotate(annotate_args, annotate_template, annotate_endpoint, annotate_model,
                                annotate_cache, annotate_concurrency, annotate_retries,
                                load_config(annotate_args));
        }
        if (*train_cmd) {
            return cmd_train(train_args, train_model, load_config(train_args));
        }
        if (*eval_cmd) {
            return cmd_eval(eval_args, eval_checkpoint, eval_split_file, eval_partition,
                            load_config(eval_args));
        }
        if (*intervene_cmd) {
            return cmd_intervene(intervene_args, intervene_checkpoint, intervene_grid, intervene_reps,
                                 load_config(intervene_args));
        }
        if (*cace_cmd) {
            return cmd_cace(cace_args, cace_checkpoint, cace_class, load_config(cace_args));
        }
        if (*explain_cmd) {
            return cmd_explain(explain_args, explain_checkpoint, explain_id, explain_limit, explain_format,
                               explain_summary, load_config(explain_args));
        }
        if (*gradcheck_cmd) {
            return cmd_gradcheck(gradcheck_seed);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace licem
