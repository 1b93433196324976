#include "licem/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "licem/metrics.hpp"

namespace licem {

Batch TensorData::slice(const std::vector<int>& rows) const {
    Batch batch;
    batch.embeddings = Matrix(static_cast<int>(rows.size()), embeddings.cols);
    batch.labels.reserve(rows.size());
    if (concept_targets.size() != 0) {
        batch.concept_targets = Matrix(static_cast<int>(rows.size()), concept_targets.cols);
    }
    if (injected_scores.size() != 0) {
        batch.injected_scores = Matrix(static_cast<int>(rows.size()), injected_scores.cols);
    }
    for (size_t r = 0; r < rows.size(); ++r) {
        const int src = rows[r];
        for (int j = 0; j < embeddings.cols; ++j) {
            batch.embeddings.at(static_cast<int>(r), j) = embeddings.at(src, j);
        }
        batch.labels.push_back(labels[static_cast<size_t>(src)]);
        if (batch.concept_targets.size() != 0) {
            for (int j = 0; j < concept_targets.cols; ++j) {
                batch.concept_targets.at(static_cast<int>(r), j) = concept_targets.at(src, j);
            }
        }
        if (batch.injected_scores.size() != 0) {
            for (int j = 0; j < injected_scores.cols; ++j) {
                batch.injected_scores.at(static_cast<int>(r), j) = injected_scores.at(src, j);
            }
        }
    }
    return batch;
}

Batch TensorData::all() const {
    std::vector<int> rows(static_cast<size_t>(size()));
    for (int i = 0; i < size(); ++i) {
        rows[static_cast<size_t>(i)] = i;
    }
    return slice(rows);
}

TensorData materialize(const Dataset& dataset, const std::vector<int>& indices,
                       const EmbeddingStore& store, SupervisionMode mode,
                       const ConceptFile* annotations) {
    const int m = dataset.schema.concept_count();
    TensorData data;
    data.embeddings = Matrix(static_cast<int>(indices.size()), store.dim());
    data.labels.reserve(indices.size());
    data.ids.reserve(indices.size());

    std::unordered_map<std::string, const std::vector<int>*> overlay;
    if (annotations != nullptr) {
        for (const auto& [id, concepts] : annotations->entries) {
            overlay[id] = &concepts;
        }
    }

    bool any_targets = false;
    for (int idx : indices) {
        if (dataset.samples[static_cast<size_t>(idx)].has_concepts()) {
            any_targets = true;
            break;
        }
    }
    if (any_targets) {
        data.concept_targets = Matrix(static_cast<int>(indices.size()), m);
    }
    const bool self = mode == SupervisionMode::self_generative;
    if (self) {
        data.injected_scores = Matrix(static_cast<int>(indices.size()), m);
    }

    std::string missing_embeddings;
    std::string missing_scores;
    for (size_t r = 0; r < indices.size(); ++r) {
        const Sample& s = dataset.samples[static_cast<size_t>(indices[r])];
        data.ids.push_back(s.id);
        data.labels.push_back(s.label);
        if (!store.contains(s.id)) {
            if (!missing_embeddings.empty()) {
                missing_embeddings += ", ";
            }
            missing_embeddings += s.id;
            continue;
        }
        const std::vector<double>& e = store.get(s.id);
        for (int j = 0; j < store.dim(); ++j) {
            data.embeddings.at(static_cast<int>(r), j) = e[static_cast<size_t>(j)];
        }
        if (any_targets) {
            for (int j = 0; j < m; ++j) {
                data.concept_targets.at(static_cast<int>(r), j) =
                    s.has_concepts() ? static_cast<double>(s.concepts[static_cast<size_t>(j)])
                                     : static_cast<double>(kUnknownConcept);
            }
        }
        if (self) {
            const std::vector<int>* scores = nullptr;
            auto it = overlay.find(s.id);
            if (it != overlay.end()) {
                scores = it->second;
            } else if (s.has_concepts()) {
                scores = &s.concepts;
            }
            bool ok = scores != nullptr;
            if (ok) {
                for (int v : *scores) {
                    if (v == kUnknownConcept) {
                        ok = false;
                        break;
                    }
                }
            }
            if (!ok) {
                if (!missing_scores.empty()) {
                    missing_scores += ", ";
                }
                missing_scores += s.id;
                continue;
            }
            for (int j = 0; j < m; ++j) {
                data.injected_scores.at(static_cast<int>(r), j) =
                    static_cast<double>((*scores)[static_cast<size_t>(j)]);
            }
        }
    }
    if (!missing_embeddings.empty()) {
        throw ConfigError("missing embeddings for ids: " + missing_embeddings);
    }
    if (!missing_scores.empty()) {
        throw ConfigError("self-generative mode needs known concept scores for every sample; missing: " +
                          missing_scores);
    }
    return data;
}

namespace {

Model::ForwardOptions batch_options(const Batch& batch, const InterventionPlan* plan) {
    Model::ForwardOptions options;
    if (batch.has_injected()) {
        options.injected = &batch.injected_scores;
    }
    if (plan != nullptr) {
        options.override_mask = &plan->mask;
        options.override_values = &plan->values;
    }
    return options;
}

} // namespace

EvalSummary evaluate(const Model& model, const TensorData& data) {
    EvalSummary summary;
    Batch batch = data.all();
    Model::Output out = model.infer(batch.embeddings, batch_options(batch, nullptr));
    summary.accuracy = task_accuracy(out.predicted, batch.labels);
    if (batch.has_concept_targets() && supports_injection(model.config().kind)) {
        const Matrix& scores =
            out.raw_concept_scores.size() != 0 ? out.raw_concept_scores : out.task_scores;
        if (scores.size() != 0) {
            summary.concept_f1 = macro_f1(scores, batch.concept_targets);
            summary.sparsity_deviation = sparsity_deviation(scores, batch.concept_targets).mean;
        }
    }
    return summary;
}

TrainResult train(const ModelConfig& model_config, const TensorData& train_data,
                  const TensorData& val_data, const TrainConfig& config) {
    config.validate();
    model_config.validate();
    if (train_data.size() == 0 || val_data.size() == 0) {
        throw ConfigError("train: empty train or validation split");
    }
    if (config.mode != SupervisionMode::self_generative && has_internal_concepts(model_config.kind) &&
        model_config.kind != ModelKind::e2e && train_data.concept_targets.size() == 0) {
        throw ConfigError("train: " + to_string(config.mode) +
                          " mode requires concept labels in the training split");
    }

    Rng seed_root(config.seed);
    Rng init_rng = seed_root.fork(0x696e6974); // "init"
    TrainResult result;
    Model model(model_config, init_rng);
    result.best = model;
    result.final = model;
    if (config.epochs == 0) {
        return result;
    }

    AdamW optimizer(AdamConfig{0.9, 0.999, 1e-8, config.weight_decay});
    const LrSchedule schedule = config.schedule();
    const double intervention_p = config.resolved_intervention_p(model_config.kind);
    const std::uint64_t intervention_seed = seed_root.fork(0x696e7476).next_u64(); // "intv"
    const int n = train_data.size();

    double best_val = -1.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at(schedule, epoch);

        std::vector<int> order(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            order[static_cast<size_t>(i)] = i;
        }
        Rng shuffle_rng = seed_root.fork(0x10000 + static_cast<std::uint64_t>(epoch));
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(shuffle_rng.below(i));
            std::swap(order[i - 1], order[j]);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.lr = lr;
        double weighted_terms[4] = {0.0, 0.0, 0.0, 0.0};
        int seen = 0;

        for (int start = 0; start < n; start += config.batch_size) {
            const int stop = std::min(n, start + config.batch_size);
            std::vector<int> rows(order.begin() + start, order.begin() + stop);
            Batch batch = train_data.slice(rows);

            InterventionPlan plan;
            const InterventionPlan* plan_ptr = nullptr;
            if (intervention_p > 0.0 && batch.has_concept_targets() &&
                supports_injection(model_config.kind)) {
                std::vector<std::uint64_t> keys(rows.size());
                for (size_t r = 0; r < rows.size(); ++r) {
                    keys[r] = static_cast<std::uint64_t>(epoch) * static_cast<std::uint64_t>(n) +
                              static_cast<std::uint64_t>(rows[r]);
                }
                plan = plan_interventions(batch.concept_targets, intervention_p, intervention_seed, keys);
                record.intervention_skips += plan.skipped_unknown;
                plan_ptr = &plan;
            }

            Tape tape;
            std::vector<Var> param_vars = model.register_params(tape);
            Var e = tape.constant(batch.embeddings);
            Model::Graph graph = model.forward(tape, param_vars, e, batch_options(batch, plan_ptr));
            LossReport batch_report;
            Var loss = training_loss(tape, model, graph, batch, config, &batch_report);

            if (!std::isfinite(batch_report.total)) {
                // abort with the last finite parameter state
                result.diverged = true;
                result.final = model;
                return result;
            }

            tape.backward(loss);
            std::vector<Matrix> grads;
            grads.reserve(param_vars.size());
            for (Var v : param_vars) {
                grads.push_back(tape.grad(v));
            }
            optimizer.step(model.params(), grads, lr);

            const int bsz = stop - start;
            weighted_terms[0] += batch_report.concept_term * bsz;
            weighted_terms[1] += batch_report.task_term * bsz;
            weighted_terms[2] += batch_report.l1_term * bsz;
            weighted_terms[3] += batch_report.l2_term * bsz;
            seen += bsz;
        }

        record.train_loss.concept_term = weighted_terms[0] / seen;
        record.train_loss.task_term = weighted_terms[1] / seen;
        record.train_loss.l1_term = weighted_terms[2] / seen;
        record.train_loss.l2_term = weighted_terms[3] / seen;
        if (config.mode == SupervisionMode::self_generative) {
            record.train_loss.total = record.train_loss.task_term +
                                      config.lambda_w * record.train_loss.l1_term +
                                      config.lambda_b * record.train_loss.l2_term;
        } else {
            record.train_loss.total =
                record.train_loss.concept_term + config.lambda_y * record.train_loss.task_term +
                config.lambda_w * record.train_loss.l1_term + config.lambda_b * record.train_loss.l2_term;
        }

        const EvalSummary val = evaluate(model, val_data);
        record.val_accuracy = val.accuracy;
        record.val_concept_f1 = val.concept_f1;
        result.history.push_back(record);

        if (val.accuracy > best_val) {
            best_val = val.accuracy;
            result.best = model;
            result.best_epoch = epoch;
        }
    }
    result.final = model;
    return result;
}

std::string history_to_jsonl(const std::vector<EpochRecord>& history, const TrainConfig& config) {
    std::ostringstream os;
    for (const EpochRecord& r : history) {
        nlohmann::ordered_json j;
        j["epoch"] = r.epoch;
        j["lr"] = r.lr;
        j["loss"] = {{"concept", r.train_loss.concept_term},
                     {"task", r.train_loss.task_term},
                     {"l1", r.train_loss.l1_term},
                     {"l2", r.train_loss.l2_term},
                     {"total", r.train_loss.total}};
        j["val_accuracy"] = r.val_accuracy;
        if (r.val_concept_f1 >= 0.0) {
            j["val_concept_f1"] = r.val_concept_f1;
        }
        if (r.intervention_skips > 0) {
            j["intervention_skips"] = r.intervention_skips;
        }
        j["mode"] = to_string(config.mode);
        os << j.dump() << "\n";
    }
    return os.str();
}

void save_history(const std::vector<EpochRecord>& history, const TrainConfig& config,
                  const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write history file: " + path);
    }
    out << history_to_jsonl(history, config);
}

} // namespace licem
