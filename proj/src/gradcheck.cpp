#include "licem/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace licem {

namespace {

double loss_value(const Model& model, const Batch& batch, const TrainConfig& config,
                  const InterventionPlan* plan) {
    Tape tape;
    std::vector<Var> vars = model.register_params(tape);
    Var e = tape.constant(batch.embeddings);
    Model::ForwardOptions options;
    if (batch.has_injected()) {
        options.injected = &batch.injected_scores;
    }
    if (plan != nullptr) {
        options.override_mask = &plan->mask;
        options.override_values = &plan->values;
    }
    Model::Graph graph = model.forward(tape, vars, e, options);
    LossReport report;
    Var loss = training_loss(tape, model, graph, batch, config, &report);
    return loss.value().data[0];
}

} // namespace

double finite_difference_max_err(Model& model, const Batch& batch, const TrainConfig& config,
                                 const InterventionPlan* plan, double h) {
    // analytic gradients
    Tape tape;
    std::vector<Var> vars = model.register_params(tape);
    Var e = tape.constant(batch.embeddings);
    Model::ForwardOptions options;
    if (batch.has_injected()) {
        options.injected = &batch.injected_scores;
    }
    if (plan != nullptr) {
        options.override_mask = &plan->mask;
        options.override_values = &plan->values;
    }
    Model::Graph graph = model.forward(tape, vars, e, options);
    LossReport report;
    Var loss = training_loss(tape, model, graph, batch, config, &report);
    tape.backward(loss);
    std::vector<Matrix> analytic;
    analytic.reserve(vars.size());
    for (Var v : vars) {
        analytic.push_back(tape.grad(v));
    }

    auto rel_err = [](double a, double b) {
        return std::fabs(a - b) / std::max({1e-6, std::fabs(a), std::fabs(b)});
    };

    double max_err = 0.0;
    for (size_t pi = 0; pi < model.params().items.size(); ++pi) {
        Matrix& w = model.params().items[pi].value;
        for (size_t j = 0; j < w.data.size(); ++j) {
            const double saved = w.data[j];
            w.data[j] = saved + h;
            const double up = loss_value(model, batch, config, plan);
            w.data[j] = saved - h;
            const double down = loss_value(model, batch, config, plan);
            w.data[j] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[pi].data[j];
            double err = rel_err(a, numeric);
            if (err > 1e-5) {
                // A relu/abs kink inside [w-h, w+h] makes the central
                // difference blend the two one-sided slopes. The subgradient
                // is valid iff it matches one side; a wrong gradient matches
                // neither.
                const double base = loss_value(model, batch, config, plan);
                const double right = (up - base) / h;
                const double left = (base - down) / h;
                err = std::min({err, rel_err(a, right), rel_err(a, left)});
            }
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

std::vector<GradCheckCase> run_gradient_suite(std::uint64_t seed, double h, double tolerance) {
    constexpr int kBatch = 8;
    constexpr int kEmbed = 16;
    constexpr int kConcepts = 4;
    constexpr int kClasses = 3;
    constexpr int kConceptEmbed = 8;

    const ModelKind kinds[] = {ModelKind::cbm_ll, ModelKind::cbm_mlp, ModelKind::cem, ModelKind::licem,
                               ModelKind::self_licem};
    const SupervisionMode modes[] = {SupervisionMode::supervised, SupervisionMode::self_generative};

    std::vector<GradCheckCase> cases;
    std::uint64_t instance = 0;
    for (ModelKind kind : kinds) {
        for (SupervisionMode mode : modes) {
            Rng rng(seed + 1000 * instance);
            ++instance;

            ModelConfig mc;
            mc.kind = kind;
            mc.embed_dim = kEmbed;
            mc.concept_count = kConcepts;
            mc.class_count = kClasses;
            mc.concept_embed_dim = kConceptEmbed;
            Model model(mc, rng);

            Batch batch;
            batch.embeddings = Matrix::random_normal(kBatch, kEmbed, rng, 1.0);
            batch.concept_targets = Matrix(kBatch, kConcepts);
            for (double& v : batch.concept_targets.data) {
                v = rng.uniform() < 0.5 ? 0.0 : 1.0;
            }
            for (int i = 0; i < kBatch; ++i) {
                batch.labels.push_back(static_cast<int>(rng.below(kClasses)));
            }
            if (is_self_kind(kind)) {
                batch.injected_scores = Matrix(kBatch, kConcepts);
                for (double& v : batch.injected_scores.data) {
                    v = rng.uniform() < 0.5 ? 0.0 : 1.0;
                }
            }

            TrainConfig tc;
            tc.mode = mode;
            // visible regularizer gradients for the audit
            tc.lambda_w = 1e-2;
            tc.lambda_b = 1e-2;

            // half the coordinates intervened, mask held constant
            InterventionPlan plan;
            const InterventionPlan* plan_ptr = nullptr;
            if (supports_injection(kind) && !is_self_kind(kind)) {
                std::vector<std::uint64_t> keys(kBatch);
                for (size_t r = 0; r < keys.size(); ++r) {
                    keys[r] = r;
                }
                plan = plan_interventions(batch.concept_targets, 0.5, seed ^ instance, keys);
                plan_ptr = &plan;
            }

            GradCheckCase c;
            c.name = to_string(kind) + " / " +
                     (mode == SupervisionMode::self_generative ? "task-only loss" : "joint loss");
            c.entries = model.params().total_entries();
            c.max_rel_err = finite_difference_max_err(model, batch, tc, plan_ptr, h);
            c.passed = c.max_rel_err < tolerance;
            cases.push_back(std::move(c));
        }
    }
    return cases;
}

} // namespace licem
