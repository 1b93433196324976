#include <doctest.h>

#include <cmath>

#include "licem/model.hpp"
#include "support.hpp"

using namespace licem;
using licem::test::TempDir;

namespace {

ModelConfig small_config(ModelKind kind, int classes = 3) {
    ModelConfig mc;
    mc.kind = kind;
    mc.embed_dim = 6;
    mc.concept_count = 4;
    mc.class_count = classes;
    mc.concept_embed_dim = 5;
    return mc;
}

Matrix random_batch(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    return Matrix::random_normal(rows, cols, rng, 1.0);
}

// Kahan-compensated reference for the symbolic linear execution.
double equation_logit(const Model& model, const Model::Output& out, int row, int cls) {
    double acc = model.class_bias(out, row, cls);
    double comp = 0.0;
    for (int j = 0; j < model.config().concept_count; ++j) {
        const double term = model.class_weight(out, row, cls, j) * out.task_scores.at(row, j);
        const double y = term - comp;
        const double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    return acc;
}

} // namespace

TEST_CASE("model: injected endpoints select the embedding states exactly") {
    Rng rng(5);
    Model model(small_config(ModelKind::self_licem), rng);
    Matrix e = random_batch(3, 6, 77);

    Matrix ones = Matrix::full(3, 4, 1.0);
    Matrix zeros(3, 4);

    Model::ForwardOptions opts;
    opts.injected = &ones;
    Model::Output on = model.infer(e, opts);
    // scores pass through bit-exactly
    CHECK(on.task_scores.data == ones.data);

    opts.injected = &zeros;
    Model::Output off = model.infer(e, opts);
    CHECK(off.task_scores.data == zeros.data);

    // forcing one concept via override matches injecting it directly
    Matrix half = zeros;
    half.at(1, 2) = 1.0;
    Matrix mask(3, 4);
    mask.at(1, 2) = 1.0;
    Matrix values(3, 4);
    values.at(1, 2) = 1.0;
    Model::ForwardOptions forced;
    forced.injected = &zeros;
    forced.override_mask = &mask;
    forced.override_values = &values;
    Model::Output forced_out = model.infer(e, forced);
    Model::ForwardOptions direct;
    direct.injected = &half;
    Model::Output direct_out = model.infer(e, direct);
    CHECK(forced_out.task_logits.data == direct_out.task_logits.data);
}

TEST_CASE("model: internal concept scores live in (0,1) with the right shapes") {
    Rng rng(6);
    Model model(small_config(ModelKind::licem), rng);
    Matrix e = random_batch(8, 6, 78);
    Model::Output out = model.infer(e);
    CHECK(out.raw_concept_scores.rows == 8);
    CHECK(out.raw_concept_scores.cols == 4);
    for (double v : out.raw_concept_scores.data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    CHECK(out.weights.size() == 4);
    CHECK(out.weights[0].rows == 8);
    CHECK(out.weights[0].cols == 3);
    CHECK(out.bias.rows == 8);
}

TEST_CASE("model: licem zero scores with no bias yield zero logits and 0.5 binary probability") {
    ModelConfig mc = small_config(ModelKind::self_licem, 2);
    mc.use_bias = false;
    Rng rng(7);
    Model model(mc, rng);
    Matrix e = random_batch(2, 6, 79);
    Matrix zeros(2, 4);
    Model::ForwardOptions opts;
    opts.injected = &zeros;
    Model::Output out = model.infer(e, opts);
    CHECK(out.task_logits.at(0, 0) == 0.0);
    CHECK(out.probabilities.at(0, 1) == doctest::Approx(0.5));
    CHECK(out.probabilities.at(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("model: decomposition identity against a compensated re-summation") {
    Rng rng(8);
    Model model(small_config(ModelKind::licem), rng);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix e = random_batch(4, 6, 100 + static_cast<std::uint64_t>(trial));
        Model::Output out = model.infer(e);
        for (int i = 0; i < 4; ++i) {
            for (int c = 0; c < 3; ++c) {
                const double reference = equation_logit(model, out, i, c);
                const double logit = model.class_logit(out, i, c);
                const double scale = std::max({1.0, std::fabs(logit), std::fabs(reference)});
                CHECK(std::fabs(logit - reference) / scale <= 1e-12);
            }
        }
    }
}

TEST_CASE("model: logit is affine in each score with slope equal to the realized weight") {
    Rng rng(9);
    Model model(small_config(ModelKind::self_licem), rng);
    Matrix e = random_batch(1, 6, 200);
    Rng score_rng(55);
    Matrix base(1, 4);
    for (double& v : base.data) {
        v = score_rng.uniform();
    }
    Model::ForwardOptions opts;
    opts.injected = &base;
    Model::Output out0 = model.infer(e, opts);

    // hold the head outputs fixed and recompute the equation at perturbed scores
    for (int j = 0; j < 4; ++j) {
        const double delta = 0.37;
        double expected = 0.0;
        for (int c = 0; c < 3; ++c) {
            expected = model.class_logit(out0, 0, c) + model.class_weight(out0, 0, c, j) * delta;
            double recomposed = model.class_bias(out0, 0, c);
            for (int jj = 0; jj < 4; ++jj) {
                const double score = out0.task_scores.at(0, jj) + (jj == j ? delta : 0.0);
                recomposed += model.class_weight(out0, 0, c, jj) * score;
            }
            CHECK(recomposed == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("model: cbm task head reads only the concept scores") {
    Rng rng(10);
    Model model(small_config(ModelKind::cbm_ll), rng);
    Matrix e1 = random_batch(1, 6, 300);
    Matrix e2 = random_batch(1, 6, 301); // different embedding

    Model::Output out1 = model.infer(e1);
    // force the second forward to use the first forward's scores
    Matrix mask = Matrix::full(1, 4, 1.0);
    Matrix values = out1.raw_concept_scores;
    Model::ForwardOptions pinned;
    pinned.override_mask = &mask;
    pinned.override_values = &values;
    Model::Output out2 = model.infer(e2, pinned);
    CHECK(out1.task_logits.data == out2.task_logits.data);
}

TEST_CASE("model: cbm-ll head is affine in the scores") {
    Rng rng(11);
    Model model(small_config(ModelKind::self_cbm_ll), rng);
    Matrix e = random_batch(1, 6, 310);
    Matrix a(1, 4, {0.1, 0.9, 0.4, 0.2});
    Matrix b(1, 4, {0.7, 0.3, 0.8, 0.6});
    Matrix mid(1, 4);
    for (int j = 0; j < 4; ++j) {
        mid.at(0, j) = 0.5 * (a.at(0, j) + b.at(0, j));
    }
    auto logits = [&](const Matrix& scores) {
        Model::ForwardOptions opts;
        opts.injected = &scores;
        return model.infer(e, opts).task_logits;
    };
    Matrix la = logits(a);
    Matrix lb = logits(b);
    Matrix lm = logits(mid);
    for (int c = 0; c < 3; ++c) {
        CHECK(lm.at(0, c) == doctest::Approx(0.5 * (la.at(0, c) + lb.at(0, c))).epsilon(1e-12));
    }
}

TEST_CASE("model: cbm zeroed head gives constant logits equal to the head bias") {
    Rng rng(12);
    Model model(small_config(ModelKind::cbm_ll), rng);
    Matrix& w = model.params().at("head.W");
    std::fill(w.data.begin(), w.data.end(), 0.0);
    Matrix& b = model.params().at("head.b");
    b = Matrix(1, 3, {0.3, -0.1, 0.7});
    Model::Output out = model.infer(random_batch(5, 6, 320));
    for (int i = 0; i < 5; ++i) {
        CHECK(out.task_logits.at(i, 0) == doctest::Approx(0.3));
        CHECK(out.task_logits.at(i, 1) == doctest::Approx(-0.1));
        CHECK(out.task_logits.at(i, 2) == doctest::Approx(0.7));
    }
}

TEST_CASE("model: e2e trace oracle on a tiny hand-computed network") {
    ModelConfig mc;
    mc.kind = ModelKind::e2e;
    mc.embed_dim = 1;
    mc.class_count = 2;
    Rng rng(13);
    Model model(mc, rng);
    // zero everything, then wire a single path through the first hidden unit
    for (Param& p : model.params().items) {
        std::fill(p.value.data.begin(), p.value.data.end(), 0.0);
    }
    model.params().at("e2e.l1.W").at(0, 0) = 2.0;
    model.params().at("e2e.l1.b").at(0, 0) = 1.0;
    model.params().at("e2e.l2.W").at(0, 0) = -3.0;

    Model::Output pos = model.infer(Matrix(1, 1, {2.0}));
    CHECK(pos.task_logits.at(0, 0) == doctest::Approx(-15.0)); // relu(2*2+1) * -3

    Model::Output neg = model.infer(Matrix(1, 1, {-2.0}));
    CHECK(neg.task_logits.at(0, 0) == doctest::Approx(0.0)); // relu(-3) = 0

    // zero input, zero biases -> zero logits
    model.params().at("e2e.l1.b").at(0, 0) = 0.0;
    Model::Output zero = model.infer(Matrix(1, 1, {0.0}));
    CHECK(zero.task_logits.at(0, 0) == 0.0);
}

TEST_CASE("model: forward passes are pure") {
    Rng rng(14);
    Model model(small_config(ModelKind::licem), rng);
    Matrix e = random_batch(3, 6, 330);
    Model::Output a = model.infer(e);
    Model::Output b = model.infer(e);
    CHECK(a.task_logits.data == b.task_logits.data);
    CHECK(a.raw_concept_scores.data == b.raw_concept_scores.data);
}

TEST_CASE("model: checkpoint round trip and schema hash guard") {
    TempDir tmp("ckpt");
    Rng rng(15);
    ModelConfig mc = small_config(ModelKind::licem);
    mc.per_concept_rho = true;
    Model model(mc, rng);
    model.save(tmp.file("m.ckpt"), 0xABCDEF);

    Model loaded = Model::load(tmp.file("m.ckpt"), 0xABCDEF);
    CHECK(loaded.config().kind == ModelKind::licem);
    CHECK(loaded.config().per_concept_rho);
    CHECK(loaded.params().items.size() == model.params().items.size());
    for (size_t i = 0; i < model.params().items.size(); ++i) {
        CHECK(loaded.params().items[i].value.data == model.params().items[i].value.data);
    }

    CHECK_THROWS_AS(Model::load(tmp.file("m.ckpt"), 0x123456), ConfigError);

    // identical inference after reload
    Matrix e = random_batch(2, 6, 340);
    CHECK(model.infer(e).task_logits.data == loaded.infer(e).task_logits.data);

    // corrupt one byte: checksum must catch it
    std::string bytes = licem::test::slurp(tmp.file("m.ckpt"));
    bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x40);
    licem::test::spit(tmp.file("bad.ckpt"), bytes);
    CHECK_THROWS_AS(Model::load(tmp.file("bad.ckpt")), ParseError);
}

TEST_CASE("model: every kind round-trips through its checkpoint with identical inference") {
    TempDir tmp("ckpt_all");
    const ModelKind kinds[] = {ModelKind::e2e,     ModelKind::cbm_ll,       ModelKind::cbm_mlp,
                               ModelKind::cem,     ModelKind::licem,        ModelKind::self_cbm_ll,
                               ModelKind::self_cbm_mlp, ModelKind::self_cem, ModelKind::self_licem};
    Rng data_rng(71);
    Matrix e = Matrix::random_normal(3, 6, data_rng, 1.0);
    Matrix injected(3, 4);
    for (double& v : injected.data) {
        v = data_rng.uniform();
    }
    for (ModelKind kind : kinds) {
        CAPTURE(to_string(kind));
        Rng rng(17);
        Model model(small_config(kind), rng);
        const std::string path = tmp.file(to_string(kind) + ".ckpt");
        model.save(path, 42);
        Model loaded = Model::load(path, 42);
        Model::ForwardOptions opts;
        if (is_self_kind(kind)) {
            opts.injected = &injected;
        }
        CHECK(model.infer(e, opts).task_logits.data == loaded.infer(e, opts).task_logits.data);
    }
}

TEST_CASE("model: self kinds demand injected scores and shape checks hold") {
    Rng rng(16);
    Model model(small_config(ModelKind::self_cem), rng);
    Matrix e = random_batch(2, 6, 350);
    CHECK_THROWS_AS(model.infer(e), UsageError);

    Matrix wrong(2, 3);
    Model::ForwardOptions opts;
    opts.injected = &wrong;
    CHECK_THROWS_AS(model.infer(e, opts), DimError);
}
