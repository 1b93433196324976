#include <doctest.h>

#include <cmath>

#include "licem/optim.hpp"
#include "licem/tape.hpp"

using namespace licem;

namespace {

// Independent triple-loop reference, kept free of the production kernel.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) {
                acc += a.at(i, k) * b.at(k, j);
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

double lse_row(const Matrix& z, int row) {
    double mx = z.at(row, 0);
    for (int j = 1; j < z.cols; ++j) {
        mx = std::max(mx, z.at(row, j));
    }
    double s = 0.0;
    for (int j = 0; j < z.cols; ++j) {
        s += std::exp(z.at(row, j) - mx);
    }
    return mx + std::log(s);
}

} // namespace

TEST_CASE("numkit: linear layer identity and analytic cases") {
    Tape tape;
    Var x = tape.constant(Matrix(1, 2, {1.0, 2.0}));
    Var w = tape.leaf(Matrix(2, 2, {1.0, 0.0, 0.0, 1.0}));
    Var b = tape.leaf(Matrix(1, 2, {0.0, 0.0}));
    Var y = linear(x, w, b);
    CHECK(y.value().at(0, 0) == doctest::Approx(1.0));
    CHECK(y.value().at(0, 1) == doctest::Approx(2.0));

    Var x2 = tape.constant(Matrix(1, 2, {1.0, 1.0}));
    Var w2 = tape.leaf(Matrix(2, 1, {2.0, 3.0}));
    Var b2 = tape.leaf(Matrix(1, 1, {-5.0}));
    Var y2 = linear(x2, w2, b2);
    CHECK(y2.value().at(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("numkit: matmul matches triple-loop oracle") {
    Rng rng(7);
    Matrix a = Matrix::random_normal(3, 4, rng, 1.0);
    Matrix b = Matrix::random_normal(4, 2, rng, 1.0);
    Matrix fast = matmul(a, b);
    Matrix slow = naive_matmul(a, b);
    for (int i = 0; i < fast.size(); ++i) {
        CHECK(std::fabs(fast.data[i] - slow.data[i]) < 1e-12);
    }
}

TEST_CASE("numkit: matmul shape mismatch raises a dimension error") {
    Matrix a(2, 3);
    Matrix b(2, 3);
    CHECK_THROWS_AS(matmul(a, b), DimError);
}

TEST_CASE("numkit: activations") {
    Matrix x(1, 3, {-1.0, 0.0, 2.0});
    Matrix r = relu(x);
    CHECK(r.data == std::vector<double>{0.0, 0.0, 2.0});

    Matrix s = sigmoid(Matrix(1, 1, {0.0}));
    CHECK(s.data[0] == doctest::Approx(0.5));

    // large values must not overflow thanks to max-subtraction
    Matrix sm = softmax_rows(Matrix(1, 2, {1000.0, 1000.0}));
    CHECK(sm.data[0] == doctest::Approx(0.5));
    CHECK(sm.data[1] == doctest::Approx(0.5));
    CHECK(sm.all_finite());
}

TEST_CASE("numkit: softmax rows sum to one with entries in (0,1)") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix x = Matrix::random_normal(5, 7, rng, 3.0);
        Matrix y = softmax_rows(x);
        for (int i = 0; i < y.rows; ++i) {
            double sum = 0.0;
            for (int j = 0; j < y.cols; ++j) {
                const double v = y.at(i, j);
                CHECK(v > 0.0);
                CHECK(v < 1.0);
                sum += v;
            }
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("numkit: cross entropy trivial values") {
    Tape tape;
    Var logits = tape.constant(Matrix(1, 2, {0.3, 0.3}));
    Var loss = cross_entropy(logits, {0});
    CHECK(loss.value().data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Var dominated = tape.constant(Matrix(1, 2, {50.0, -50.0}));
    Var loss2 = cross_entropy(dominated, {0});
    CHECK(loss2.value().data[0] == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("numkit: cross entropy matches log-sum-exp oracle on random batches") {
    Rng rng(23);
    Matrix z = Matrix::random_normal(4, 3, rng, 2.0);
    std::vector<int> targets = {2, 0, 1, 1};
    Tape tape;
    Var loss = cross_entropy(tape.constant(z), targets);
    double expected = 0.0;
    for (int i = 0; i < 4; ++i) {
        expected += lse_row(z, i) - z.at(i, targets[static_cast<size_t>(i)]);
    }
    expected /= 4.0;
    CHECK(std::fabs(loss.value().data[0] - expected) < 1e-10);
}

TEST_CASE("numkit: cross entropy rejects out-of-range targets") {
    Tape tape;
    Var logits = tape.constant(Matrix(1, 3));
    CHECK_THROWS_AS(cross_entropy(logits, {3}), LabelError);
    Var binary = tape.constant(Matrix(1, 1));
    CHECK_THROWS_AS(cross_entropy(binary, {2}), LabelError);
}

TEST_CASE("numkit: backward on sum and squared norm") {
    Tape tape;
    Matrix w0(2, 3, {0.5, -1.0, 2.0, 0.0, 3.0, -0.5});
    Var w = tape.leaf(w0);
    tape.backward(sum(w));
    Matrix g = tape.grad(w);
    for (double v : g.data) {
        CHECK(v == doctest::Approx(1.0));
    }

    Tape tape2;
    Var w2 = tape2.leaf(w0);
    tape2.backward(sum(square(w2)));
    Matrix g2 = tape2.grad(w2);
    for (int i = 0; i < w0.size(); ++i) {
        CHECK(g2.data[i] == doctest::Approx(2.0 * w0.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("numkit: backward requires a scalar root") {
    Tape tape;
    Var w = tape.leaf(Matrix(2, 2));
    CHECK_THROWS_AS(tape.backward(w), UsageError);
}

TEST_CASE("numkit: per-op gradients match central finite differences") {
    Rng rng(31);
    const double h = 1e-5;
    auto check_op = [&](auto&& build) {
        Matrix x0 = Matrix::random_normal(2, 5, rng, 1.0);
        Tape tape;
        Var x = tape.leaf(x0);
        tape.backward(build(tape, x));
        Matrix analytic = tape.grad(x);
        for (int i = 0; i < x0.size(); ++i) {
            auto value_at = [&](double v) {
                Matrix xp = x0;
                xp.data[static_cast<size_t>(i)] = v;
                Tape t2;
                Var xv = t2.leaf(xp);
                return build(t2, xv).value().data[0];
            };
            const double numeric =
                (value_at(x0.data[static_cast<size_t>(i)] + h) - value_at(x0.data[static_cast<size_t>(i)] - h)) /
                (2.0 * h);
            const double a = analytic.data[static_cast<size_t>(i)];
            const double err = std::fabs(a - numeric) / std::max({1e-6, std::fabs(a), std::fabs(numeric)});
            CHECK(err < 1e-4);
        }
    };

    check_op([](Tape&, Var x) { return sum(sigmoid(x)); });
    check_op([](Tape&, Var x) { return sum(relu(x)); });
    check_op([](Tape&, Var x) { return sum(square(x)); });
    check_op([](Tape&, Var x) { return sum(abs(x)); });
    check_op([](Tape&, Var x) { return sum(softmax_rows(x)); });
    check_op([](Tape&, Var x) { return sum(mul(x, sigmoid(x))); });
    check_op([](Tape&, Var x) { return cross_entropy(x, {1, 3}); });
    check_op([](Tape& t, Var x) {
        Var w = t.constant(Matrix(5, 2, {0.3, -0.2, 0.7, 0.1, -0.4, 0.9, 0.2, 0.2, -0.6, 0.5}));
        return sum(matmul(x, w));
    });
    check_op([](Tape& t, Var x) {
        Matrix targets(2, 5);
        Matrix mask = Matrix::full(2, 5, 1.0);
        targets.at(0, 1) = 1.0;
        targets.at(1, 3) = 1.0;
        return sigmoid_bce(x, targets, mask);
    });
    check_op([](Tape& t, Var x) {
        Var s = t.leaf(Matrix(2, 1, {0.3, -0.8}));
        return sum(mul_colbroadcast(x, s));
    });
    check_op([](Tape& t, Var x) {
        Var other = t.constant(Matrix(2, 5, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
        return sum(mul(concat_cols({x, other}), concat_cols({other, x})));
    });
}

TEST_CASE("numkit: backward twice is bitwise identical") {
    Rng rng(41);
    Matrix x0 = Matrix::random_normal(3, 4, rng, 1.0);
    auto run = [&]() {
        Tape tape;
        Var x = tape.leaf(x0);
        Var loss = sum(mul(sigmoid(x), x));
        tape.backward(loss);
        return tape.grad(x);
    };
    Matrix g1 = run();
    Matrix g2 = run();
    CHECK(g1.data == g2.data);
}

TEST_CASE("numkit: adamw zero-gradient behaviour") {
    ParamStore params;
    params.items.push_back({"w", Matrix(1, 2, {1.0, -2.0}), false});
    params.items.push_back({"b", Matrix(1, 2, {0.5, 0.5}), true});
    std::vector<Matrix> grads = {Matrix(1, 2), Matrix(1, 2)};

    // decay shrinks weights multiplicatively, never biases
    AdamW with_decay(AdamConfig{0.9, 0.999, 1e-8, 0.1});
    with_decay.step(params, grads, 0.5);
    CHECK(params.items[0].value.data[0] == doctest::Approx(1.0 * (1.0 - 0.5 * 0.1)).epsilon(1e-15));
    CHECK(params.items[0].value.data[1] == doctest::Approx(-2.0 * (1.0 - 0.5 * 0.1)).epsilon(1e-15));
    CHECK(params.items[1].value.data[0] == doctest::Approx(0.5));

    // zero gradient and zero decay is the identity
    ParamStore params2;
    params2.items.push_back({"w", Matrix(1, 2, {1.0, -2.0}), false});
    AdamW plain(AdamConfig{});
    plain.step(params2, {Matrix(1, 2)}, 0.5);
    CHECK(params2.items[0].value.data[0] == 1.0);
    CHECK(params2.items[0].value.data[1] == -2.0);
}

TEST_CASE("numkit: adamw first step has magnitude close to lr") {
    ParamStore params;
    params.items.push_back({"w", Matrix(1, 1, {3.0}), false});
    AdamW opt(AdamConfig{0.9, 0.999, 1e-8, 0.0});
    opt.step(params, {Matrix(1, 1, {0.42})}, 0.01);
    // first-step Adam update is lr * g / (|g| + eps) ~ lr * sign(g)
    CHECK(params.items[0].value.data[0] == doctest::Approx(3.0 - 0.01).epsilon(1e-6));
}

TEST_CASE("numkit: adamw three-step trajectory matches a hand-stepped reference") {
    const double lr = 0.1;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double w_ref = 2.0, m = 0.0, v = 0.0;

    ParamStore params;
    params.items.push_back({"w", Matrix(1, 1, {2.0}), false});
    AdamW opt(AdamConfig{b1, b2, eps, 0.0});

    for (int t = 1; t <= 3; ++t) {
        const double g = 2.0 * w_ref; // gradient of w^2 at the reference point
        opt.step(params, {Matrix(1, 1, {2.0 * params.items[0].value.data[0]})}, lr);
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        w_ref -= lr * mhat / (std::sqrt(vhat) + eps);
        CHECK(std::fabs(params.items[0].value.data[0] - w_ref) < 1e-12);
    }
}

TEST_CASE("numkit: adamw rejects non-finite gradients naming the parameter") {
    ParamStore params;
    params.items.push_back({"rho.l1.W", Matrix(1, 1, {1.0}), false});
    AdamW opt;
    Matrix bad(1, 1);
    bad.data[0] = std::nan("");
    CHECK_THROWS_WITH_AS(opt.step(params, {bad}, 0.1), doctest::Contains("rho.l1.W"), TrainFault);
}

TEST_CASE("numkit: step-decay schedule") {
    LrSchedule s{1e-3, 0.1, 10};
    CHECK(lr_at(s, 0) == doctest::Approx(1e-3));
    CHECK(lr_at(s, 9) == doctest::Approx(1e-3));
    CHECK(lr_at(s, 10) == doctest::Approx(1e-4));
    CHECK(lr_at(s, 25) == doctest::Approx(1e-5));
    CHECK_THROWS_AS(lr_at(s, -1), UsageError);
}
