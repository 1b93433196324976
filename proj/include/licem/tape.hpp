#pragma once

#include <functional>
#include <vector>

#include "licem/matrix.hpp"

namespace licem {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Matrix& value() const;
    int rows() const { return value().rows; }
    int cols() const { return value().cols; }
};

// Records primitive ops in execution order (which is a topological order) and
// replays them in reverse for exact gradients. Leaves registered with leaf()
// are the differentiable parameters; constant() marks inputs that never need
// gradients but still participates in the reverse sweep so the bookkeeping
// stays uniform.
class Tape {
public:
    Var leaf(const Matrix& value);
    Var constant(const Matrix& value);
    Var scalar(double value);

    const Matrix& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }

    // Reverse sweep from a scalar (1x1) root. Each node below the root is
    // visited exactly once; gradients of unreached leaves stay zero.
    void backward(Var root);

    // Gradient of the last backward() root with respect to v.
    Matrix grad(Var v) const;

    size_t node_count() const { return nodes_.size(); }

private:
    friend Var matmul(Var a, Var b);
    friend Var add(Var a, Var b);
    friend Var sub(Var a, Var b);
    friend Var mul(Var a, Var b);
    friend Var add_rowvec(Var x, Var bias);
    friend Var mul_colbroadcast(Var x, Var s);
    friend Var scale(Var x, double k);
    friend Var affine(Var x, double a, double b);
    friend Var relu(Var x);
    friend Var sigmoid(Var x);
    friend Var softmax_rows(Var x);
    friend Var abs(Var x);
    friend Var square(Var x);
    friend Var concat_cols(const std::vector<Var>& xs);
    friend Var sum(Var x);
    friend Var softmax_cross_entropy(Var logits, const std::vector<int>& targets);
    friend Var sigmoid_bce(Var logits, const Matrix& targets, const Matrix& mask);

    using BackFn = std::function<void(Tape&, const Matrix& out_grad)>;

    struct Node {
        Matrix value;
        BackFn back; // null for leaves/constants
    };

    int push(Matrix value, BackFn back);
    void accumulate(int id, const Matrix& g);

    std::vector<Node> nodes_;
    std::vector<Matrix> grads_;
    bool grads_ready_ = false;
};

// ----------------------------- tape ops -----------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                 // hadamard
Var add_rowvec(Var x, Var bias);       // [B x q] + [1 x q]
Var mul_colbroadcast(Var x, Var s);    // [B x k] * [B x 1]
Var scale(Var x, double k);
Var affine(Var x, double a, double b); // a*x + b elementwise
Var relu(Var x);
Var sigmoid(Var x);
Var softmax_rows(Var x);
Var abs(Var x);
Var square(Var x);
Var concat_cols(const std::vector<Var>& xs);
Var sum(Var x);                        // -> 1x1

// y = x*W + b per row; W is [in x out], b is [1 x out].
Var linear(Var x, Var weight, Var bias);

// Mean negative log-likelihood over the batch, stable log-sum-exp form.
// One-column logits are treated as a binary sigmoid head with {0,1} targets;
// wider logits use row softmax with class-index targets.
Var softmax_cross_entropy(Var logits, const std::vector<int>& targets);
Var cross_entropy(Var logits, const std::vector<int>& targets);

// Mean element-wise binary cross-entropy with logits over entries where
// mask is nonzero. Stable formulation; throws ConfigError if mask is empty.
Var sigmoid_bce(Var logits, const Matrix& targets, const Matrix& mask);

} // namespace licem
