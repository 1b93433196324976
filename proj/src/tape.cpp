#include "licem/tape.hpp"

#include <cmath>
#include <utility>

namespace licem {

namespace {

void check_same_tape(Var a, Var b) {
    if (a.tape == nullptr || a.tape != b.tape) {
        throw UsageError("operands live on different tapes");
    }
}

} // namespace

const Matrix& Var::value() const {
    if (!valid()) {
        throw UsageError("value() on an invalid Var");
    }
    return tape->value(id);
}

int Tape::push(Matrix value, BackFn back) {
    nodes_.push_back(Node{std::move(value), std::move(back)});
    grads_ready_ = false;
    return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::leaf(const Matrix& value) {
    return Var{this, push(value, nullptr)};
}

Var Tape::constant(const Matrix& value) {
    return Var{this, push(value, nullptr)};
}

Var Tape::scalar(double value) {
    Matrix m(1, 1);
    m.data[0] = value;
    return Var{this, push(std::move(m), nullptr)};
}

void Tape::accumulate(int id, const Matrix& g) {
    Matrix& slot = grads_[static_cast<size_t>(id)];
    if (slot.size() == 0) {
        slot = g;
        return;
    }
    for (size_t i = 0; i < slot.data.size(); ++i) {
        slot.data[i] += g.data[i];
    }
}

void Tape::backward(Var root) {
    if (root.tape != this) {
        throw UsageError("backward root belongs to a different tape");
    }
    const Matrix& rv = value(root.id);
    if (rv.rows != 1 || rv.cols != 1) {
        throw UsageError("backward root must be a 1x1 scalar node");
    }
    grads_.assign(nodes_.size(), Matrix());
    grads_[static_cast<size_t>(root.id)] = Matrix::full(1, 1, 1.0);
    for (int id = root.id; id >= 0; --id) {
        const Node& node = nodes_[static_cast<size_t>(id)];
        const Matrix& g = grads_[static_cast<size_t>(id)];
        if (node.back && g.size() != 0) {
            node.back(*this, g);
        }
    }
    grads_ready_ = true;
}

Matrix Tape::grad(Var v) const {
    if (v.tape != this) {
        throw UsageError("grad() for a Var on a different tape");
    }
    if (!grads_ready_) {
        throw UsageError("grad() before backward()");
    }
    const Matrix& g = grads_[static_cast<size_t>(v.id)];
    if (g.size() == 0) {
        return Matrix(v.value().rows, v.value().cols);
    }
    return g;
}

// ----------------------------- ops -----------------------------

Var matmul(Var a, Var b) {
    check_same_tape(a, b);
    Tape& t = *a.tape;
    Matrix out = matmul(t.value(a.id), t.value(b.id));
    const int aid = a.id;
    const int bid = b.id;
    int id = t.push(std::move(out), [aid, bid](Tape& tp, const Matrix& g) {
        tp.accumulate(aid, matmul(g, transpose(tp.value(bid))));
        tp.accumulate(bid, matmul(transpose(tp.value(aid)), g));
    });
    return Var{&t, id};
}

Var add(Var a, Var b) {
    check_same_tape(a, b);
    Tape& t = *a.tape;
    Matrix out = add(t.value(a.id), t.value(b.id));
    const int aid = a.id;
    const int bid = b.id;
    int id = t.push(std::move(out), [aid, bid](Tape& tp, const Matrix& g) {
        tp.accumulate(aid, g);
        tp.accumulate(bid, g);
    });
    return Var{&t, id};
}

Var sub(Var a, Var b) {
    check_same_tape(a, b);
    Tape& t = *a.tape;
    Matrix out = sub(t.value(a.id), t.value(b.id));
    const int aid = a.id;
    const int bid = b.id;
    int id = t.push(std::move(out), [aid, bid](Tape& tp, const Matrix& g) {
        tp.accumulate(aid, g);
        tp.accumulate(bid, scale(g, -1.0));
    });
    return Var{&t, id};
}

Var mul(Var a, Var b) {
    check_same_tape(a, b);
    Tape& t = *a.tape;
    Matrix out = mul(t.value(a.id), t.value(b.id));
    const int aid = a.id;
    const int bid = b.id;
    int id = t.push(std::move(out), [aid, bid](Tape& tp, const Matrix& g) {
        tp.accumulate(aid, mul(g, tp.value(bid)));
        tp.accumulate(bid, mul(g, tp.value(aid)));
    });
    return Var{&t, id};
}

Var add_rowvec(Var x, Var bias) {
    check_same_tape(x, bias);
    Tape& t = *x.tape;
    Matrix out = add_rowvec(t.value(x.id), t.value(bias.id));
    const int xid = x.id;
    const int bid = bias.id;
    int id = t.push(std::move(out), [xid, bid](Tape& tp, const Matrix& g) {
        tp.accumulate(xid, g);
        Matrix gb(1, g.cols);
        for (int i = 0; i < g.rows; ++i) {
            for (int j = 0; j < g.cols; ++j) {
                gb.at(0, j) += g.at(i, j);
            }
        }
        tp.accumulate(bid, gb);
    });
    return Var{&t, id};
}

Var mul_colbroadcast(Var x, Var s) {
    check_same_tape(x, s);
    Tape& t = *x.tape;
    Matrix out = mul_colbroadcast(t.value(x.id), t.value(s.id));
    const int xid = x.id;
    const int sid = s.id;
    int id = t.push(std::move(out), [xid, sid](Tape& tp, const Matrix& g) {
        tp.accumulate(xid, mul_colbroadcast(g, tp.value(sid)));
        const Matrix& xv = tp.value(xid);
        Matrix gs(g.rows, 1);
        for (int i = 0; i < g.rows; ++i) {
            double acc = 0.0;
            for (int j = 0; j < g.cols; ++j) {
                acc += g.at(i, j) * xv.at(i, j);
            }
            gs.at(i, 0) = acc;
        }
        tp.accumulate(sid, gs);
    });
    return Var{&t, id};
}

Var scale(Var x, double k) {
    return affine(x, k, 0.0);
}

Var affine(Var x, double a, double b) {
    Tape& t = *x.tape;
    Matrix out = t.value(x.id);
    for (double& v : out.data) {
        v = a * v + b;
    }
    const int xid = x.id;
    int id = t.push(std::move(out), [xid, a](Tape& tp, const Matrix& g) {
        tp.accumulate(xid, scale(g, a));
    });
    return Var{&t, id};
}

Var relu(Var x) {
    Tape& t = *x.tape;
    Matrix out = relu(t.value(x.id));
    const int xid = x.id;
    int id = t.push(std::move(out), [xid](Tape& tp, const Matrix& g) {
        const Matrix& xv = tp.value(xid);
        Matrix gx = g;
        for (size_t i = 0; i < gx.data.size(); ++i) {
            if (xv.data[i] <= 0.0) {
                gx.data[i] = 0.0;
            }
        }
        tp.accumulate(xid, gx);
    });
    return Var{&t, id};
}

Var sigmoid(Var x) {
    Tape& t = *x.tape;
    Matrix out = sigmoid(t.value(x.id));
    const int xid = x.id;
    int id = t.push(std::move(out), [xid](Tape& tp, const Matrix& g) {
        Matrix sv = sigmoid(tp.value(xid));
        Matrix gx = g;
        for (size_t i = 0; i < gx.data.size(); ++i) {
            gx.data[i] *= sv.data[i] * (1.0 - sv.data[i]);
        }
        tp.accumulate(xid, gx);
    });
    return Var{&t, id};
}

Var softmax_rows(Var x) {
    Tape& t = *x.tape;
    Matrix out = softmax_rows(t.value(x.id));
    const int xid = x.id;
    int id = t.push(out, [xid, y = out](Tape& tp, const Matrix& g) {
        Matrix gx(g.rows, g.cols);
        for (int i = 0; i < g.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < g.cols; ++j) {
                dot += g.at(i, j) * y.at(i, j);
            }
            for (int j = 0; j < g.cols; ++j) {
                gx.at(i, j) = y.at(i, j) * (g.at(i, j) - dot);
            }
        }
        tp.accumulate(xid, gx);
    });
    return Var{&t, id};
}

Var abs(Var x) {
    Tape& t = *x.tape;
    Matrix out = t.value(x.id);
    for (double& v : out.data) {
        v = std::fabs(v);
    }
    const int xid = x.id;
    int id = t.push(std::move(out), [xid](Tape& tp, const Matrix& g) {
        const Matrix& xv = tp.value(xid);
        Matrix gx = g;
        for (size_t i = 0; i < gx.data.size(); ++i) {
            const double v = xv.data[i];
            gx.data[i] *= v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        }
        tp.accumulate(xid, gx);
    });
    return Var{&t, id};
}

Var square(Var x) {
    Tape& t = *x.tape;
    Matrix out = t.value(x.id);
    for (double& v : out.data) {
        v = v * v;
    }
    const int xid = x.id;
    int id = t.push(std::move(out), [xid](Tape& tp, const Matrix& g) {
        const Matrix& xv = tp.value(xid);
        Matrix gx = g;
        for (size_t i = 0; i < gx.data.size(); ++i) {
            gx.data[i] *= 2.0 * xv.data[i];
        }
        tp.accumulate(xid, gx);
    });
    return Var{&t, id};
}

Var concat_cols(const std::vector<Var>& xs) {
    if (xs.empty()) {
        throw UsageError("concat_cols over an empty list");
    }
    Tape& t = *xs[0].tape;
    const int rows = xs[0].rows();
    int total = 0;
    std::vector<int> ids;
    std::vector<int> widths;
    ids.reserve(xs.size());
    widths.reserve(xs.size());
    for (Var v : xs) {
        check_same_tape(xs[0], v);
        if (v.rows() != rows) {
            throw DimError("concat_cols row count mismatch");
        }
        ids.push_back(v.id);
        widths.push_back(v.cols());
        total += v.cols();
    }
    Matrix out(rows, total);
    int off = 0;
    for (size_t k = 0; k < ids.size(); ++k) {
        const Matrix& src = t.value(ids[k]);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < widths[k]; ++j) {
                out.at(i, off + j) = src.at(i, j);
            }
        }
        off += widths[k];
    }
    int id = t.push(std::move(out), [ids, widths, rows](Tape& tp, const Matrix& g) {
        int o = 0;
        for (size_t k = 0; k < ids.size(); ++k) {
            Matrix gk(rows, widths[k]);
            for (int i = 0; i < rows; ++i) {
                for (int j = 0; j < widths[k]; ++j) {
                    gk.at(i, j) = g.at(i, o + j);
                }
            }
            tp.accumulate(ids[k], gk);
            o += widths[k];
        }
    });
    return Var{&t, id};
}

Var sum(Var x) {
    Tape& t = *x.tape;
    const Matrix& xv = t.value(x.id);
    double acc = 0.0;
    for (double v : xv.data) {
        acc += v;
    }
    Matrix out(1, 1);
    out.data[0] = acc;
    const int xid = x.id;
    const int rows = xv.rows;
    const int cols = xv.cols;
    int id = t.push(std::move(out), [xid, rows, cols](Tape& tp, const Matrix& g) {
        tp.accumulate(xid, Matrix::full(rows, cols, g.data[0]));
    });
    return Var{&t, id};
}

Var linear(Var x, Var weight, Var bias) {
    return add_rowvec(matmul(x, weight), bias);
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& targets) {
    Tape& t = *logits.tape;
    const Matrix& z = t.value(logits.id);
    const int batch = z.rows;
    const int classes = z.cols;
    if (static_cast<int>(targets.size()) != batch) {
        throw DimError("cross_entropy: target count does not match batch size");
    }
    for (int y : targets) {
        if (y < 0 || y >= classes) {
            throw LabelError("cross_entropy: target class " + std::to_string(y) + " out of range [0," +
                             std::to_string(classes) + ")");
        }
    }
    double total = 0.0;
    for (int i = 0; i < batch; ++i) {
        double mx = z.at(i, 0);
        for (int j = 1; j < classes; ++j) {
            mx = std::max(mx, z.at(i, j));
        }
        double se = 0.0;
        for (int j = 0; j < classes; ++j) {
            se += std::exp(z.at(i, j) - mx);
        }
        total += mx + std::log(se) - z.at(i, targets[static_cast<size_t>(i)]);
    }
    Matrix out(1, 1);
    out.data[0] = total / batch;
    const int zid = logits.id;
    int id = t.push(std::move(out), [zid, targets, batch](Tape& tp, const Matrix& g) {
        Matrix gz = softmax_rows(tp.value(zid));
        for (int i = 0; i < batch; ++i) {
            gz.at(i, targets[static_cast<size_t>(i)]) -= 1.0;
        }
        tp.accumulate(zid, scale(gz, g.data[0] / batch));
    });
    return Var{&t, id};
}

Var cross_entropy(Var logits, const std::vector<int>& targets) {
    const Matrix& z = logits.value();
    if (z.cols == 1) {
        if (static_cast<int>(targets.size()) != z.rows) {
            throw DimError("cross_entropy: target count does not match batch size");
        }
        Matrix t01(z.rows, 1);
        for (int i = 0; i < z.rows; ++i) {
            const int y = targets[static_cast<size_t>(i)];
            if (y != 0 && y != 1) {
                throw LabelError("cross_entropy: binary head target " + std::to_string(y) + " not in {0,1}");
            }
            t01.at(i, 0) = static_cast<double>(y);
        }
        return sigmoid_bce(logits, t01, Matrix::full(z.rows, 1, 1.0));
    }
    return softmax_cross_entropy(logits, targets);
}

Var sigmoid_bce(Var logits, const Matrix& targets, const Matrix& mask) {
    Tape& t = *logits.tape;
    const Matrix& z = t.value(logits.id);
    if (!z.same_shape(targets) || !z.same_shape(mask)) {
        throw DimError("sigmoid_bce shape mismatch");
    }
    double count = 0.0;
    for (double m : mask.data) {
        if (m != 0.0) {
            count += 1.0;
        }
    }
    if (count == 0.0) {
        throw ConfigError("sigmoid_bce: mask selects no entries");
    }
    double total = 0.0;
    for (size_t i = 0; i < z.data.size(); ++i) {
        if (mask.data[i] == 0.0) {
            continue;
        }
        const double zi = z.data[i];
        const double ti = targets.data[i];
        // max(z,0) - z*t + log(1 + exp(-|z|))
        total += std::max(zi, 0.0) - zi * ti + std::log1p(std::exp(-std::fabs(zi)));
    }
    Matrix out(1, 1);
    out.data[0] = total / count;
    const int zid = logits.id;
    int id = t.push(std::move(out), [zid, targets, mask, count](Tape& tp, const Matrix& g) {
        Matrix gz = sigmoid(tp.value(zid));
        for (size_t i = 0; i < gz.data.size(); ++i) {
            if (mask.data[i] == 0.0) {
                gz.data[i] = 0.0;
            } else {
                gz.data[i] = (gz.data[i] - targets.data[i]) * g.data[0] / count;
            }
        }
        tp.accumulate(zid, gz);
    });
    return Var{&t, id};
}

} // namespace licem
