#include "licem/metrics.hpp"

#include <cmath>

namespace licem {

double task_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) {
        throw DimError("task_accuracy: prediction and label counts differ");
    }
    if (predictions.empty()) {
        throw UsageError("task_accuracy: empty input");
    }
    size_t hits = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == labels[i]) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

namespace {

double f1_from_counts(long long tp, long long fp, long long fn) {
    const long long denom = 2 * tp + fp + fn;
    if (denom == 0) {
        return 0.0;
    }
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

} // namespace

double macro_f1(const Matrix& scores, const Matrix& labels) {
    if (!scores.same_shape(labels)) {
        throw DimError("macro_f1: score and label shapes differ");
    }
    double acc = 0.0;
    int counted = 0;
    for (int j = 0; j < scores.cols; ++j) {
        long long tp = 0, fp = 0, fn = 0, tn = 0;
        bool any = false;
        for (int i = 0; i < scores.rows; ++i) {
            const double label = labels.at(i, j);
            if (label < 0.0) {
                continue;
            }
            any = true;
            const bool pred = scores.at(i, j) > 0.5;
            const bool truth = label > 0.5;
            if (pred && truth) {
                ++tp;
            } else if (pred && !truth) {
                ++fp;
            } else if (!pred && truth) {
                ++fn;
            } else {
                ++tn;
            }
        }
        if (!any) {
            continue;
        }
        // positive-class F1 plus the F1 of the inverted problem
        const double f1_pos = f1_from_counts(tp, fp, fn);
        const double f1_neg = f1_from_counts(tn, fn, fp);
        acc += 0.5 * (f1_pos + f1_neg);
        ++counted;
    }
    if (counted == 0) {
        return 0.0;
    }
    return acc / counted;
}

double auc_trapezoid(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) {
        throw DimError("auc_trapezoid: xs and ys lengths differ");
    }
    if (xs.size() < 2) {
        return 0.0;
    }
    for (size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) {
            throw UsageError("auc_trapezoid: xs must be strictly increasing");
        }
    }
    double area = 0.0;
    for (size_t i = 1; i < xs.size(); ++i) {
        area += (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]) * 0.5;
    }
    return area;
}

SparsityReport sparsity_deviation(const Matrix& scores, const Matrix& labels) {
    if (!scores.same_shape(labels)) {
        throw DimError("sparsity_deviation: score and label shapes differ");
    }
    SparsityReport report;
    double total = 0.0;
    for (int i = 0; i < scores.rows; ++i) {
        int predicted_active = 0;
        int true_active = 0;
        bool unknown = false;
        for (int j = 0; j < scores.cols; ++j) {
            if (labels.at(i, j) < 0.0) {
                unknown = true;
                break;
            }
            if (scores.at(i, j) > 0.5) {
                ++predicted_active;
            }
            if (labels.at(i, j) > 0.5) {
                ++true_active;
            }
        }
        if (unknown) {
            continue;
        }
        const double delta = std::fabs(static_cast<double>(predicted_active - true_active));
        report.per_sample.push_back(delta);
        total += delta;
    }
    report.mean = report.per_sample.empty() ? 0.0 : total / static_cast<double>(report.per_sample.size());
    return report;
}

} // namespace licem
