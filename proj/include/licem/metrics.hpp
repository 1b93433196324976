#pragma once

#include <vector>

#include "licem/matrix.hpp"

namespace licem {

double task_accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// Macro-averaged concept F1: scores binarized at 0.5, per concept the F1 of
// the positive and of the negative class are averaged, then averaged across
// concepts. Unknown labels (< 0) are excluded; zero-division F1 counts as 0.
double macro_f1(const Matrix& scores, const Matrix& labels);

// Composite trapezoid over a strictly increasing grid.
double auc_trapezoid(const std::vector<double>& xs, const std::vector<double>& ys);

// Per-sample |#predicted-active - #truly-active| with scores binarized at
// 0.5; rows with any unknown label are skipped.
struct SparsityReport {
    double mean = 0.0;
    std::vector<double> per_sample;
};
SparsityReport sparsity_deviation(const Matrix& scores, const Matrix& labels);

} // namespace licem
