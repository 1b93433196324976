#pragma once

#include <string>
#include <vector>

#include "licem/matrix.hpp"

namespace licem {

// Named parameter matrix. is_bias excludes the entry from weight decay.
struct Param {
    std::string name;
    Matrix value;
    bool is_bias = false;
};

struct ParamStore {
    std::vector<Param> items;

    int index_of(const std::string& name) const;
    Matrix& at(const std::string& name);
    const Matrix& at(const std::string& name) const;
    size_t total_entries() const;
};

// lr(epoch) = base_lr * gamma^floor(epoch / step_size)
struct LrSchedule {
    double base_lr = 1e-3;
    double gamma = 0.1;
    int step_size = 10;
};

double lr_at(const LrSchedule& schedule, int epoch);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// Decoupled-weight-decay Adam. Decay multiplies into weights each step and
// never touches entries flagged is_bias.
class AdamW {
public:
    explicit AdamW(AdamConfig cfg = {}) : cfg_(cfg) {}

    // grads aligned with params.items by index. Throws TrainFault naming the
    // parameter on a non-finite gradient.
    void step(ParamStore& params, const std::vector<Matrix>& grads, double lr);

    long long step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    long long t_ = 0;
};

} // namespace licem
