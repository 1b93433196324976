#include "licem/optim.hpp"

#include <cmath>

namespace licem {

int ParamStore::index_of(const std::string& name) const {
    for (size_t i = 0; i < items.size(); ++i) {
        if (items[i].name == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

Matrix& ParamStore::at(const std::string& name) {
    const int i = index_of(name);
    if (i < 0) {
        throw UsageError("unknown parameter: " + name);
    }
    return items[static_cast<size_t>(i)].value;
}

const Matrix& ParamStore::at(const std::string& name) const {
    const int i = index_of(name);
    if (i < 0) {
        throw UsageError("unknown parameter: " + name);
    }
    return items[static_cast<size_t>(i)].value;
}

size_t ParamStore::total_entries() const {
    size_t n = 0;
    for (const Param& p : items) {
        n += p.value.data.size();
    }
    return n;
}

double lr_at(const LrSchedule& schedule, int epoch) {
    if (epoch < 0) {
        throw UsageError("lr_at: negative epoch");
    }
    if (schedule.step_size <= 0) {
        throw ConfigError("lr schedule step_size must be positive");
    }
    return schedule.base_lr * std::pow(schedule.gamma, epoch / schedule.step_size);
}

void AdamW::step(ParamStore& params, const std::vector<Matrix>& grads, double lr) {
    if (grads.size() != params.items.size()) {
        throw DimError("adamw_step: gradient count does not match parameter count");
    }
    if (m_.empty()) {
        m_.resize(params.items.size());
        v_.resize(params.items.size());
        for (size_t i = 0; i < params.items.size(); ++i) {
            const Matrix& w = params.items[i].value;
            m_[i] = Matrix(w.rows, w.cols);
            v_[i] = Matrix(w.rows, w.cols);
        }
    }
    for (size_t i = 0; i < params.items.size(); ++i) {
        if (!params.items[i].value.same_shape(grads[i])) {
            throw DimError("adamw_step: gradient shape mismatch for " + params.items[i].name);
        }
        if (!grads[i].all_finite()) {
            throw TrainFault("non-finite gradient for parameter " + params.items[i].name);
        }
    }
    t_ += 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.items.size(); ++i) {
        Param& p = params.items[i];
        const Matrix& g = grads[i];
        Matrix& m = m_[i];
        Matrix& v = v_[i];
        const bool decay = !p.is_bias && cfg_.weight_decay != 0.0;
        for (size_t j = 0; j < p.value.data.size(); ++j) {
            const double gj = g.data[j];
            m.data[j] = cfg_.beta1 * m.data[j] + (1.0 - cfg_.beta1) * gj;
            v.data[j] = cfg_.beta2 * v.data[j] + (1.0 - cfg_.beta2) * gj * gj;
            const double mhat = m.data[j] / bc1;
            const double vhat = v.data[j] / bc2;
            double w = p.value.data[j];
            if (decay) {
                w -= lr * cfg_.weight_decay * w;
            }
            w -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            p.value.data[j] = w;
        }
    }
}

} // namespace licem
