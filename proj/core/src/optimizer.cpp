#include "eyolo/optimizer.hpp"

#include <cmath>

#include "eyolo/errors.hpp"

namespace eyolo {

AdamOptimizer::AdamOptimizer(std::span<const NamedParam> params, AdamConfig cfg) : cfg_(cfg) {
    slots_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        slots_[i].m.assign(params[i].tensor.size(), 0.0);
        slots_[i].v.assign(params[i].tensor.size(), 0.0);
    }
}

void AdamOptimizer::step(std::span<NamedParam> params) {
    if (params.size() != slots_.size())
        throw StateError("AdamOptimizer::step: parameter list size changed");
    ++step_count_;
    const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));

    for (std::size_t i = 0; i < params.size(); ++i) {
        NamedParam& p = params[i];
        if (!p.tensor.has_grad()) continue;
        const auto g = p.tensor.grad();
        auto w = p.tensor.values_mut();
        Slot& slot = slots_[i];
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (!std::isfinite(g[j]))
                throw TrainingError("NaN gradient in parameter \"" + p.name + "\"");
            slot.m[j] = cfg_.beta1 * slot.m[j] + (1.0 - cfg_.beta1) * g[j];
            slot.v[j] = cfg_.beta2 * slot.v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
            const double m_hat = slot.m[j] / bias1;
            const double v_hat = slot.v[j] / bias2;
            w[j] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
        }
    }
}

std::vector<NamedArray> AdamOptimizer::state_arrays(std::span<const NamedParam> params) const {
    std::vector<NamedArray> arrays;
    arrays.push_back({"optim.step", {1}, {static_cast<double>(step_count_)}});
    for (std::size_t i = 0; i < params.size(); ++i) {
        arrays.push_back({"optim." + params[i].name + ".m",
                          {static_cast<std::uint64_t>(slots_[i].m.size())}, slots_[i].m});
        arrays.push_back({"optim." + params[i].name + ".v",
                          {static_cast<std::uint64_t>(slots_[i].v.size())}, slots_[i].v});
    }
    return arrays;
}

void AdamOptimizer::load_state(std::span<const NamedParam> params, const Checkpoint& ckpt) {
    const NamedArray* step = ckpt.find("optim.step");
    if (!step) throw StateError("checkpoint has no optimizer state");
    step_count_ = static_cast<long>(step->data.at(0));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const NamedArray* m = ckpt.find("optim." + params[i].name + ".m");
        const NamedArray* v = ckpt.find("optim." + params[i].name + ".v");
        if (!m || !v)
            throw StateError("checkpoint is missing optimizer state for \"" + params[i].name +
                             "\"");
        if (m->data.size() != slots_[i].m.size() || v->data.size() != slots_[i].v.size())
            throw DimensionError("optimizer state size mismatch for \"" + params[i].name + "\"");
        slots_[i].m = m->data;
        slots_[i].v = v->data;
    }
}

} // namespace eyolo
