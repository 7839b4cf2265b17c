#pragma once

#include <span>
#include <vector>

#include "eyolo/checkpoint.hpp"
#include "eyolo/network.hpp"

namespace eyolo {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. Moment buffers are
/// keyed by parameter order, which is stable for a given network.
class AdamOptimizer {
public:
    AdamOptimizer(std::span<const NamedParam> params, AdamConfig cfg = {});

    /// Applies one update from the gradients currently on the parameters.
    /// Parameters without a gradient are skipped; a NaN/Inf gradient
    /// raises TrainingError naming the parameter.
    void step(std::span<NamedParam> params);

    long step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

    /// Moment buffers as checkpoint arrays (names prefixed "optim."),
    /// plus the step counter, for resumable training.
    std::vector<NamedArray> state_arrays(std::span<const NamedParam> params) const;
    void load_state(std::span<const NamedParam> params, const Checkpoint& ckpt);

private:
    struct Slot {
        std::vector<double> m, v;
    };
    AdamConfig cfg_;
    std::vector<Slot> slots_;
    long step_count_ = 0;
};

} // namespace eyolo
