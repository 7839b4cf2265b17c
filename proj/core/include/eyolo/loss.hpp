#pragma once

#include <span>

#include "eyolo/grid_codec.hpp"
#include "eyolo/tensor.hpp"

namespace eyolo {

struct LossConfig {
    double lambda_coord = 1.0;
    double lambda_noobj = 10.0;

    void validate() const;
};

/// Per-term view of the training loss. All terms are sums of weighted
/// squared errors over grid cells, averaged over the batch.
struct LossBreakdown {
    double center_term = 0.0;
    double size_term = 0.0;
    double conf_obj_term = 0.0;
    double conf_noobj_term = 0.0;
    double class_term = 0.0;
    double total = 0.0;

    /// Scalar (1,1,1,1) tensor carrying the recorded graph; feed to
    /// backward() to populate weight gradients.
    Tensor total_tensor;
};

/// Squared-error detection loss over a decoded prediction tensor
/// (batch, S*(8+K), S, S) against one TargetGrid per batch element.
///
/// Occupied cells contribute center, size, confidence-to-1 and class
/// terms; empty cells contribute only the confidence-to-0 term weighted
/// by lambda_noobj. Terms are summed over cells and averaged over batch.
LossBreakdown compute_loss(const Tensor& decoded, std::span<const TargetGrid> targets,
                           const LossConfig& cfg, const GridSpec& spec);

} // namespace eyolo
