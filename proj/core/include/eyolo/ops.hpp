#pragma once

// Differentiable tensor operations. The set is intentionally limited to
// what the detection network and its loss consume.

#include "eyolo/tensor.hpp"

namespace eyolo {

/// Elementwise sum; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);

/// Elementwise difference a - b.
Tensor sub(const Tensor& a, const Tensor& b);

/// Elementwise (Hadamard) product.
Tensor mul(const Tensor& a, const Tensor& b);

/// Multiply every element by a scalar.
Tensor scale(const Tensor& x, double factor);

/// Reduce to a (1,1,1,1) scalar by summation in flat order.
Tensor sum(const Tensor& x);

/// Logistic function, saturated at inputs of +-30 (where it differs from
/// the exact value by under 1e-13). Saturated units keep a small nonzero
/// derivative so gradient descent can pull them back.
Tensor sigmoid(const Tensor& x);

Tensor leaky_relu(const Tensor& x, double negative_slope = 0.1);

/// Nearest-neighbour 2x upsampling: (b,c,h,w) -> (b,c,2h,2w).
Tensor upsample_nearest_2x(const Tensor& x);

/// Channel concatenation; batch and spatial dims must match. a's channels
/// come first.
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Same saturation policy as the sigmoid op.
double sigmoid_scalar(double x);

/// Inverse sigmoid; the argument is clamped to [eps, 1-eps].
double logit_scalar(double p, double eps = 1e-12);

} // namespace eyolo
