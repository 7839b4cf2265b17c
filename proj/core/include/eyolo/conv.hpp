#pragma once

#include "eyolo/tensor.hpp"

namespace eyolo {

/// 2D convolution parameters. Kernel layout is (out_ch, in_ch, kh, kw);
/// bias is (1, out_ch, 1, 1). Only the kernel sizes the network uses are
/// allowed: 1x1 (stride 1) and 3x3 (stride 1 or 2).
struct ConvParams {
    Tensor kernel;
    Tensor bias;
    int stride = 1;
    int padding = 0;

    int out_channels() const { return kernel.shape().n; }
    int in_channels() const { return kernel.shape().c; }

    /// Builds same-padding parameters (padding = (k-1)/2) and validates
    /// the kernel-size/stride invariants.
    static ConvParams same(Tensor kernel, Tensor bias, int stride = 1);
};

/// Same-padding 2D convolution. Output spatial dims are input/stride.
Tensor conv2d(const Tensor& input, const ConvParams& params);

} // namespace eyolo
