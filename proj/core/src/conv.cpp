#include "eyolo/conv.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "autodiff_internal.hpp"
#include "eyolo/errors.hpp"

namespace eyolo {

using detail::Node;
using detail::OpAccess;

namespace {

void validate_params(const ConvParams& p) {
    if (!p.kernel.defined() || !p.bias.defined())
        throw ConfigError("conv2d: kernel and bias must be defined");
    const Shape4 k = p.kernel.shape();
    const Shape4 b = p.bias.shape();
    if ((k.h != 1 && k.h != 3) || (k.w != 1 && k.w != 3) || k.h != k.w)
        throw ConfigError("conv2d: kernel size must be 1x1 or 3x3, got " + to_string(k));
    if (p.stride != 1 && p.stride != 2)
        throw ConfigError("conv2d: stride must be 1 or 2, got " + std::to_string(p.stride));
    if (p.stride == 2 && k.h != 3)
        throw ConfigError("conv2d: stride 2 requires a 3x3 kernel, got " + to_string(k));
    if (p.padding != (k.h - 1) / 2)
        throw ConfigError("conv2d: padding " + std::to_string(p.padding) +
                          " is not same-padding for kernel " + to_string(k));
    if (b.n != 1 || b.c != k.n || b.h != 1 || b.w != 1)
        throw ConfigError("conv2d: bias shape " + to_string(b) + " does not match " +
                          std::to_string(k.n) + " output channels");
}

// cols is [in_ch*kh*kw] x [oh*ow], row-major.
void im2col(const double* src, int c, int h, int w, int k, int stride, int pad, int oh, int ow,
            double* cols) {
    const std::size_t m = static_cast<std::size_t>(oh) * ow;
    for (int ic = 0; ic < c; ++ic) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                double* row = cols + ((static_cast<std::size_t>(ic) * k + ky) * k + kx) * m;
                const double* plane = src + static_cast<std::size_t>(ic) * h * w;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    double* out = row + static_cast<std::size_t>(oy) * ow;
                    if (iy < 0 || iy >= h) {
                        std::fill_n(out, ow, 0.0);
                        continue;
                    }
                    const double* in_row = plane + static_cast<std::size_t>(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        out[ox] = (ix >= 0 && ix < w) ? in_row[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// Scatter-add of cols back into the image; inverse access pattern of im2col.
void col2im_accumulate(const double* cols, int c, int h, int w, int k, int stride, int pad, int oh,
                       int ow, double* dst) {
    const std::size_t m = static_cast<std::size_t>(oh) * ow;
#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < c; ++ic) {
        double* plane = dst + static_cast<std::size_t>(ic) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* row = cols + ((static_cast<std::size_t>(ic) * k + ky) * k + kx) * m;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    const double* in_row = row + static_cast<std::size_t>(oy) * ow;
                    double* out_row = plane + static_cast<std::size_t>(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < w) out_row[ix] += in_row[ox];
                    }
                }
            }
        }
    }
}

// out[oc][:] = bias[oc] + sum_k W[oc][k] * cols[k][:]
// Deterministic: each output row is accumulated sequentially over k.
void gemm_forward(const double* weights, const double* bias, const double* cols, int out_ch,
                  std::size_t kdim, std::size_t m, double* out) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < out_ch; ++oc) {
        double* orow = out + static_cast<std::size_t>(oc) * m;
        std::fill_n(orow, m, bias[oc]);
        const double* wrow = weights + static_cast<std::size_t>(oc) * kdim;
        for (std::size_t k = 0; k < kdim; ++k) {
            const double wv = wrow[k];
            if (wv == 0.0) continue;
            const double* crow = cols + k * m;
            for (std::size_t i = 0; i < m; ++i) orow[i] += wv * crow[i];
        }
    }
}

// dW[oc][k] += sum_m dOut[oc][m] * cols[k][m]
void gemm_weight_grad(const double* dout, const double* cols, int out_ch, std::size_t kdim,
                      std::size_t m, double* dweights) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < out_ch; ++oc) {
        const double* grow = dout + static_cast<std::size_t>(oc) * m;
        double* wrow = dweights + static_cast<std::size_t>(oc) * kdim;
        for (std::size_t k = 0; k < kdim; ++k) {
            const double* crow = cols + k * m;
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += grow[i] * crow[i];
            wrow[k] += acc;
        }
    }
}

// dcols[k][m] = sum_oc W[oc][k] * dOut[oc][m]
void gemm_input_grad(const double* weights, const double* dout, int out_ch, std::size_t kdim,
                     std::size_t m, double* dcols) {
    std::fill_n(dcols, kdim * m, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(kdim); ++k) {
        double* crow = dcols + static_cast<std::size_t>(k) * m;
        for (int oc = 0; oc < out_ch; ++oc) {
            const double wv = weights[static_cast<std::size_t>(oc) * kdim + k];
            if (wv == 0.0) continue;
            const double* grow = dout + static_cast<std::size_t>(oc) * m;
            for (std::size_t i = 0; i < m; ++i) crow[i] += wv * grow[i];
        }
    }
}

} // namespace

ConvParams ConvParams::same(Tensor kernel, Tensor bias, int stride) {
    ConvParams p;
    p.padding = (kernel.shape().h - 1) / 2;
    p.kernel = std::move(kernel);
    p.bias = std::move(bias);
    p.stride = stride;
    validate_params(p);
    return p;
}

Tensor conv2d(const Tensor& input, const ConvParams& params) {
    detail::require_defined(input, "conv2d");
    validate_params(params);
    detail::check_finite(input.values(), "conv2d", "input");
    detail::check_finite(params.kernel.values(), "conv2d", "kernel");
    detail::check_finite(params.bias.values(), "conv2d", "bias");

    const Shape4 in = input.shape();
    const Shape4 ks = params.kernel.shape();
    if (in.c != ks.c)
        throw DimensionError("conv2d: input " + to_string(in) + " has " + std::to_string(in.c) +
                             " channels but kernel " + to_string(ks) + " expects " +
                             std::to_string(ks.c));
    if (in.h % params.stride != 0 || in.w % params.stride != 0)
        throw DimensionError("conv2d: spatial dims of " + to_string(in) +
                             " not divisible by stride " + std::to_string(params.stride));

    const int k = ks.h;
    const int stride = params.stride;
    const int pad = params.padding;
    const int oh = in.h / stride;
    const int ow = in.w / stride;
    const Shape4 os{in.n, ks.n, oh, ow};

    const std::size_t m = static_cast<std::size_t>(oh) * ow;
    const std::size_t kdim = static_cast<std::size_t>(in.c) * k * k;
    const bool pointwise = (k == 1 && stride == 1);

    const auto xv = input.values();
    const double* weights = params.kernel.values().data();
    const double* bias = params.bias.values().data();

    std::vector<double> out(os.count());
    std::vector<double> cols;
    if (!pointwise) cols.resize(kdim * m);
    for (int n = 0; n < in.n; ++n) {
        const double* src = xv.data() + static_cast<std::size_t>(n) * in.c * in.h * in.w;
        const double* c = src;
        if (!pointwise) {
            im2col(src, in.c, in.h, in.w, k, stride, pad, oh, ow, cols.data());
            c = cols.data();
        }
        gemm_forward(weights, bias, c, ks.n, kdim, m,
                     out.data() + static_cast<std::size_t>(n) * ks.n * m);
    }

    Tensor result = OpAccess::make(os, std::move(out));
    detail::record(
        result, {OpAccess::node(input), OpAccess::node(params.kernel), OpAccess::node(params.bias)},
        [&](Node* self) {
            return [self, xn = OpAccess::node(input), wn = OpAccess::node(params.kernel),
                    bn = OpAccess::node(params.bias), in, ks, os, k, stride, pad, m, kdim,
                    pointwise]() {
                const int oh = os.h, ow = os.w;
                const double* weights = wn->values.data();
                std::vector<double> cols;
                std::vector<double> dcols;
                if (!pointwise) cols.resize(kdim * m);
                if (xn->requires_grad) xn->ensure_grad();
                if (wn->requires_grad) wn->ensure_grad();
                if (bn->requires_grad) bn->ensure_grad();
                if (xn->requires_grad && !pointwise) dcols.resize(kdim * m);

                for (int n = 0; n < in.n; ++n) {
                    const double* dout = self->grad.data() + static_cast<std::size_t>(n) * ks.n * m;
                    const double* src =
                        xn->values.data() + static_cast<std::size_t>(n) * in.c * in.h * in.w;

                    if (bn->requires_grad) {
                        for (int oc = 0; oc < ks.n; ++oc) {
                            const double* grow = dout + static_cast<std::size_t>(oc) * m;
                            double acc = 0.0;
                            for (std::size_t i = 0; i < m; ++i) acc += grow[i];
                            bn->grad[oc] += acc;
                        }
                    }
                    if (wn->requires_grad) {
                        const double* c = src;
                        if (!pointwise) {
                            im2col(src, in.c, in.h, in.w, k, stride, pad, oh, ow, cols.data());
                            c = cols.data();
                        }
                        gemm_weight_grad(dout, c, ks.n, kdim, m, wn->grad.data());
                    }
                    if (xn->requires_grad) {
                        double* dst =
                            xn->grad.data() + static_cast<std::size_t>(n) * in.c * in.h * in.w;
                        if (pointwise) {
                            // cols are the input itself, so dcols is dInput directly.
                            std::vector<double> tmp(kdim * m);
                            gemm_input_grad(weights, dout, ks.n, kdim, m, tmp.data());
                            for (std::size_t i = 0; i < tmp.size(); ++i) dst[i] += tmp[i];
                        } else {
                            gemm_input_grad(weights, dout, ks.n, kdim, m, dcols.data());
                            col2im_accumulate(dcols.data(), in.c, in.h, in.w, k, stride, pad, oh,
                                              ow, dst);
                        }
                    }
                }
            };
        });
    return result;
}

} // namespace eyolo
