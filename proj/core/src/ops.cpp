#include "eyolo/ops.hpp"

#include <algorithm>
#include <cmath>

#include "autodiff_internal.hpp"
#include "eyolo/errors.hpp"

namespace eyolo {

using detail::Node;
using detail::OpAccess;

namespace {

void check_inputs(const Tensor& a, const char* op, const char* arg) {
    detail::require_defined(a, op);
    detail::check_finite(a.values(), op, arg);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!(a.shape() == b.shape()))
        throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                             " vs " + to_string(b.shape()));
}

} // namespace

// Logits are saturated at +-30 before evaluation. The true sigmoid
// differs by under 1e-13 out there, but capping ends the no-object loss
// reward for ever-deeper saturation and leaves saturated units a usable
// derivative to recover with.
constexpr double kLogitSaturation = 30.0;

double sigmoid_scalar(double x) {
    const double c = std::clamp(x, -kLogitSaturation, kLogitSaturation);
    return 1.0 / (1.0 + std::exp(-c));
}

double logit_scalar(double p, double eps) {
    const double q = std::clamp(p, eps, 1.0 - eps);
    return std::log(q / (1.0 - q));
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_inputs(a, "add", "lhs");
    check_inputs(b, "add", "rhs");
    check_same_shape(a, b, "add");

    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];

    Tensor result = OpAccess::make(a.shape(), std::move(out));
    detail::record(result, {OpAccess::node(a), OpAccess::node(b)}, [&](Node* self) {
        return [self, an = OpAccess::node(a), bn = OpAccess::node(b)]() {
            detail::accumulate(*an, self->grad);
            detail::accumulate(*bn, self->grad);
        };
    });
    return result;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_inputs(a, "sub", "lhs");
    check_inputs(b, "sub", "rhs");
    check_same_shape(a, b, "sub");

    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];

    Tensor result = OpAccess::make(a.shape(), std::move(out));
    detail::record(result, {OpAccess::node(a), OpAccess::node(b)}, [&](Node* self) {
        return [self, an = OpAccess::node(a), bn = OpAccess::node(b)]() {
            detail::accumulate(*an, self->grad);
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < self->grad.size(); ++i) bn->grad[i] -= self->grad[i];
            }
        };
    });
    return result;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_inputs(a, "mul", "lhs");
    check_inputs(b, "mul", "rhs");
    check_same_shape(a, b, "mul");

    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];

    Tensor result = OpAccess::make(a.shape(), std::move(out));
    detail::record(result, {OpAccess::node(a), OpAccess::node(b)}, [&](Node* self) {
        return [self, an = OpAccess::node(a), bn = OpAccess::node(b)]() {
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < self->grad.size(); ++i)
                    an->grad[i] += self->grad[i] * bn->values[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < self->grad.size(); ++i)
                    bn->grad[i] += self->grad[i] * an->values[i];
            }
        };
    });
    return result;
}

Tensor scale(const Tensor& x, double factor) {
    check_inputs(x, "scale", "input");
    if (!std::isfinite(factor)) throw NumericError("scale: non-finite factor");

    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;

    Tensor result = OpAccess::make(x.shape(), std::move(out));
    detail::record(result, {OpAccess::node(x)}, [&](Node* self) {
        return [self, xn = OpAccess::node(x), factor]() {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < self->grad.size(); ++i)
                xn->grad[i] += self->grad[i] * factor;
        };
    });
    return result;
}

Tensor sum(const Tensor& x) {
    check_inputs(x, "sum", "input");

    double total = 0.0;
    for (double v : x.values()) total += v;

    Tensor result = OpAccess::make(Shape4{1, 1, 1, 1}, {total});
    detail::record(result, {OpAccess::node(x)}, [&](Node* self) {
        return [self, xn = OpAccess::node(x)]() {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            const double g = self->grad[0];
            for (std::size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += g;
        };
    });
    return result;
}

Tensor sigmoid(const Tensor& x) {
    check_inputs(x, "sigmoid", "input");

    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(xv[i]);

    Tensor result = OpAccess::make(x.shape(), std::move(out));
    detail::record(result, {OpAccess::node(x)}, [&](Node* self) {
        return [self, xn = OpAccess::node(x)]() {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < self->grad.size(); ++i) {
                // sigma(x)*sigma(-x) from the (saturated) input, never
                // from the output: y*(1-y) rounds to an exact zero in
                // saturation and would freeze the unit permanently.
                const double d = sigmoid_scalar(xn->values[i]) * sigmoid_scalar(-xn->values[i]);
                xn->grad[i] += self->grad[i] * d;
            }
        };
    });
    return result;
}

Tensor leaky_relu(const Tensor& x, double negative_slope) {
    check_inputs(x, "leaky_relu", "input");

    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = xv[i] >= 0.0 ? xv[i] : negative_slope * xv[i];

    Tensor result = OpAccess::make(x.shape(), std::move(out));
    detail::record(result, {OpAccess::node(x)}, [&](Node* self) {
        return [self, xn = OpAccess::node(x), negative_slope]() {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < self->grad.size(); ++i) {
                const double s = xn->values[i] >= 0.0 ? 1.0 : negative_slope;
                xn->grad[i] += self->grad[i] * s;
            }
        };
    });
    return result;
}

Tensor upsample_nearest_2x(const Tensor& x) {
    check_inputs(x, "upsample_nearest_2x", "input");

    const Shape4 in = x.shape();
    const Shape4 os{in.n, in.c, 2 * in.h, 2 * in.w};
    const auto xv = x.values();
    std::vector<double> out(os.count());
    const std::size_t planes = static_cast<std::size_t>(in.n) * in.c;
    for (std::size_t p = 0; p < planes; ++p) {
        const double* src = xv.data() + p * in.h * in.w;
        double* dst = out.data() + p * os.h * os.w;
        for (int y = 0; y < in.h; ++y)
            for (int xcol = 0; xcol < in.w; ++xcol) {
                const double v = src[y * in.w + xcol];
                double* d = dst + (2 * y) * os.w + 2 * xcol;
                d[0] = v;
                d[1] = v;
                d[os.w] = v;
                d[os.w + 1] = v;
            }
    }

    Tensor result = OpAccess::make(os, std::move(out));
    detail::record(result, {OpAccess::node(x)}, [&](Node* self) {
        return [self, xn = OpAccess::node(x), in, os]() {
            if (!xn->requires_grad) return;
            xn->ensure_grad();
            const std::size_t planes = static_cast<std::size_t>(in.n) * in.c;
            for (std::size_t p = 0; p < planes; ++p) {
                const double* og = self->grad.data() + p * os.h * os.w;
                double* ig = xn->grad.data() + p * in.h * in.w;
                for (int y = 0; y < in.h; ++y)
                    for (int xcol = 0; xcol < in.w; ++xcol) {
                        const double* g = og + (2 * y) * os.w + 2 * xcol;
                        ig[y * in.w + xcol] += g[0] + g[1] + g[os.w] + g[os.w + 1];
                    }
            }
        };
    });
    return result;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    check_inputs(a, "concat_channels", "lhs");
    check_inputs(b, "concat_channels", "rhs");
    const Shape4 as = a.shape();
    const Shape4 bs = b.shape();
    if (as.n != bs.n || as.h != bs.h || as.w != bs.w)
        throw DimensionError("concat_channels: batch/spatial mismatch " + to_string(as) + " vs " +
                             to_string(bs));

    const Shape4 os{as.n, as.c + bs.c, as.h, as.w};
    const std::size_t plane = static_cast<std::size_t>(as.h) * as.w;
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(os.count());
    for (int n = 0; n < os.n; ++n) {
        double* dst = out.data() + static_cast<std::size_t>(n) * os.c * plane;
        std::copy_n(av.data() + static_cast<std::size_t>(n) * as.c * plane, as.c * plane, dst);
        std::copy_n(bv.data() + static_cast<std::size_t>(n) * bs.c * plane, bs.c * plane,
                    dst + as.c * plane);
    }

    Tensor result = OpAccess::make(os, std::move(out));
    detail::record(result, {OpAccess::node(a), OpAccess::node(b)}, [&](Node* self) {
        return [self, an = OpAccess::node(a), bn = OpAccess::node(b), as, bs, os, plane]() {
            for (int n = 0; n < os.n; ++n) {
                const double* og = self->grad.data() + static_cast<std::size_t>(n) * os.c * plane;
                if (an->requires_grad) {
                    an->ensure_grad();
                    double* ag = an->grad.data() + static_cast<std::size_t>(n) * as.c * plane;
                    for (std::size_t i = 0; i < static_cast<std::size_t>(as.c) * plane; ++i)
                        ag[i] += og[i];
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    double* bg = bn->grad.data() + static_cast<std::size_t>(n) * bs.c * plane;
                    const double* obg = og + static_cast<std::size_t>(as.c) * plane;
                    for (std::size_t i = 0; i < static_cast<std::size_t>(bs.c) * plane; ++i)
                        bg[i] += obg[i];
                }
            }
        };
    });
    return result;
}

} // namespace eyolo
