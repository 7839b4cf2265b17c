#pragma once

// Internal autodiff node machinery shared by the op implementations.
// Not installed; the public surface is tensor.hpp / ops.hpp / conv.hpp.

#include <functional>
#include <memory>
#include <vector>

#include "eyolo/errors.hpp"
#include "eyolo/tensor.hpp"

namespace eyolo::detail {

struct Node {
    Shape4 shape;
    std::vector<double> values;
    std::vector<double> grad; // empty until backward reaches this node
    bool requires_grad = false;
    bool consumed = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backprop; // reads this->grad, accumulates into parents

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
};

struct OpAccess {
    static const std::shared_ptr<Node>& node(const Tensor& t) { return t.node_; }

    static Tensor wrap(std::shared_ptr<Node> node) {
        Tensor t;
        t.node_ = std::move(node);
        return t;
    }

    static Tensor make(Shape4 shape, std::vector<double> values) {
        auto node = std::make_shared<Node>();
        node->shape = shape;
        node->values = std::move(values);
        return wrap(std::move(node));
    }
};

/// Throws NumericError if any element is NaN or Inf.
void check_finite(std::span<const double> values, const char* op, const char* arg);

/// Requires a defined tensor; throws StateError naming the op otherwise.
void require_defined(const Tensor& t, const char* op);

inline bool wants_grad(const Tensor& t) {
    return grad_recording_enabled() && OpAccess::node(t)->requires_grad;
}

/// Marks `out` as an op result over `parents` and installs the backward
/// closure produced by `make_backprop(out_node)`. No-op when recording is
/// off or no parent participates in a gradient path.
template <typename F>
void record(Tensor& out, std::vector<std::shared_ptr<Node>> parents, F&& make_backprop) {
    if (!grad_recording_enabled()) return;
    bool any = false;
    for (const auto& p : parents)
        if (p->requires_grad) any = true;
    if (!any) return;
    Node* out_node = OpAccess::node(out).get();
    out_node->requires_grad = true;
    out_node->parents = std::move(parents);
    out_node->backprop = make_backprop(out_node);
}

/// Adds og (scaled elementwise by nothing) into the parent's grad buffer
/// when the parent participates in a gradient path.
inline void accumulate(Node& parent, std::span<const double> contribution) {
    if (!parent.requires_grad) return;
    parent.ensure_grad();
    double* g = parent.grad.data();
    for (std::size_t i = 0; i < contribution.size(); ++i) g[i] += contribution[i];
}

} // namespace eyolo::detail
