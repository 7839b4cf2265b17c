#include "eyolo/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "autodiff_internal.hpp"
#include "eyolo/errors.hpp"

namespace eyolo {

namespace {
thread_local bool g_grad_enabled = true;

std::size_t flat_index(const Shape4& s, int n, int c, int y, int x) {
    if (n < 0 || n >= s.n || c < 0 || c >= s.c || y < 0 || y >= s.h || x < 0 || x >= s.w)
        throw RangeError("tensor index (" + std::to_string(n) + "," + std::to_string(c) + "," +
                         std::to_string(y) + "," + std::to_string(x) + ") outside shape " +
                         to_string(s));
    return ((static_cast<std::size_t>(n) * s.c + c) * s.h + y) * s.w + x;
}
} // namespace

std::string to_string(const Shape4& s) {
    std::ostringstream os;
    os << "(" << s.n << ", " << s.c << ", " << s.h << ", " << s.w << ")";
    return os.str();
}

namespace detail {

void check_finite(std::span<const double> values, const char* op, const char* arg) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw NumericError(std::string(op) + ": non-finite value in " + arg + " at flat index " +
                               std::to_string(i));
    }
}

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw StateError(std::string(op) + ": undefined tensor");
}

} // namespace detail

bool grad_recording_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

static void validate_shape(const Shape4& shape) {
    if (shape.n <= 0 || shape.c <= 0 || shape.h <= 0 || shape.w <= 0)
        throw DimensionError("tensor shape must be positive in every dimension, got " +
                             to_string(shape));
}

Tensor Tensor::zeros(Shape4 shape, bool requires_grad) {
    validate_shape(shape);
    Tensor t = detail::OpAccess::make(shape, std::vector<double>(shape.count(), 0.0));
    t.node_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::full(Shape4 shape, double value, bool requires_grad) {
    validate_shape(shape);
    if (!std::isfinite(value)) throw NumericError("Tensor::full: non-finite fill value");
    Tensor t = detail::OpAccess::make(shape, std::vector<double>(shape.count(), value));
    t.node_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::from_values(Shape4 shape, std::vector<double> values, bool requires_grad) {
    validate_shape(shape);
    if (values.size() != shape.count())
        throw DimensionError("Tensor::from_values: " + std::to_string(values.size()) +
                             " values for shape " + to_string(shape) + " (expected " +
                             std::to_string(shape.count()) + ")");
    detail::check_finite(values, "Tensor::from_values", "values");
    Tensor t = detail::OpAccess::make(shape, std::move(values));
    t.node_->requires_grad = requires_grad;
    return t;
}

Shape4 Tensor::shape() const {
    detail::require_defined(*this, "Tensor::shape");
    return node_->shape;
}

std::size_t Tensor::size() const {
    detail::require_defined(*this, "Tensor::size");
    return node_->values.size();
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

std::span<const double> Tensor::values() const {
    detail::require_defined(*this, "Tensor::values");
    return node_->values;
}

std::span<double> Tensor::values_mut() {
    detail::require_defined(*this, "Tensor::values_mut");
    return node_->values;
}

double Tensor::at(int n, int c, int y, int x) const {
    detail::require_defined(*this, "Tensor::at");
    return node_->values[flat_index(node_->shape, n, c, y, x)];
}

void Tensor::set(int n, int c, int y, int x, double value) {
    detail::require_defined(*this, "Tensor::set");
    if (!std::isfinite(value)) throw NumericError("Tensor::set: non-finite value");
    node_->values[flat_index(node_->shape, n, c, y, x)] = value;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
    detail::require_defined(*this, "Tensor::grad");
    if (node_->grad.empty())
        throw StateError("Tensor::grad: no gradient present (run backward first)");
    return node_->grad;
}

void Tensor::zero_grad() {
    detail::require_defined(*this, "Tensor::zero_grad");
    node_->grad.clear();
}

bool Tensor::has_graph() const { return node_ && static_cast<bool>(node_->backprop); }

void backward(const Tensor& loss) {
    using detail::Node;
    detail::require_defined(loss, "backward");
    auto root = detail::OpAccess::node(loss);
    if (!(root->shape == Shape4{1, 1, 1, 1}))
        throw DimensionError("backward: loss must have shape (1, 1, 1, 1), got " +
                             to_string(root->shape));
    if (root->consumed)
        throw StateError("backward: computation graph already consumed by a previous backward");
    if (!root->backprop && root->parents.empty())
        throw StateError("backward: no recorded computation graph on this tensor");

    // Post-order over parent edges; shared_ptrs keep every node alive while
    // closures are released below.
    std::vector<std::shared_ptr<Node>> order;
    std::unordered_set<Node*> seen;
    struct Frame {
        std::shared_ptr<Node> node;
        std::size_t next = 0;
    };
    std::vector<Frame> stack;
    stack.push_back({root});
    seen.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.node->parents.size()) {
            auto parent = f.node->parents[f.next++];
            if (seen.insert(parent.get()).second) stack.push_back({std::move(parent)});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] = 1.0;

    // Reverse post-order puts every node after all nodes it feeds.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = it->get();
        if (node->backprop) {
            if (node->grad.empty()) node->ensure_grad();
            node->backprop();
            node->backprop = nullptr;
        }
        node->parents.clear();
        node->consumed = true;
    }
}

} // namespace eyolo
