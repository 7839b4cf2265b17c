#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace eyolo {

namespace detail {
struct Node;
struct OpAccess;
} // namespace detail

/// Dense rank-4 shape in (batch, channels, height, width) order.
struct Shape4 {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t count() const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
               static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
    bool operator==(const Shape4&) const = default;
};

std::string to_string(const Shape4& s);

/// Dense 64-bit float tensor with optional reverse-mode gradient.
///
/// A Tensor is a cheap handle onto a shared node. Ops on tensors record a
/// backward closure onto the result while gradients are enabled and any
/// input participates in a gradient path; backward() consumes that graph.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape4 shape, bool requires_grad = false);
    static Tensor full(Shape4 shape, double value, bool requires_grad = false);
    static Tensor from_values(Shape4 shape, std::vector<double> values,
                              bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    Shape4 shape() const;
    std::size_t size() const;
    bool requires_grad() const;

    std::span<const double> values() const;
    /// Mutable view of the payload. Intended for leaf tensors (weight
    /// updates); mutating a tensor inside a live graph invalidates it.
    std::span<double> values_mut();

    double at(int n, int c, int y, int x) const;
    void set(int n, int c, int y, int x, double value);

    bool has_grad() const;
    std::span<const double> grad() const;
    void zero_grad();

    /// True when a backward closure is recorded on this tensor.
    bool has_graph() const;

private:
    friend struct detail::OpAccess;
    friend void backward(const Tensor& loss);
    std::shared_ptr<detail::Node> node_;
};

/// Runs reverse-mode differentiation from a scalar (1,1,1,1) loss.
/// Populates grad on every tensor along the recorded graph and consumes
/// the graph; a second call on the same loss raises StateError.
void backward(const Tensor& loss);

/// Disables graph recording on the current thread while alive (inference).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_recording_enabled();

} // namespace eyolo
