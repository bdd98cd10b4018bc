#pragma once

// Minimal reverse-mode automatic differentiation.
//
// A Tensor is a cheap handle onto a graph node. Operations build the graph
// eagerly (values are computed immediately) and record a closure that pushes
// the node's gradient into its parents. backward() walks the graph in reverse
// topological order. Leaf tensors created with Tensor::parameter accumulate
// gradients across calls until zero_grad() is invoked.
//
// Only the operators the trajectory models need are provided; there is no
// broadcasting and every value is f64.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tplab::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {
struct Node;
}

class Tensor {
public:
    Tensor() = default;

    /// A value that never receives a gradient.
    static Tensor constant(Shape shape, std::vector<double> values);
    /// A leaf that accumulates gradients.
    static Tensor parameter(Shape shape, std::vector<double> values);
    static Tensor zeros(Shape shape);

    bool defined() const noexcept { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t size() const;
    std::span<const double> values() const;
    double operator[](std::size_t i) const { return values()[i]; }
    /// Scalar value; the tensor must hold exactly one element.
    double item() const;

    /// Mutable access is only granted on leaves (parameters and constants).
    std::span<double> mutable_values();

    bool requires_grad() const;
    bool is_leaf() const;
    bool has_grad() const;
    /// Empty span if no gradient has been accumulated yet.
    std::span<const double> grad() const;
    void zero_grad();

    /// Identity of the underlying node, for sharing checks.
    const void* id() const noexcept { return node_.get(); }

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) { }
    std::shared_ptr<detail::Node> node_;

    friend struct Access;
};

/// Gate order in the stacked LSTM weight rows: input, forget, candidate, output.
struct LstmCellParams {
    Tensor w_input;   // 4H x D
    Tensor w_hidden;  // 4H x H
    Tensor bias;      // 4H

    std::size_t input_dim() const;
    std::size_t hidden_dim() const;
};

struct LstmState {
    Tensor h;
    Tensor c;
};

// ---- operators -----------------------------------------------------------

/// y = W x + b, with x: [D], W: [O x D], b: [O].
Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// max(x, slope * x) elementwise. The derivative at exactly 0 is taken as 1.
Tensor leaky_relu(const Tensor& x, double slope = 0.1);

LstmState lstm_cell(const Tensor& x, const LstmState& state, const LstmCellParams& p);

/// Valid (unpadded, stride 1) cross-correlation.
/// x: [Cin x R x S], kernel: [Cout x Cin x KH x KW], bias: [Cout].
Tensor conv2d_valid(const Tensor& x, const Tensor& kernel, const Tensor& bias);

/// Concatenates along the leading axis; trailing dims must agree.
Tensor concat(std::span<const Tensor> xs);
Tensor concat(std::initializer_list<Tensor> xs);

/// Same values, new shape with equal element count.
Tensor reshape(const Tensor& x, Shape shape);

/// [R x C] -> [C x R].
Tensor transpose(const Tensor& x);

/// Elements [offset, offset + length) of a flattened tensor, as a 1-D tensor.
Tensor slice(const Tensor& x, std::size_t offset, std::size_t length);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
/// Sum of all elements, as a scalar.
Tensor sum(const Tensor& x);
/// Elementwise mean of equally shaped tensors.
Tensor mean(std::span<const Tensor> xs);

/// Lateral/longitudinal weights of the trajectory loss.
inline constexpr double kLateralWeight = 20.0;
inline constexpr double kLongitudinalWeight = 0.5;

/// Mean over rows of 20 (x_hat - x)^2 + 0.5 (y_hat - y)^2.
/// pred and truth: [T x 2], column 0 lateral, column 1 longitudinal.
Tensor weighted_mse(const Tensor& pred, const Tensor& truth);

/// Accumulates d loss / d leaf into every reachable leaf requiring grad.
void backward(const Tensor& loss);

// ---- optimizer -------------------------------------------------------------

struct AdamOptions {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamOptions options;
    std::int64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;

    /// Fresh zeroed accumulators for the given parameter list.
    static AdamState for_params(std::span<const Tensor> params, AdamOptions options = {});
};

/// One bias-corrected Adam update, in place. Every parameter must hold a
/// gradient and the state's accumulators must match the parameter shapes.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace tplab::ad
