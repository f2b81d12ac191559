#pragma once

// Forward and backward kernels for every layer kind. All kernels are
// explicitly instantiated for float and double.

#include <cstdint>
#include <vector>

#include "signcraft/rng.hpp"
#include "signcraft/tensor.hpp"

namespace signcraft {

enum class Phase { Train, Eval };

namespace ops {

template <typename T>
struct ConvGrads {
    BasicTensor<T> input;
    BasicTensor<T> weights;
    BasicTensor<T> bias;
};

/// Valid (unpadded) stride-1 convolution. input [N,C,H,W], weights
/// [O,C,KH,KW], bias [O] -> [N,O,H-KH+1,W-KW+1].
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias);

/// Gradients of conv2d_forward given the upstream gradient. When
/// `need_input_grad` is false the returned input gradient is empty.
template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_output, bool need_input_grad = true,
                             bool need_param_grads = true);

template <typename T>
struct PoolResult {
    BasicTensor<T> output;
    /// Flat input offset of the selected element for each output element.
    std::vector<std::uint32_t> argmax;
};

/// 2x2 window, stride 2, trailing odd row/column dropped. Ties go to the
/// first element in row-major order.
template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>& grad_output,
                                   const std::vector<std::uint32_t>& argmax,
                                   const Shape& input_shape);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input);

/// Gradient is passed where input > 0; zero at exactly 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_output);

template <typename T>
struct DropoutResult {
    BasicTensor<T> output;
    /// Per-element multiplier: 0 or 1/(1-rate). Empty in eval phase.
    BasicTensor<T> mask;
};

/// Inverted dropout. An element is kept when a uniform draw is >= rate.
/// Throws InvalidArgument unless 0 < rate < 1.
template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& input, double rate, Rng& rng,
                                 Phase phase);

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_output, const BasicTensor<T>& mask);

template <typename T>
struct DenseGrads {
    BasicTensor<T> input;
    BasicTensor<T> weights;
    BasicTensor<T> bias;
};

/// y = xW + b with x [N,F], W [F,M], b [M].
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_output, bool need_input_grad = true,
                             bool need_param_grads = true);

/// [N,C,H,W] -> [N,C*H*W]. Throws ShapeError for non rank-4 input.
template <typename T>
BasicTensor<T> flatten_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> flatten_backward(const BasicTensor<T>& grad_output, const Shape& input_shape);

/// Row-wise softmax with max subtraction. input [N,K].
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& input);

}  // namespace ops
}  // namespace signcraft
