#pragma once

#include <cstddef>

#include "ussci/core/tensor.hpp"

namespace ussci {

struct Extent3 {
  std::size_t t = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  friend bool operator==(const Extent3&, const Extent3&) = default;
};

/// 3D convolution geometry. `output_padding` is only used by the transposed form,
/// where it extends the output on the far side so stride-2 layers can exactly
/// invert the extents of their strided counterpart.
struct ConvSpec {
  Extent3 kernel{1, 1, 1};
  Extent3 stride{1, 1, 1};
  Extent3 padding{0, 0, 0};
  Extent3 output_padding{0, 0, 0};
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;

  void validate() const;
  std::size_t kernel_volume() const { return kernel.t * kernel.h * kernel.w; }
};

// Weight layouts. conv3d: [kt,kh,kw,in,out]; transposed_conv3d: [kt,kh,kw,out,in],
// i.e. the weight of the convolution it is the adjoint of.
Shape conv3d_weight_shape(const ConvSpec& spec);
Shape transposed_conv3d_weight_shape(const ConvSpec& spec);

/// floor((in + 2*pad - kernel) / stride) + 1 per axis, channels -> out_channels.
Shape conv3d_output_shape(const Shape& input, const ConvSpec& spec);
/// (in - 1) * stride - 2*pad + kernel + output_padding per axis.
Shape transposed_conv3d_output_shape(const Shape& input, const ConvSpec& spec);

/// Cross-correlation of a [T,H,W,Cin] input (no kernel flip).
template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const ConvSpec& spec, const Tensor<T>& weight,
                 const Tensor<T>& bias);

/// Adjoint of conv3d in its input: with zero bias, <conv3d(x), y> == <x, transposed_conv3d(y)>.
template <typename T>
Tensor<T> transposed_conv3d(const Tensor<T>& input, const ConvSpec& spec, const Tensor<T>& weight,
                            const Tensor<T>& bias);

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
ConvGrads<T> conv3d_backward(const Tensor<T>& input, const ConvSpec& spec, const Tensor<T>& weight,
                             const Tensor<T>& upstream, bool need_input_grad = true);

template <typename T>
ConvGrads<T> transposed_conv3d_backward(const Tensor<T>& input, const ConvSpec& spec,
                                        const Tensor<T>& weight, const Tensor<T>& upstream,
                                        bool need_input_grad = true);

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& input, T slope);
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& input, T slope, const Tensor<T>& upstream);

/// Softmax along `axis` with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& input, std::size_t axis);
/// Needs the forward output, not the logits.
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& output, std::size_t axis, const Tensor<T>& upstream);

/// [n,d] x [d,d'] (+ bias[d']) -> [n,d'].
template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>* bias = nullptr);

template <typename T>
struct LinearGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;  // empty when the forward had no bias
};

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& input, const Tensor<T>& weight,
                               const Tensor<T>& upstream, bool has_bias);

/// Per-token normalization over the last axis: zero mean, unit variance, then scale/shift.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta);

template <typename T>
struct LayerNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <typename T>
LayerNormGrads<T> layer_norm_backward(const Tensor<T>& input, const Tensor<T>& gamma,
                                      const Tensor<T>& upstream);

inline constexpr double kLayerNormEps = 1e-5;

}  // namespace ussci
